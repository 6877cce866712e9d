#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vprobe/cli.hpp"
#include "vprobe/metrics.hpp"
#include "vprobe/mock_backend.hpp"
#include "vprobe/pipelines.hpp"
#include "vprobe/scoring.hpp"

namespace py = pybind11;
using namespace vprobe;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
const PromptStyle& style_by_id(const std::string& id) {
  for (const auto& s : builtin_styles()) {
    if (s.id == id) return s;
  }
  throw ValidationError("unknown prompt style '" + id + "'");
}

RenderedPrompt render_json(const std::string& question, const std::string& style, const std::string& variant,
                           const std::optional<std::string>& persona) {
  const auto q = question_from_json(json::parse(question), "question");
  std::optional<Persona> p;
  if (persona) p = Persona{*persona};
  return render(q, style_by_id(style), standard_variant(variant, q.size()), p);
}

std::string rendered_json(const RenderedPrompt& r) {
  return json{{"text", r.text},
              {"label_map", r.label_map},
              {"valid_labels", r.valid_labels},
              {"answer_sequences", r.answer_sequences}}
      .dump();
}

py::tuple correlation_tuple(const Correlation& c) { return py::make_tuple(c.r, c.p_value, c.n); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the vprobe value-probing harness";

  // Translators run newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<UndefinedCorrelationError>(m, "UndefinedCorrelationError", PyExc_ArithmeticError);

  m.def("load_question_bank", [](const std::string& path) {
    const auto bank = load_question_bank(path);
    json qs = json::array();
    for (const auto& q : bank.questions) qs.push_back(to_json(q));
    return json{{"source", bank.source}, {"version", bank.version}, {"questions", qs}}.dump();
  });

  m.def(
      "render",
      [](const std::string& question, const std::string& style, const std::string& variant,
         const std::optional<std::string>& persona) { return rendered_json(render_json(question, style, variant, persona)); },
      py::arg("question"), py::arg("style") = "default", py::arg("variant") = "letters", py::arg("persona") = py::none());

  m.def(
      "score_text",
      [](const std::vector<std::string>& samples, const std::string& question, const std::string& variant) {
        return score_text(samples, render_json(question, "default", variant, std::nullopt)).probs;
      },
      py::arg("samples"), py::arg("question"), py::arg("variant") = "letters");

  m.def("score_sequence", [](const std::vector<double>& logprob_sums, const std::vector<std::size_t>& tokens) {
    if (logprob_sums.size() != tokens.size()) throw PreconditionError("logprob_sums and tokens differ in length");
    std::vector<SequenceScore> scores;
    for (std::size_t i = 0; i < tokens.size(); ++i) scores.push_back({"", logprob_sums[i], tokens[i]});
    return score_sequence(scores).probs;
  });

  m.def("js_distance", [](const Distribution& p, const Distribution& q) { return js_distance(p, q); });
  m.def("js_divergence", [](const Distribution& p, const Distribution& q) { return js_divergence(p, q); });
  m.def("emd_ordinal", [](const Distribution& p, const Distribution& q) { return emd_ordinal(p, q); });
  m.def("alignment", [](const Distribution& p, const Distribution& q) { return alignment(p, q).value; });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return correlation_tuple(pearson(x, y)); });
  m.def("spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) { return correlation_tuple(spearman(x, y)); });

  m.def(
      "mock_probe",
      [](const std::string& spec, const std::string& question, const std::string& method, const std::string& style,
         const std::string& variant, int n) {
        const auto q = question_from_json(json::parse(question), "question");
        MockContext ctx;
        ctx.bank.questions.push_back(q);
        MockBackend backend(mock_spec_from_json(json::parse(spec), "mock spec"), ctx);
        const auto rendered = render(q, style_by_id(style), standard_variant(variant, q.size()));
        return probe(rendered, method_from_string(method), backend, SamplingSettings{n, 1.0, 16}).probs;
      },
      py::arg("spec"), py::arg("question"), py::arg("method") = "token", py::arg("style") = "default",
      py::arg("variant") = "letters", py::arg("n") = 10);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
