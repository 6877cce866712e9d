#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "helpers.hpp"
#include "oracles.hpp"
#include "vprobe/pipelines.hpp"

using namespace vprobe;

namespace {

const Distribution kP{0.1, 0.2, 0.3, 0.4};

MockContext context() {
  MockContext ctx;
  ctx.bank.questions.push_back(testutil::importance_question());
  return ctx;
}

MockModelSpec spec(json extra = json::object()) {
  json j = {{"model", "m"}, {"seed", 1}, {"distributions", {{"Q001", kP}}}};
  j.update(extra);
  return mock_spec_from_json(j, "test");
}

RenderedPrompt prompt(const std::string& variant = "letters", const std::string& style = "default",
                      std::optional<Persona> persona = std::nullopt) {
  for (const auto& s : builtin_styles()) {
    if (s.id == style) return render(testutil::importance_question(), s, standard_variant(variant, 4), persona);
  }
  throw std::runtime_error("style");
}

void expect_probs(const Distribution& got, const Distribution& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "option " << i;
}

// Counts calls and holds each one briefly so overlapping calls are observable.
class SlowBackend : public Backend {
 public:
  explicit SlowBackend(int max_parallel) : Backend("slow", "slow", max_parallel, nullptr) {}
  std::atomic<int> active{0};
  std::atomic<int> peak{0};

 protected:
  json raw_top_logprobs(const std::string&, int) override { return {{"top", json::array({json::array({"A", -0.1})})}}; }
  json raw_sequence(const std::string&, const std::string&) override { return {{"tokens", {"x"}}, {"logprobs", {-1.0}}}; }
  json raw_sample(const std::string& prompt, int n, double, int, std::uint64_t) override {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return {{"texts", std::vector<std::string>(static_cast<std::size_t>(n), prompt)}};
  }
  int top_k() const override { return 5; }
};

}  // namespace

TEST(Flooring, MissingCandidatesSitBelowObserved) {
  const auto r = floor_candidates({{"A", -1.0}, {"x", -3.0}}, {"A", "B"});
  EXPECT_TRUE(r.observed("A"));
  EXPECT_FALSE(r.observed("B"));
  EXPECT_DOUBLE_EQ(r.logprobs.at("B"), -3.0 - kFloorGap);
  EXPECT_EQ(r.floored_count(), 1u);
  EXPECT_THROW(floor_candidates({}, {"A"}), EmptyResponseError);
}

TEST(MockBackend, TopLogprobsCarryDistribution) {
  MockBackend b(spec(), context());
  const auto rp = prompt();
  const auto res = b.next_token_logprobs(rp.text, candidate_tokens(rp));
  EXPECT_NEAR(res.logprobs.at("A"), std::log(0.9 * 0.1 * 0.75), 1e-12);
  EXPECT_NEAR(res.logprobs.at(" D"), std::log(0.9 * 0.4 * 0.25), 1e-12);
  expect_probs(score_token(res, rp).probs, kP, 1e-12);
}

TEST(MockBackend, ReversedVariantStillCanonical) {
  MockBackend b(spec(), context());
  const auto rp = prompt("letters_reversed");
  const auto res = b.next_token_logprobs(rp.text, candidate_tokens(rp));
  EXPECT_NEAR(res.logprobs.at("A"), std::log(0.9 * 0.4 * 0.75), 1e-12);
  expect_probs(score_token(res, rp).probs, kP, 1e-12);
}

TEST(MockBackend, SmallTopKFloorsLabels) {
  MockBackend b(spec(), context(), nullptr, 1, 3);
  const auto rp = prompt();
  const auto res = b.next_token_logprobs(rp.text, candidate_tokens(rp));
  EXPECT_EQ(res.floored_count(), 5u);
  const auto rep = score_token(res, rp);
  EXPECT_TRUE(is_distribution(rep.probs));
  EXPECT_EQ(majority_answer(rep), 3u);
}

TEST(MockBackend, SequenceWithoutTailRecoversDistribution) {
  MockBackend b(spec(), context());
  const auto rep = probe(prompt("digits"), Method::Sequence, b);
  expect_probs(rep.probs, kP, 1e-12);
}

TEST(MockBackend, SequenceTokensAndTail) {
  MockBackend b(spec({{"tail_token_logprob", -0.5}}), context());
  const auto rp = prompt();
  const auto s = b.sequence_logprob(rp.text, " A. Very important");
  ASSERT_EQ(mock_tokenize(" A. Very important"), (std::vector<std::string>{" A", ".", " Very", " important"}));
  EXPECT_EQ(s.tokens, 4u);
  EXPECT_NEAR(s.logprob_sum, std::log(0.1) - 1.5, 1e-12);
  const auto other = b.sequence_logprob(rp.text, " nonsense here");
  EXPECT_NEAR(other.logprob_sum, 2 * std::log(1e-4), 1e-9);
}

TEST(MockBackend, SequenceCapability) {
  MockBackend b(spec({{"supports_sequence", false}}), context());
  EXPECT_THROW(b.sequence_logprob(prompt().text, " A"), CapabilityError);
}

TEST(MockBackend, SamplingFollowsDistribution) {
  MockBackend b(spec(), context());
  const auto rep = probe(prompt(), Method::Text, b, SamplingSettings{4000, 1.0, 16});
  EXPECT_LT(oracle::l1(rep.probs, kP), 0.06);
  EXPECT_EQ(rep.diagnostics.invalid, 0u);
}

TEST(MockBackend, TemperatureSharpens) {
  MockBackend b(spec(), context());
  const auto rep = probe(prompt(), Method::Text, b, SamplingSettings{4000, 0.5, 16});
  Distribution sharp{0.01, 0.04, 0.09, 0.16};
  sharp = normalized(sharp);
  EXPECT_LT(oracle::l1(rep.probs, sharp), 0.06);
}

TEST(MockBackend, ZeroTemperatureIsArgmax) {
  MockBackend b(spec(), context());
  const auto rp = prompt("letters_reversed");
  const auto texts = b.sample_text(rp.text, 5, 0.0, 16);
  EXPECT_EQ(texts, std::vector<std::string>(5, "A"));
}

TEST(MockBackend, VerboseAnswersAreExtractable) {
  MockBackend b(spec({{"format", "verbose"}}), context());
  const auto rp = prompt();
  for (const auto& t : b.sample_text(rp.text, 20, 1.0, 16)) {
    EXPECT_TRUE(t.starts_with("My answer is ("));
    EXPECT_TRUE(extract_label(t, rp).has_value()) << t;
  }
}

TEST(MockBackend, RefusalsCountAsInvalid) {
  MockBackend b(spec({{"refusal_rate", 1.0}}), context());
  const auto rep = probe(prompt(), Method::Text, b, SamplingSettings{10, 1.0, 16});
  EXPECT_EQ(rep.diagnostics.invalid, 10u);
  expect_probs(rep.probs, {0.25, 0.25, 0.25, 0.25}, 1e-15);
}

TEST(MockBackend, PersonaRuleMixesTarget) {
  MockBackend b(spec({{"persona_rules", {{{"group", "Mexico"}, {"target", "option"}, {"option", 0}, {"strength", 0.5}}}}}),
                context());
  const auto with = probe(prompt("letters", "default", Persona{"Mexico"}), Method::Token, b);
  expect_probs(with.probs, {0.55, 0.1, 0.15, 0.2}, 1e-12);
  const auto other = probe(prompt("letters", "default", Persona{"Egypt"}), Method::Token, b);
  expect_probs(other.probs, kP, 1e-12);
}

TEST(MockBackend, LabelBiasFollowsLabelNotOption) {
  MockBackend b(spec({{"label_bias", {{"A", std::log(4.0)}}}}), context());
  const auto id = probe(prompt("letters"), Method::Token, b);
  expect_probs(id.probs, normalized(Distribution{0.4, 0.2, 0.3, 0.4}), 1e-12);
  const auto rev = probe(prompt("letters_reversed"), Method::Token, b);
  expect_probs(rev.probs, normalized(Distribution{0.1, 0.2, 0.3, 1.6}), 1e-12);
}

TEST(MockBackend, StyleRuleReverses) {
  MockBackend b(spec({{"style_rules", {{{"contains", "Certainly!"}, {"reverse", true}}}}}), context());
  expect_probs(probe(prompt("letters", "prefixed"), Method::Token, b).probs, {0.4, 0.3, 0.2, 0.1}, 1e-12);
  expect_probs(probe(prompt("letters", "default"), Method::Token, b).probs, kP, 1e-12);
}

TEST(MockBackend, SeededBaseIsStable) {
  MockBackend a(mock_spec_from_json({{"seed", 9}}, "t"), context());
  MockBackend b(mock_spec_from_json({{"seed", 9}}, "t"), context());
  MockBackend c(mock_spec_from_json({{"seed", 10}}, "t"), context());
  const auto& q = testutil::importance_question();
  EXPECT_EQ(a.base_distribution(q), b.base_distribution(q));
  EXPECT_NE(a.base_distribution(q), c.base_distribution(q));
  EXPECT_TRUE(is_distribution(a.base_distribution(q)));
}

TEST(MockBackend, UnknownPromptAndBadSpec) {
  MockBackend b(spec(), context());
  EXPECT_THROW(b.next_token_logprobs("What is the capital of France?", {"A"}), ValidationError);
  EXPECT_EQ(b.sample_text("What is the capital of France?", 1, 1.0, 8).front(), "I cannot answer that.");
  EXPECT_THROW(mock_spec_from_json({{"temperature", 1}}, "t"), SchemaError);
  EXPECT_THROW(mock_spec_from_json({{"distributions", {{"Q001", {0.5, 0.6}}}}}, "t"), ValidationError);
}

TEST(Cache, SecondBackendHitsSharedCache) {
  auto cache = std::make_shared<ResponseCache>();
  MockBackend a(spec(), context(), cache);
  const auto rp = prompt();
  const auto first = probe(rp, Method::Text, a);
  EXPECT_EQ(a.backend_calls(), 1u);
  MockBackend b(spec(), context(), cache);
  const auto second = probe(rp, Method::Text, b);
  EXPECT_EQ(b.backend_calls(), 0u);
  EXPECT_EQ(b.cache_hits(), 1u);
  EXPECT_EQ(first.probs, second.probs);
  MockBackend c(spec({{"refusal_rate", 0.3}}), context(), cache);
  probe(rp, Method::Text, c);
  EXPECT_EQ(c.backend_calls(), 1u);
}

TEST(Cache, SamplingSeedIsPartOfKey) {
  auto cache = std::make_shared<ResponseCache>();
  MockBackend a(spec(), context(), cache);
  const auto rp = prompt();
  const auto s1 = a.sample_text(rp.text, 30, 1.0, 16);
  a.set_sampling_seed(5);
  const auto s2 = a.sample_text(rp.text, 30, 1.0, 16);
  EXPECT_EQ(a.backend_calls(), 2u);
  EXPECT_NE(s1, s2);
}

TEST(Cache, PersistsAcrossInstancesAndSkipsCorruptLines) {
  testutil::TempDir dir;
  const auto file = dir / "responses.jsonl";
  const auto rp = prompt();
  Distribution cold;
  {
    MockBackend a(spec(), context(), std::make_shared<ResponseCache>(file));
    cold = probe(rp, Method::Token, a).probs;
  }
  {
    std::ofstream out(file, std::ios::app);
    out << "{not json\n" << R"({"key": "x"})" << '\n';
  }
  auto cache = std::make_shared<ResponseCache>(file);
  EXPECT_EQ(cache->corrupt_lines(), 2u);
  EXPECT_EQ(cache->size(), 1u);
  MockBackend b(spec(), context(), cache);
  EXPECT_EQ(probe(rp, Method::Token, b).probs, cold);
  EXPECT_EQ(b.backend_calls(), 0u);
  const auto report = verify_cache_file(file);
  EXPECT_EQ(report.records, 1u);
  EXPECT_EQ(report.corrupt, 2u);
  EXPECT_FALSE(report.ok());
}

TEST(Cache, VerifyDetectsConflicts) {
  testutil::TempDir dir;
  const auto file = dir / "c.jsonl";
  std::ofstream out(file);
  const json a = {{"key", "k"}, {"primitive", "p"}, {"payload_hash", "h"}, {"response", 1}, {"ts", 0}};
  json b = a;
  b["response"] = 2;
  out << a.dump() << '\n' << a.dump() << '\n' << b.dump() << '\n';
  out.close();
  const auto report = verify_cache_file(file);
  EXPECT_EQ(report.records, 3u);
  EXPECT_EQ(report.duplicates, 1u);
  EXPECT_EQ(report.conflicts, 1u);
  EXPECT_THROW(verify_cache_file(dir / "missing.jsonl"), ValidationError);
}

TEST(Concurrency, InFlightCallsStayWithinLimit) {
  SlowBackend b(2);
  b.parallel_for(24, [&](std::size_t i) { b.sample_text("p" + std::to_string(i), 1, 1.0, 4); });
  EXPECT_EQ(b.backend_calls(), 24u);
  EXPECT_LE(b.peak.load(), 2);
  EXPECT_LE(b.max_in_flight(), 2u);
  EXPECT_GE(b.max_in_flight(), 1u);
}

TEST(Concurrency, ParallelForRunsEveryIndexAndRethrows) {
  SlowBackend b(3);
  std::vector<std::atomic<int>> hits(40);
  EXPECT_THROW(b.parallel_for(40,
                              [&](std::size_t i) {
                                ++hits[i];
                                if (i == 7) throw TransportError("boom");
                              }),
               TransportError);
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(BackendConfig, ParsesAndValidates) {
  const auto c = backend_config_from_json({{"kind", "http"}, {"endpoint", "http://localhost:1"}, {"model", "x"}}, "t");
  EXPECT_EQ(c.kind, BackendKind::Http);
  EXPECT_THROW(backend_config_from_json({{"kind", "http"}, {"model", "x"}}, "t"), ValidationError);
  EXPECT_THROW(backend_config_from_json({{"kind", "grpc"}}, "t"), SchemaError);
  EXPECT_THROW(backend_config_from_json({{"max_parallel", 0}}, "t"), ValidationError);
  EXPECT_THROW(backend_config_from_json({{"colour", 1}}, "t"), SchemaError);
}
