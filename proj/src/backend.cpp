#include "vprobe/backend.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "vprobe/common.hpp"
#include "vprobe/http_backend.hpp"
#include "vprobe/mock_backend.hpp"

namespace vprobe {

void BackendConfig::validate() const {
  if (model.empty()) throw ValidationError("backend: model name must be non-empty");
  if (max_parallel < 1) throw ValidationError("backend " + model + ": max_parallel must be >= 1");
  if (max_retries < 1) throw ValidationError("backend " + model + ": max_retries must be >= 1");
  if (top_logprobs < 1) throw ValidationError("backend " + model + ": top_logprobs must be >= 1");
  if (timeout_s <= 0) throw ValidationError("backend " + model + ": timeout_s must be positive");
  if (kind == BackendKind::Http) {
    if (endpoint.empty()) throw ValidationError("backend " + model + ": http backend needs an endpoint");
    if (api != "completions" && api != "chat") throw ValidationError("backend " + model + ": api must be completions or chat");
  }
}

BackendConfig backend_config_from_json(const json& j, const std::string& context) {
  require_known_keys(j, {"kind", "endpoint", "model", "api", "auth_env", "timeout_s", "max_retries", "max_parallel",
                         "top_logprobs", "backoff_ms", "mock"},
                     context);
  BackendConfig c;
  try {
    const std::string kind = j.value("kind", "mock");
    if (kind == "http") {
      c.kind = BackendKind::Http;
    } else if (kind == "mock") {
      c.kind = BackendKind::Mock;
    } else {
      throw SchemaError(context + ": kind must be 'http' or 'mock'");
    }
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.api = j.value("api", c.api);
    c.auth_env = j.value("auth_env", c.auth_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_parallel = j.value("max_parallel", c.max_parallel);
    c.top_logprobs = j.value("top_logprobs", c.top_logprobs);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    if (j.contains("mock")) c.mock = j.at("mock");
  } catch (const json::exception& e) {
    throw SchemaError(context + ": " + e.what());
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  }
  return c;
}

bool TokenLogprobResult::observed(const std::string& token) const {
  auto it = evidence.find(token);
  return it != evidence.end() && it->second == TokenEvidence::Observed;
}

std::size_t TokenLogprobResult::floored_count() const {
  return static_cast<std::size_t>(
      std::count_if(evidence.begin(), evidence.end(), [](const auto& e) { return e.second == TokenEvidence::Floored; }));
}

TokenLogprobResult floor_candidates(const std::vector<std::pair<std::string, double>>& top,
                                    const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw PreconditionError("next_token_logprobs needs at least one candidate");
  if (top.empty()) throw EmptyResponseError("backend returned no next-token alternatives");
  std::map<std::string, double> observed;
  double min_lp = std::numeric_limits<double>::infinity();
  for (const auto& [tok, lp] : top) {
    // Keep the highest logprob if a tokenizer reports the same surface string twice.
    auto [it, inserted] = observed.try_emplace(tok, lp);
    if (!inserted) it->second = std::max(it->second, lp);
    min_lp = std::min(min_lp, lp);
  }
  TokenLogprobResult out;
  for (const auto& c : candidates) {
    if (auto it = observed.find(c); it != observed.end()) {
      out.logprobs[c] = it->second;
      out.evidence[c] = TokenEvidence::Observed;
    } else {
      out.logprobs[c] = min_lp - kFloorGap;
      out.evidence[c] = TokenEvidence::Floored;
    }
  }
  return out;
}

Backend::Backend(std::string kind, std::string model, int max_parallel, std::shared_ptr<ResponseCache> cache)
    : kind_(std::move(kind)),
      model_(std::move(model)),
      max_parallel_(max_parallel),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      slots_(max_parallel) {
  if (max_parallel < 1) throw ValidationError("max_parallel must be >= 1");
}

json Backend::cached_call(const std::string& primitive, const json& payload, const std::function<json()>& fetch) {
  const std::string body = payload.dump();
  const std::string key = sha256_hex(kind_ + "\n" + identity() + "\n" + primitive + "\n" + body);
  if (auto hit = cache_->get(key)) {
    ++hits_;
    return *hit;
  }
  slots_.acquire();
  const std::size_t now = ++in_flight_;
  std::size_t prev = max_in_flight_.load();
  while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
  }
  ++calls_;
  json response;
  try {
    response = fetch();
  } catch (...) {
    --in_flight_;
    slots_.release();
    throw;
  }
  --in_flight_;
  slots_.release();
  cache_->put(key, primitive, sha256_hex(body), response);
  return response;
}

TokenLogprobResult Backend::next_token_logprobs(const std::string& prompt, const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw PreconditionError("next_token_logprobs needs at least one candidate");
  const int k = top_k();
  const json payload = {{"prompt", prompt}, {"top_logprobs", k}};
  const json raw = cached_call("next_token_logprobs", payload, [&] { return raw_top_logprobs(prompt, k); });
  std::vector<std::pair<std::string, double>> top;
  for (const auto& entry : raw.at("top")) top.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<double>());
  return floor_candidates(top, candidates);
}

SequenceScore Backend::sequence_logprob(const std::string& prompt, const std::string& continuation) {
  if (continuation.empty()) throw PreconditionError("sequence_logprob needs a non-empty continuation");
  const json payload = {{"prompt", prompt}, {"continuation", continuation}};
  const json raw = cached_call("sequence_logprob", payload, [&] { return raw_sequence(prompt, continuation); });
  SequenceScore s;
  s.continuation = continuation;
  for (const auto& lp : raw.at("logprobs")) s.logprob_sum += lp.get<double>();
  s.tokens = raw.at("logprobs").size();
  if (s.tokens == 0) throw EmptyResponseError("backend scored zero continuation tokens");
  return s;
}

std::vector<std::string> Backend::sample_text(const std::string& prompt, int n, double temperature, int max_tokens) {
  if (n < 1) throw PreconditionError("sample_text needs n >= 1");
  if (temperature < 0) throw PreconditionError("sample_text needs temperature >= 0");
  const json payload = {{"prompt", prompt},
                        {"n", n},
                        {"temperature", temperature},
                        {"max_tokens", max_tokens},
                        {"seed", sampling_seed_}};
  const json raw =
      cached_call("sample_text", payload, [&] { return raw_sample(prompt, n, temperature, max_tokens, sampling_seed_); });
  auto texts = raw.at("texts").get<std::vector<std::string>>();
  if (texts.empty()) throw EmptyResponseError("backend returned no samples");
  return texts;
}

void Backend::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(max_parallel_));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config, std::shared_ptr<ResponseCache> cache,
                                      const MockContext& context) {
  config.validate();
  if (config.kind == BackendKind::Http) return std::make_unique<HttpBackend>(config, std::move(cache));
  MockModelSpec spec = mock_spec_from_json(config.mock.is_null() ? json::object() : config.mock, "mock spec");
  if (spec.model.empty()) spec.model = config.model;
  return std::make_unique<MockBackend>(std::move(spec), context, std::move(cache), config.max_parallel,
                                       config.top_logprobs);
}

}  // namespace vprobe
