#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "vprobe/cache.hpp"
#include "vprobe/common.hpp"
#include "vprobe/io.hpp"

namespace vprobe {

/// Logprob assigned to a candidate missing from the returned alternatives, relative to the smallest observed one.
inline constexpr double kFloorGap = 2.0;

enum class BackendKind { Http, Mock };

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::string endpoint;
  std::string model = "mock";
  std::string api = "completions";  // completions | chat
  std::string auth_env;             // name of the environment variable holding the bearer token
  double timeout_s = 60.0;
  int max_retries = 5;
  int max_parallel = 4;
  int top_logprobs = 20;
  int backoff_ms = 500;
  json mock;  // MockModelSpec document when kind == Mock

  void validate() const;
};

BackendConfig backend_config_from_json(const json& j, const std::string& context);

enum class TokenEvidence { Observed, Floored };

/// Natural-log probabilities of candidate tokens at the first generated position.
struct TokenLogprobResult {
  std::map<std::string, double> logprobs;
  std::map<std::string, TokenEvidence> evidence;

  bool observed(const std::string& token) const;
  std::size_t floored_count() const;
};

struct SequenceScore {
  std::string continuation;
  double logprob_sum = 0.0;
  std::size_t tokens = 0;
};

/// Applies the flooring rule to a raw top-alternatives list.
/// Candidates absent from `top` get (min observed logprob) - kFloorGap and are flagged Floored.
TokenLogprobResult floor_candidates(const std::vector<std::pair<std::string, double>>& top,
                                    const std::vector<std::string>& candidates);

/// Uniform model access over three primitives.
///
/// Subclasses implement the raw_* hooks; this class owns caching, the request-hash keys,
/// candidate flooring and a bounded-parallelism dispatcher. Safe for concurrent use.
class Backend {
 public:
  Backend(std::string kind, std::string model, int max_parallel, std::shared_ptr<ResponseCache> cache);
  virtual ~Backend() = default;

  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  TokenLogprobResult next_token_logprobs(const std::string& prompt, const std::vector<std::string>& candidates);
  SequenceScore sequence_logprob(const std::string& prompt, const std::string& continuation);
  std::vector<std::string> sample_text(const std::string& prompt, int n, double temperature, int max_tokens);

  /// Runs fn(0..n-1) on at most max_parallel worker threads. Rethrows the first exception after all workers finish.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

  const std::string& model() const { return model_; }
  const std::string& kind() const { return kind_; }
  int max_parallel() const { return max_parallel_; }
  /// Seed forwarded to sampling requests and folded into their cache keys.
  void set_sampling_seed(std::uint64_t seed) { sampling_seed_ = seed; }
  std::uint64_t sampling_seed() const { return sampling_seed_; }

  std::size_t backend_calls() const { return calls_.load(); }
  std::size_t cache_hits() const { return hits_.load(); }
  std::size_t max_in_flight() const { return max_in_flight_.load(); }
  ResponseCache& cache() { return *cache_; }

 protected:
  /// {"top": [[token, logprob], ...]}
  virtual json raw_top_logprobs(const std::string& prompt, int top_k) = 0;
  /// {"tokens": [...], "logprobs": [...]} covering exactly the continuation.
  virtual json raw_sequence(const std::string& prompt, const std::string& continuation) = 0;
  /// {"texts": [...]} with n entries.
  virtual json raw_sample(const std::string& prompt, int n, double temperature, int max_tokens, std::uint64_t seed) = 0;
  virtual int top_k() const = 0;
  /// Extra identity folded into every cache key (e.g. a mock spec fingerprint).
  virtual std::string identity() const { return model_; }

 private:
  json cached_call(const std::string& primitive, const json& payload, const std::function<json()>& fetch);

  std::string kind_;
  std::string model_;
  int max_parallel_;
  std::shared_ptr<ResponseCache> cache_;
  std::counting_semaphore<> slots_;
  std::uint64_t sampling_seed_ = 0;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

struct MockContext;

/// Builds an HTTP or mock backend from config. `context` supplies the bank, references and
/// scenarios a mock needs to interpret prompts; it is ignored for HTTP backends.
std::unique_ptr<Backend> make_backend(const BackendConfig& config, std::shared_ptr<ResponseCache> cache,
                                      const MockContext& context);

}  // namespace vprobe
