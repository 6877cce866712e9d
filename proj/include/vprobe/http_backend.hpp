#pragma once

#include <memory>
#include <string>

#include "vprobe/backend.hpp"

namespace vprobe {

/// OpenAI-compatible completions or chat endpoint.
///
/// Next-token alternatives come from `logprobs`/`top_logprobs` with max_tokens 1 at temperature 0.
/// Sequence scoring needs a completions endpoint that honours `echo` with `max_tokens: 0`;
/// otherwise it raises CapabilityError. Transport failures, 5xx and 429 are retried with
/// exponential backoff and jitter.
class HttpBackend : public Backend {
 public:
  HttpBackend(BackendConfig config, std::shared_ptr<ResponseCache> cache = nullptr);

  const BackendConfig& config() const { return config_; }

 protected:
  json raw_top_logprobs(const std::string& prompt, int top_k) override;
  json raw_sequence(const std::string& prompt, const std::string& continuation) override;
  json raw_sample(const std::string& prompt, int n, double temperature, int max_tokens, std::uint64_t seed) override;
  int top_k() const override { return config_.top_logprobs; }
  std::string identity() const override { return config_.endpoint + "|" + config_.api + "|" + model(); }

 private:
  /// POSTs `body` to `route` under the endpoint. Returns the parsed JSON of a 2xx answer.
  /// Non-retryable 4xx answers throw `RejectedRequest` so callers can turn them into capability errors.
  json post(const std::string& route, const json& body);

  BackendConfig config_;
  std::string host_;       // scheme://host[:port]
  std::string base_path_;  // e.g. /v1
};

/// A 4xx answer other than 429.
class RejectedRequest : public TransportError {
 public:
  RejectedRequest(int status, const std::string& message) : TransportError(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

}  // namespace vprobe
