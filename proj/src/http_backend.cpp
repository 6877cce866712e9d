#include "vprobe/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace vprobe {

namespace {

bool retryable(int status) { return status == 429 || status >= 500; }

json first_choice(const json& response) {
  if (!response.contains("choices") || !response.at("choices").is_array() || response.at("choices").empty()) {
    throw EmptyResponseError("endpoint returned no choices");
  }
  return response.at("choices").at(0);
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config, std::shared_ptr<ResponseCache> cache)
    : Backend("http", config.model, config.max_parallel, std::move(cache)), config_(std::move(config)) {
  config_.validate();
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) throw ValidationError("backend " + model() + ": endpoint needs a scheme: " + config_.endpoint);
  const auto path = config_.endpoint.find('/', scheme + 3);
  host_ = config_.endpoint.substr(0, path);
  base_path_ = path == std::string::npos ? "" : config_.endpoint.substr(path);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

json HttpBackend::post(const std::string& route, const json& body) {
  httplib::Client client(host_);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (!token || !*token) {
      throw ValidationError("backend " + model() + ": environment variable " + config_.auth_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  const std::string path = base_path_ + route;
  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::uniform_real_distribution<double> jitter(0.5, 1.5);
      const double ms = config_.backoff_ms * std::pow(2.0, attempt - 1) * jitter(jitter_rng);
      std::this_thread::sleep_for(std::chrono::microseconds(static_cast<long long>(ms * 1000.0)));
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return json::parse(res->body);
      } catch (const json::exception&) {
        throw EmptyResponseError("backend " + model() + ": response body is not JSON");
      }
    }
    if (!retryable(res->status)) {
      throw RejectedRequest(res->status, "backend " + model() + ": " + path + " answered " + std::to_string(res->status) +
                                             ": " + res->body.substr(0, 300));
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw TransportError("backend " + model() + ": " + host_ + path + " failed after " +
                       std::to_string(config_.max_retries) + " attempts (" + last_error + ")");
}

json HttpBackend::raw_top_logprobs(const std::string& prompt, int top_k) {
  json top = json::array();
  try {
    if (config_.api == "chat") {
      const json body{{"model", model()},
                      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                      {"max_tokens", 1},
                      {"temperature", 0},
                      {"logprobs", true},
                      {"top_logprobs", top_k}};
      const json choice = first_choice(post("/chat/completions", body));
      const json& content = choice.at("logprobs").at("content");
      if (content.empty()) throw EmptyResponseError("backend " + model() + ": no generated token");
      for (const auto& alt : content.at(0).at("top_logprobs")) {
        top.push_back(json::array({alt.at("token"), alt.at("logprob")}));
      }
    } else {
      const json body{{"model", model()}, {"prompt", prompt}, {"max_tokens", 1}, {"temperature", 0}, {"logprobs", top_k}};
      const json choice = first_choice(post("/completions", body));
      const json& alts = choice.at("logprobs").at("top_logprobs");
      if (alts.empty() || alts.at(0).is_null()) throw EmptyResponseError("backend " + model() + ": no generated token");
      for (const auto& [tok, lp] : alts.at(0).items()) top.push_back(json::array({tok, lp}));
    }
  } catch (const json::exception& e) {
    throw EmptyResponseError("backend " + model() + ": malformed logprobs in response: " + e.what());
  }
  return {{"top", top}};
}

json HttpBackend::raw_sequence(const std::string& prompt, const std::string& continuation) {
  if (config_.api == "chat") {
    throw CapabilityError("sequence_logprob is not supported by chat endpoints (backend " + model() + ")");
  }
  const json body{{"model", model()},    {"prompt", prompt + continuation}, {"max_tokens", 0},
                  {"temperature", 0},    {"echo", true},                    {"logprobs", 0}};
  json response;
  try {
    response = post("/completions", body);
  } catch (const RejectedRequest& e) {
    throw CapabilityError("sequence_logprob: endpoint rejected echo scoring: " + std::string(e.what()));
  }
  json tokens = json::array();
  json logprobs = json::array();
  try {
    const json choice = first_choice(response);
    if (!choice.contains("logprobs") || choice.at("logprobs").is_null()) {
      throw CapabilityError("sequence_logprob: endpoint returned no echoed logprobs (backend " + model() + ")");
    }
    const json& lp = choice.at("logprobs");
    if (!lp.contains("text_offset") || !lp.contains("token_logprobs")) {
      throw CapabilityError("sequence_logprob: endpoint returned no token offsets (backend " + model() + ")");
    }
    const auto& offsets = lp.at("text_offset");
    const auto& values = lp.at("token_logprobs");
    const auto& toks = lp.at("tokens");
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (offsets.at(i).get<std::size_t>() < prompt.size()) continue;
      if (values.at(i).is_null()) throw CapabilityError("sequence_logprob: continuation token without logprob");
      tokens.push_back(toks.at(i));
      logprobs.push_back(values.at(i));
    }
  } catch (const json::exception& e) {
    throw EmptyResponseError("backend " + model() + ": malformed echo response: " + e.what());
  }
  if (tokens.empty()) throw EmptyResponseError("backend " + model() + ": echo response covers no continuation tokens");
  return {{"tokens", tokens}, {"logprobs", logprobs}};
}

json HttpBackend::raw_sample(const std::string& prompt, int n, double temperature, int max_tokens, std::uint64_t seed) {
  json texts = json::array();
  try {
    if (config_.api == "chat") {
      const json body{{"model", model()},
                      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                      {"n", n},
                      {"temperature", temperature},
                      {"max_tokens", max_tokens},
                      {"seed", seed}};
      const json response = post("/chat/completions", body);
      first_choice(response);
      for (const auto& c : response.at("choices")) texts.push_back(c.at("message").value("content", ""));
    } else {
      const json body{{"model", model()}, {"prompt", prompt},          {"n", n},
                      {"temperature", temperature}, {"max_tokens", max_tokens}, {"seed", seed}};
      const json response = post("/completions", body);
      first_choice(response);
      for (const auto& c : response.at("choices")) texts.push_back(c.at("text"));
    }
  } catch (const json::exception& e) {
    throw EmptyResponseError("backend " + model() + ": malformed completion response: " + e.what());
  }
  return {{"texts", texts}};
}

}  // namespace vprobe
