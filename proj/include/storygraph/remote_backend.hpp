#pragma once

#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "storygraph/backend.hpp"

namespace storygraph {

struct RemoteConfig {
  std::string base_url;                     // http://host:port
  std::string api_key_env = "STORYGRAPH_API_KEY";  // variable holding the bearer token, read per call
  double timeout_s = 60.0;
  int retries = 2;                          // extra attempts after transport errors, 429 and 5xx
  std::chrono::milliseconds backoff{500};   // doubled after every failed attempt
  std::set<Capability> capabilities = {Capability::Text, Capability::Audio, Capability::Image, Capability::Video};
};

namespace detail {

inline std::string decode_base64(std::string encoded) {
  using namespace boost::archive::iterators;
  using Decoder = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::size_t padding = 0;
  while (!encoded.empty() && encoded.back() == '=') {
    encoded.pop_back();
    ++padding;
  }
  try {
    return std::string(Decoder(encoded.cbegin()), Decoder(encoded.cend()));
  } catch (const std::exception&) {
    throw Error(ErrorCode::BackendFailure, "payload", "payload is not valid base64");
  }
}

}  // namespace detail

// Wire protocol: POST {base_url}/v1/{task} with body
//   {"prompt": ..., "inputs": {...}}
// answered by
//   {"text": ..., "payload_base64": ..., "metadata": {...}}
// where every field of the answer is optional. The API key never leaves the
// environment variable; it is not stored in any project or log.
class RemoteBackend : public GenerativeBackend {
 public:
  explicit RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    if (!config_.base_url.starts_with("http://")) {
      throw Error(ErrorCode::PreconditionFailed, config_.base_url, "remote backend URL must start with http://");
    }
  }

  std::string name() const override { return "remote"; }
  std::set<Capability> capabilities() const override { return config_.capabilities; }
  const RemoteConfig& config() const noexcept { return config_; }

  BackendResponse complete(const BackendRequest& request) const override {
    httplib::Client client(config_.base_url);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_s));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string body = ordered_json{{"prompt", request.prompt}, {"inputs", request.inputs}}.dump();
    const std::string path = "/v1/" + request.task;

    std::string last_problem;
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      auto result = client.Post(path, headers, body, "application/json");
      if (!result) {
        const auto error = result.error();
        // a read that outlives the timeout surfaces as a read error
        last_problem = error == httplib::Error::Read || error == httplib::Error::ConnectionTimeout
                           ? "timeout after " + std::to_string(config_.timeout_s) + " s"
                           : "transport error: " + httplib::to_string(error);
        continue;
      }
      if (result->status == 429 || result->status >= 500) {
        last_problem = "HTTP " + std::to_string(result->status);
        continue;
      }
      if (result->status != 200) {
        throw Error(ErrorCode::BackendFailure, request.task,
                    "HTTP " + std::to_string(result->status) + " from " + path + ": " + result->body.substr(0, 200));
      }
      return parse_answer(request.task, result->body);
    }
    const int attempts = config_.retries + 1;
    throw Error(ErrorCode::BackendFailure, request.task,
                last_problem + " (" + std::to_string(attempts) + (attempts == 1 ? " attempt)" : " attempts)"));
  }

 private:
  static BackendResponse parse_answer(const std::string& task, const std::string& body) {
    ordered_json answer;
    try {
      answer = ordered_json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BackendFailure, task, std::string("answer is not JSON: ") + e.what());
    }
    if (!answer.is_object()) throw Error(ErrorCode::BackendFailure, task, "answer is not a JSON object");
    BackendResponse response;
    if (answer.contains("text") && answer["text"].is_string()) response.text = answer["text"].get<std::string>();
    if (answer.contains("payload_base64") && answer["payload_base64"].is_string()) {
      response.payload = detail::decode_base64(answer["payload_base64"].get<std::string>());
    }
    if (answer.contains("metadata") && answer["metadata"].is_object()) response.metadata = answer["metadata"];
    return response;
  }

  RemoteConfig config_;
};

}  // namespace storygraph
