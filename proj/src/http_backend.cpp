#include <json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

#include "nbr/error.hpp"
#include "nbr/llm_client.hpp"

namespace nbr {

namespace {

class HttpBackend final : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw Error("http backend: empty base url");
  }

  std::string name() const override { return "http:" + config_.base_url; }

  LlmResponse complete_once(const LlmRequest& req) override {
    nlohmann::ordered_json body;
    body["model"] = req.model_name;
    auto& messages = body["messages"] = nlohmann::ordered_json::array();
    for (const ChatTurn& turn : req.turns)
      messages.push_back({{"role", role_name(turn.role)}, {"content", turn.content}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto result = client.Post("/v1/chat/completions", headers, body.dump(),
                              "application/json");
    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
          err == httplib::Error::Write)
        throw RetryableBackendError(RetryableBackendError::Kind::timeout,
                                    "http timeout: " + httplib::to_string(err));
      throw RetryableBackendError(RetryableBackendError::Kind::transport,
                                  "http transport failure: " + httplib::to_string(err));
    }
    const std::string excerpt = result->body.substr(0, 200);
    if (result->status >= 500)
      throw RetryableBackendError(
          RetryableBackendError::Kind::http_status,
          "http status " + std::to_string(result->status) + ": " + excerpt);
    if (result->status < 200 || result->status >= 300)
      throw BackendError("http status " + std::to_string(result->status) + ": " + excerpt);

    LlmResponse resp;
    resp.raw_payload = result->body;
    try {
      const auto payload = nlohmann::json::parse(result->body);
      const auto& choice = payload.at("choices").at(0);
      resp.text = choice.at("message").at("content").get<std::string>();
      const std::string reason = choice.value("finish_reason", "stop");
      resp.finish_reason =
          reason == "length" ? FinishReason::length : FinishReason::stop;
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("http response parse failure: ") + e.what() +
                         "; body: " + excerpt);
    }
    return resp;
  }

 private:
  HttpBackendConfig config_;
};

}  // namespace

std::unique_ptr<LlmBackend> make_http_backend(HttpBackendConfig config) {
  return std::make_unique<HttpBackend>(std::move(config));
}

}  // namespace nbr
