#ifndef BLOOMQA_HTTP_TRANSPORT_HPP
#define BLOOMQA_HTTP_TRANSPORT_HPP

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "bloomqa/gateway.hpp"

namespace bloomqa {

struct EndpointConfig {
  std::string base_url;              // e.g. "https://api.example.com"
  std::string path = "/v1/chat/completions";
  std::string model_name;
  std::string credential_env = "BLOOMQA_API_KEY";
  int timeout_seconds = 60;
};

// Chat-completions transport over HTTP. Provider-agnostic: base URL, model
// name and credential come from config / environment.
class HttpTransport : public Transport {
public:
  explicit HttpTransport(EndpointConfig config) : config_(std::move(config)) {}

  std::string send(const ChatRequest& request,
                   const std::string& model_id) override {
    nlohmann::ordered_json body;
    body["model"] = model_id.empty() ? config_.model_name : model_id;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "system"}, {"content", request.system_prompt}},
         {{"role", "user"}, {"content", request.user_prompt}}});
    body["temperature"] = request.temperature;
    body["top_p"] = request.top_p;
    body["max_tokens"] = request.max_tokens;

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.credential_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);

    auto res = client.Post(config_.path, headers, body.dump(),
                           "application/json");
    if (!res)
      throw GatewayError("transport failure: " +
                         httplib::to_string(res.error()));
    if (res->status != 200)
      throw GatewayError("endpoint returned status " +
                         std::to_string(res->status));
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content");
    } catch (const std::exception& e) {
      throw GatewayError(std::string("unparseable completion payload: ") +
                         e.what());
    }
  }

private:
  EndpointConfig config_;
};

}  // namespace bloomqa

#endif  // BLOOMQA_HTTP_TRANSPORT_HPP
