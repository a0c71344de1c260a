#include "m3pcg/live_client.hpp"

#include <httplib.h>

namespace m3pcg {

nlohmann::json build_chat_body(const LlmRequest& request, const std::string& model) {
  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", request.instruction_text}});
  if (!request.history_text.empty()) {
    messages.push_back({{"role", "user"}, {"content", request.history_text}});
  }
  return {
      {"model", model},
      {"temperature", request.temperature},
      {"messages", messages},
      {"tools",
       {{{"type", "function"},
         {"function",
          {{"name", kLevelFunctionName},
           {"description", "Return the player type, the reasoning and the next 3 levels."},
           {"parameters", request.function_schema}}}}}},
      {"tool_choice", {{"type", "function"}, {"function", {{"name", kLevelFunctionName}}}}},
  };
}

std::string extract_function_arguments(const nlohmann::json& response) {
  try {
    const auto& message = response.at("choices").at(0).at("message");
    if (message.contains("tool_calls") && !message.at("tool_calls").empty()) {
      return message.at("tool_calls").at(0).at("function").at("arguments").get<std::string>();
    }
    if (message.contains("function_call")) {
      return message.at("function_call").at("arguments").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("unexpected chat-completion shape: ") + e.what());
  }
  throw MalformedResponse("chat completion carried no function call");
}

EndpointParts split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

LiveLlmClient::LiveLlmClient(LiveClientConfig config)
    : config_(std::move(config)), endpoint_(split_endpoint(config_.endpoint)) {
  if (config_.model.empty()) throw std::invalid_argument("live client needs a model name");
}

std::string LiveLlmClient::complete(const LlmRequest& request) {
  httplib::Client client(endpoint_.scheme_host_port);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto body = build_chat_body(request, config_.model).dump();
  const auto res = client.Post(endpoint_.path, headers, body, "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TransportError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  nlohmann::json response;
  try {
    response = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedResponse(std::string("endpoint body is not JSON: ") + e.what());
  }
  return extract_function_arguments(response);
}

}  // namespace m3pcg
