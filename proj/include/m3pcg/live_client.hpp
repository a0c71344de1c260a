#pragma once

#include <string>

#include <json.hpp>

#include "m3pcg/llm.hpp"

namespace m3pcg {

struct LiveClientConfig {
  // Full chat-completion URL, e.g. https://api.openai.com/v1/chat/completions
  std::string endpoint;
  std::string model;
  std::string api_key;
  int timeout_seconds = 120;
};

// Chat-completion body: system = instructions, user = history, one forced
// function tool carrying the level schema.
nlohmann::json build_chat_body(const LlmRequest& request, const std::string& model);

// Pulls the function-call arguments out of a chat-completion response. Handles
// both the "tool_calls" and the older "function_call" shapes.
std::string extract_function_arguments(const nlohmann::json& response);

struct EndpointParts {
  std::string scheme_host_port;  // "https://host:443"
  std::string path;              // "/v1/chat/completions"
};

EndpointParts split_endpoint(const std::string& url);

// Stateless: every call is a fresh single-turn conversation.
class LiveLlmClient : public LlmClient {
 public:
  explicit LiveLlmClient(LiveClientConfig config);
  std::string complete(const LlmRequest& request) override;

 private:
  LiveClientConfig config_;
  EndpointParts endpoint_;
};

}  // namespace m3pcg
