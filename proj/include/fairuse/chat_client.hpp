#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace fairuse {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatEndpoint {
  std::string base_url;  // scheme://host:port
  std::string model = "default";
  std::string auth_token;  // optional bearer token
  std::chrono::milliseconds timeout{5000};
  int max_retries = 2;  // additional attempts, transport failures only
  std::size_t max_in_flight = 8;
};

// Adapter for chat-completion-style HTTP endpoints. Requests carry
// {model, messages, temperature}; the first choice's message content comes
// back. Concurrent callers are admitted up to max_in_flight; connection
// failures and 5xx responses are retried, anything else fails immediately
// with TransportError.
class ChatClient {
 public:
  explicit ChatClient(ChatEndpoint endpoint);
  ~ChatClient();
  ChatClient(ChatClient&&) noexcept;
  ChatClient& operator=(ChatClient&&) noexcept;
  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  std::string complete(const std::vector<ChatMessage>& messages, double temperature = 0.0);

  const ChatEndpoint& endpoint() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fairuse
