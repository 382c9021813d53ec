#include "fairuse/chat_client.hpp"

#include "fairuse/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <semaphore>
#include <utility>

namespace fairuse {

namespace {
using json = nlohmann::json;
}

struct ChatClient::Impl {
  ChatEndpoint endpoint;
  std::counting_semaphore<4096> slots;

  explicit Impl(ChatEndpoint ep)
      : endpoint(std::move(ep)),
        slots(static_cast<std::ptrdiff_t>(endpoint.max_in_flight == 0 ? 1
                                                                      : endpoint.max_in_flight)) {}
};

ChatClient::ChatClient(ChatEndpoint endpoint) : impl_(std::make_unique<Impl>(std::move(endpoint))) {}
ChatClient::~ChatClient() = default;
ChatClient::ChatClient(ChatClient&&) noexcept = default;
ChatClient& ChatClient::operator=(ChatClient&&) noexcept = default;

const ChatEndpoint& ChatClient::endpoint() const { return impl_->endpoint; }

std::string ChatClient::complete(const std::vector<ChatMessage>& messages, double temperature) {
  const ChatEndpoint& ep = impl_->endpoint;

  json body;
  body["model"] = ep.model;
  body["temperature"] = temperature;
  body["messages"] = json::array();
  for (const auto& msg : messages) {
    body["messages"].push_back({{"role", msg.role}, {"content", msg.content}});
  }
  const std::string payload = body.dump();

  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<4096>* slots;
    ~Release() { slots->release(); }
  } release{&impl_->slots};

  std::string last_error;
  const int attempts = 1 + std::max(0, ep.max_retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    httplib::Client cli(ep.base_url);
    cli.set_connection_timeout(ep.timeout);
    cli.set_read_timeout(ep.timeout);
    cli.set_write_timeout(ep.timeout);
    if (!ep.auth_token.empty()) cli.set_bearer_token_auth(ep.auth_token);

    auto res = cli.Post("/v1/chat/completions", payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;  // connection-level failure: retry
    }
    if (res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("chat endpoint " + ep.base_url + " returned status " +
                           std::to_string(res->status));
    }

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() || !reply["choices"][0].contains("message") ||
        !reply["choices"][0]["message"].contains("content") ||
        !reply["choices"][0]["message"]["content"].is_string()) {
      throw TransportError("malformed chat-completion response from " + ep.base_url);
    }
    return reply["choices"][0]["message"]["content"].get<std::string>();
  }
  throw TransportError("chat endpoint " + ep.base_url + " unavailable after " +
                       std::to_string(attempts) + " attempts (" + last_error + ")");
}

}  // namespace fairuse
