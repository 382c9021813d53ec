#include "fairuse/gateway_server.hpp"

#include "fairuse/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <string>
#include <thread>
#include <utility>

namespace fairuse {

namespace {

using json = nlohmann::json;

json decision_to_json(const RoutingDecision& decision) {
  json lookups = json::array();
  for (const auto& lookup : decision.lookups) {
    lookups.push_back({{"entity", lookup.entity},
                       {"status", std::string(to_string(lookup.status))},
                       {"source", lookup.source}});
  }
  return {{"route", std::string(to_string(decision.route))},
          {"entities", decision.flag.entities},
          {"lookups", std::move(lookups)},
          {"policy_id", decision.policy_id}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct GatewayServer::Impl {
  Gateway& gateway;
  httplib::Server server;
  std::thread runner;
  int bound_port = 0;

  Impl(Gateway& gw, const std::string& host, int port) : gateway(gw) {
    server.Post("/v1/guarded-completions",
                [this](const httplib::Request& req, httplib::Response& res) {
                  json body;
                  try {
                    body = json::parse(req.body);
                  } catch (const json::parse_error&) {
                    send_json(res, 400, {{"error", "request body is not valid JSON"}});
                    return;
                  }
                  if (!body.is_object() || !body.contains("prompt") ||
                      !body["prompt"].is_string()) {
                    send_json(res, 400, {{"error", "request needs a string prompt field"}});
                    return;
                  }
                  const auto result = gateway.handle_request(body["prompt"].get<std::string>());
                  if (result.ok) {
                    send_json(res, 200,
                              {{"reply", result.reply},
                               {"decision", decision_to_json(result.decision)}});
                  } else {
                    // The decision trace survives endpoint failures.
                    send_json(res, 502,
                              {{"error", result.error},
                               {"decision", decision_to_json(result.decision)}});
                  }
                });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    if (port == 0) {
      bound_port = server.bind_to_any_port(host);
      if (bound_port < 0) throw ConfigError("cannot bind an ephemeral port on " + host);
    } else {
      if (!server.bind_to_port(host, port)) {
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
      }
      bound_port = port;
    }
    runner = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~Impl() { shutdown(); }

  void shutdown() {
    if (server.is_running()) server.stop();
    if (runner.joinable()) runner.join();  // joins the worker pool, draining handlers
  }
};

GatewayServer::GatewayServer(Gateway& gateway, const std::string& host, int port)
    : impl_(std::make_unique<Impl>(gateway, host, port)) {}

GatewayServer::~GatewayServer() = default;

int GatewayServer::port() const { return impl_->bound_port; }

void GatewayServer::stop() { impl_->shutdown(); }

}  // namespace fairuse
