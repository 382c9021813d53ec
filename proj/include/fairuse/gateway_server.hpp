#pragma once

#include "fairuse/pipeline.hpp"

#include <memory>
#include <string>

namespace fairuse {

// HTTP front for a Gateway:
//   POST /v1/guarded-completions  {"prompt": ...}  ->  {"reply", "decision"}
//   GET  /healthz                                  ->  {"status": "ok"}
// Port 0 binds an ephemeral port; the bound port is reported by port().
// stop() and the destructor finish in-flight requests before returning.
class GatewayServer {
 public:
  GatewayServer(Gateway& gateway, const std::string& host, int port);
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  int port() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fairuse
