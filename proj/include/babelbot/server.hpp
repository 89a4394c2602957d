#pragma once

#include "babelbot/gateway.hpp"

#include <json.hpp>

#include <memory>
#include <string>

namespace babelbot::gateway {

struct HttpReply {
  int status = 200;
  nlohmann::json body = nlohmann::json::object();
};

/// Routes one HTTP request to the session manager. Errors come back as
/// {"error": code, "message": ...} with a matching status.
HttpReply handle_request(SessionManager &manager, const std::string &method, const std::string &target,
                         const std::string &body, const std::string &authorization = {});

/// "/sessions/<id>/events" -> id; empty when the target is not an event stream.
std::string event_stream_session(const std::string &target);
/// Value of ?after=N, 0 when absent.
std::uint64_t event_stream_after(const std::string &target);

/// HTTP and WebSocket front end on one port.
class GatewayServer {
public:
  explicit GatewayServer(SessionManager &manager, int io_threads = 2, int worker_threads = 4);
  ~GatewayServer();
  GatewayServer(const GatewayServer &) = delete;
  GatewayServer &operator=(const GatewayServer &) = delete;

  /// Binds host:port (port 0 picks a free one) and starts serving. Returns the bound port.
  int start(const std::string &host, int port);
  void stop();
  [[nodiscard]] int port() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace babelbot::gateway
