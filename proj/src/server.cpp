#include "babelbot/server.hpp"

#include "babelbot/error.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <deque>
#include <regex>
#include <thread>

namespace babelbot::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Routing

namespace {

int status_for(ErrorCode code) {
  switch (code) {
  case ErrorCode::SessionUnknown:
    return 404;
  case ErrorCode::SessionBusy:
  case ErrorCode::NoPendingPlan:
    return 409;
  case ErrorCode::LlmTimeout:
    return 503;
  case ErrorCode::LlmProtocolError:
    return 502;
  case ErrorCode::EmptyText:
  case ErrorCode::InvalidFormat:
  case ErrorCode::PreconditionFailed:
    return 400;
  default:
    return 500;
  }
}

HttpReply error_reply(int status, std::string_view code, const std::string &message) {
  return {status, {{"error", code}, {"message", message}}};
}

std::string strip_query(const std::string &target) { return target.substr(0, target.find('?')); }

json trace_summary(const exec::ExecutionTrace &t) { return exec::to_json(t); }

std::string text_field(const json &body, std::initializer_list<const char *> keys) {
  for (const char *k : keys) {
    if (body.contains(k) && body[k].is_string()) {
      return body[k].get<std::string>();
    }
  }
  fail(ErrorCode::InvalidFormat, std::string("request body needs a \"") + *keys.begin() + "\" string");
}

} // namespace

std::string event_stream_session(const std::string &target) {
  static const std::regex re(R"(^/sessions/([A-Za-z0-9_-]+)/events$)");
  std::smatch m;
  const std::string path = strip_query(target);
  return std::regex_match(path, m, re) ? m[1].str() : std::string();
}

std::uint64_t event_stream_after(const std::string &target) {
  static const std::regex re(R"([?&]after=(\d+))");
  std::smatch m;
  return std::regex_search(target, m, re) ? std::stoull(m[1].str()) : 0;
}

HttpReply handle_request(SessionManager &manager, const std::string &method, const std::string &target,
                         const std::string &body, const std::string &authorization) {
  const auto &token = manager.config().bearer_token;
  if (!token.empty() && authorization != "Bearer " + token) {
    return error_reply(401, "Unauthorized", "missing or wrong bearer token");
  }
  static const std::regex session_route(R"(^/sessions/([A-Za-z0-9_-]+)/(command|confirm|abort|state|language)$)");
  const std::string path = strip_query(target);
  try {
    json in = json::object();
    if (!body.empty()) {
      in = json::parse(body);
      if (!in.is_object()) {
        return error_reply(400, "InvalidFormat", "request body must be a JSON object");
      }
    }
    if (path == "/maps") {
      if (method != "GET") {
        return error_reply(405, "MethodNotAllowed", "use GET");
      }
      json maps = json::array();
      for (const auto &[name, grid] : manager.resources().maps) {
        json m = grid.to_json();
        m["name"] = name;
        maps.push_back(std::move(m));
      }
      return {200, {{"maps", maps}, {"default", manager.config().default_map}}};
    }
    if (path == "/sessions") {
      if (method != "POST") {
        return error_reply(405, "MethodNotAllowed", "use POST");
      }
      SessionOptions opt;
      opt.id = in.value("id", "");
      opt.map = in.value("map", "");
      if (in.contains("language") && in["language"].is_string()) {
        opt.language_override = in["language"].get<std::string>();
      }
      const auto id = manager.create_session(opt);
      return {201, manager.state(id)};
    }
    std::smatch m;
    if (!std::regex_match(path, m, session_route)) {
      return error_reply(404, "NotFound", "no route for " + path);
    }
    const std::string id = m[1].str();
    const std::string action = m[2].str();
    const bool get = action == "state";
    if ((get && method != "GET") || (!get && method != "POST")) {
      return error_reply(405, "MethodNotAllowed", get ? "use GET" : "use POST");
    }
    if (action == "state") {
      return {200, manager.state(id)};
    }
    if (action == "command") {
      const auto r = manager.submit_command(id, text_field(in, {"text"}));
      json out{{"reply_text", r.reply_text},       {"language", r.language},   {"summary", r.summary},
               {"plan", r.plan},                   {"needs_confirmation", r.needs_confirmation},
               {"executing", r.executing}};
      if (r.trace) {
        out["trace"] = trace_summary(*r.trace);
      }
      return {200, out};
    }
    if (action == "confirm") {
      const auto r = manager.confirm(id, text_field(in, {"text", "reply"}));
      json out{{"executed", r.executed}, {"reprompt", r.reprompt}, {"reply_text", r.reply_text},
               {"language", r.language}};
      if (r.trace) {
        out["trace"] = trace_summary(*r.trace);
      }
      return {200, out};
    }
    if (action == "abort") {
      return {200, {{"aborting", manager.abort(id)}}};
    }
    const auto tag = manager.set_language(id, text_field(in, {"code"}));
    return {200, {{"language", tag.code}, {"state", manager.state(id)["language"]}}};
  } catch (const json::exception &e) {
    return error_reply(400, "InvalidFormat", e.what());
  } catch (const Error &e) {
    HttpReply r = error_reply(status_for(e.code()), to_string(e.code()), e.what());
    if (e.code() == ErrorCode::LlmTimeout || e.code() == ErrorCode::LlmProtocolError) {
      r.body["retry"] = true;
    }
    return r;
  } catch (const std::exception &e) {
    return error_reply(500, "Internal", e.what());
  }
}

// ---------------------------------------------------------------------------
// Transport

namespace {

constexpr std::size_t kMaxQueuedFrames = 20000;

class EventSocket : public std::enable_shared_from_this<EventSocket> {
public:
  EventSocket(tcp::socket socket, SessionManager &manager, std::string session, std::uint64_t after)
      : ws_(std::move(socket)), manager_(manager), session_(std::move(session)), after_(after) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&EventSocket::on_accept, shared_from_this()));
  }

private:
  void on_accept(beast::error_code ec) {
    if (ec) {
      return;
    }
    ws_.text(true);
    std::weak_ptr<EventSocket> weak = weak_from_this();
    try {
      token_ = manager_.subscribe(
          session_,
          [weak](const Event &e) {
            if (auto self = weak.lock()) {
              self->enqueue(to_json(e).dump());
            }
          },
          after_);
      subscribed_ = true;
    } catch (const Error &) {
      ws_.async_close(websocket::close_code::policy_error, [self = shared_from_this()](beast::error_code) {});
      return;
    }
    do_read();
  }

  void enqueue(std::string frame) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), frame = std::move(frame)]() mutable {
      if (self->closed_) {
        return;
      }
      if (self->queue_.size() >= kMaxQueuedFrames) {
        // a reader this far behind has stopped listening
        self->shutdown();
        return;
      }
      self->queue_.push_back(std::move(frame));
      if (self->queue_.size() == 1) {
        self->do_write();
      }
    });
  }

  void do_write() {
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->shutdown();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) {
        self->do_write();
      }
    });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->shutdown();
        return;
      }
      // clients have nothing to say on this channel; drop whatever arrives
      self->buffer_.consume(self->buffer_.size());
      self->do_read();
    });
  }

  void shutdown() {
    if (closed_) {
      return;
    }
    closed_ = true;
    queue_.clear();
    if (subscribed_) {
      manager_.unsubscribe(session_, token_);
    }
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

  websocket::stream<beast::tcp_stream> ws_;
  SessionManager &manager_;
  std::string session_;
  std::uint64_t after_;
  std::uint64_t token_ = 0;
  bool subscribed_ = false;
  bool closed_ = false;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
  HttpConnection(tcp::socket socket, SessionManager &manager, asio::thread_pool &workers)
      : stream_(std::move(socket)), manager_(manager), workers_(workers) {}

  void run() {
    asio::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::do_read, shared_from_this()));
  }

private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    const std::string target(req_.target());
    const std::string auth(req_[http::field::authorization]);
    if (websocket::is_upgrade(req_)) {
      upgrade(target, auth);
      return;
    }
    if (req_.method() == http::verb::options) {
      respond({204, json(nullptr)});
      return;
    }
    // session calls may block on the language model, so they leave the I/O threads
    asio::post(workers_, [self = shared_from_this(), target, auth] {
      auto reply = handle_request(self->manager_, std::string(self->req_.method_string()), target, self->req_.body(),
                                  auth);
      asio::post(self->stream_.get_executor(),
                 [self, reply = std::move(reply)]() mutable { self->respond(std::move(reply)); });
    });
  }

  void upgrade(const std::string &target, const std::string &auth) {
    const auto &token = manager_.config().bearer_token;
    const std::string id = event_stream_session(target);
    HttpReply refusal;
    if (!token.empty() && auth != "Bearer " + token) {
      refusal = {401, {{"error", "Unauthorized"}}};
    } else if (id.empty()) {
      refusal = {404, {{"error", "NotFound"}}};
    } else if (!manager_.has_session(id)) {
      refusal = {404, {{"error", to_string(ErrorCode::SessionUnknown)}}};
    } else {
      stream_.expires_never();
      std::make_shared<EventSocket>(stream_.release_socket(), manager_, id, event_stream_after(target))
          ->run(std::move(req_));
      return;
    }
    keep_alive_ = false;
    respond(std::move(refusal));
  }

  void respond(HttpReply reply) {
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(reply.status),
                                                                     req_.version());
    res->set(http::field::server, "babelbot");
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_headers, "Authorization, Content-Type");
    res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    if (!reply.body.is_null()) {
      res->set(http::field::content_type, "application/json");
      res->body() = reply.body.dump();
    }
    res->keep_alive(keep_alive_ && req_.keep_alive());
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) {
        return;
      }
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  SessionManager &manager_;
  asio::thread_pool &workers_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  bool keep_alive_ = true;
};

} // namespace

struct GatewayServer::Impl {
  Impl(SessionManager &m, int io_threads, int worker_threads)
      : manager(m), workers(static_cast<std::size_t>(std::max(1, worker_threads))), io_count(std::max(1, io_threads)),
        acceptor(asio::make_strand(ioc)), heartbeat(ioc) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == asio::error::operation_aborted) {
          return;
        }
      } else {
        std::make_shared<HttpConnection>(std::move(socket), manager, workers)->run();
      }
      accept();
    });
  }

  void tick() {
    heartbeat.expires_after(std::chrono::milliseconds(100));
    heartbeat.async_wait([this](beast::error_code ec) {
      if (ec) {
        return;
      }
      asio::post(workers, [this] { manager.pump_heartbeats(); });
      tick();
    });
  }

  SessionManager &manager;
  asio::io_context ioc;
  asio::thread_pool workers;
  int io_count;
  tcp::acceptor acceptor;
  asio::steady_timer heartbeat;
  std::vector<std::thread> threads;
  std::atomic<int> bound_port{0};
  bool running = false;
};

GatewayServer::GatewayServer(SessionManager &manager, int io_threads, int worker_threads)
    : impl_(std::make_unique<Impl>(manager, io_threads, worker_threads)) {}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::start(const std::string &host, int port) {
  if (impl_->running) {
    return impl_->bound_port;
  }
  beast::error_code ec;
  const auto address = asio::ip::make_address(host, ec);
  if (ec) {
    fail(ErrorCode::InvalidFormat, "bad listen address " + host);
  }
  const tcp::endpoint endpoint(address, static_cast<unsigned short>(port));
  auto &acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) {
    acc.set_option(asio::socket_base::reuse_address(true), ec);
  }
  if (!ec) {
    acc.bind(endpoint, ec);
  }
  if (!ec) {
    acc.listen(asio::socket_base::max_listen_connections, ec);
  }
  if (ec) {
    fail(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port) + ": " + ec.message());
  }
  impl_->bound_port = acc.local_endpoint().port();
  impl_->running = true;
  impl_->accept();
  impl_->tick();
  for (int i = 0; i < impl_->io_count; ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
  return impl_->bound_port;
}

void GatewayServer::stop() {
  if (!impl_ || !impl_->running) {
    return;
  }
  impl_->running = false;
  asio::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->heartbeat.cancel();
  });
  impl_->ioc.stop();
  for (auto &t : impl_->threads) {
    t.join();
  }
  impl_->threads.clear();
  impl_->workers.join();
}

int GatewayServer::port() const { return impl_->bound_port; }

} // namespace babelbot::gateway
