#include "semiauto/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>

#include "semiauto/error.hpp"
#include "semiauto/wire.hpp"

namespace semiauto::server {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

struct Route {
  std::string session_id;
  wire::Endpoint endpoint;
};

std::optional<Route> parse_route(std::string_view target) {
  static const std::regex pattern("^/session/([A-Za-z0-9_.-]{1,128})/(user|operator)$");
  std::cmatch m;
  if (!std::regex_match(target.begin(), target.end(), m, pattern)) return std::nullopt;
  const std::string id = m[1].str();
  if (id == "." || id == "..") return std::nullopt;
  return Route{id, m[2].str() == "user" ? wire::Endpoint::kUser : wire::Endpoint::kOperator};
}

}  // namespace

class Session;

struct SessionServer::Impl : std::enable_shared_from_this<SessionServer::Impl> {
  explicit Impl(ServerOptions o) : options(std::move(o)) {}

  void do_accept();
  void close_all();

  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::function<void(const std::string&)> closed_callback;
};

namespace {

using ServerImpl = SessionServer::Impl;

}  // namespace

// One WebSocket client. Writes are queued so each client sees frames in the
// order the session produced them.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(beast::tcp_stream stream, std::weak_ptr<Session> session, wire::Endpoint endpoint)
      : ws_(std::move(stream)), session_(std::move(session)), endpoint_(endpoint) {}

  void accept(http::request<http::string_body> request);
  void send(std::string frame) {
    if (closed_) return;
    queue_.push_back(std::move(frame));
    if (accepted_ && queue_.size() == 1) write_next();
  }
  // Closes after the pending frames are written.
  void finish() {
    if (closed_) return;
    closing_ = true;
    if (accepted_ && queue_.empty()) close_now();
  }

 private:
  void read_next();
  void write_next();
  void close_now();
  void lost();

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::weak_ptr<Session> session_;
  wire::Endpoint endpoint_;
  bool accepted_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

// Single writer for one session: the engine, its log file and its tick
// timer. Every call runs on the server loop.
class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(ServerImpl& server, std::string id, std::ofstream log)
      : server_(server),
        id_(id),
        channel_(id, server.options.config),
        log_(std::move(log)),
        timer_(server.ioc) {}

  void begin() {
    t0_ = Clock::now();
    channel_.engine().set_sink([this](const SessionEvent& e) {
      log_ << encode_event(e) << '\n';
      log_.flush();
    });
    deliver(channel_.open(0));
    schedule_tick();
  }

  bool occupied(wire::Endpoint e) const {
    return e == wire::Endpoint::kUser ? user_ != nullptr : operator_ != nullptr;
  }

  // The session_start frame goes first to whichever client joins.
  void attach(wire::Endpoint e, std::shared_ptr<Connection> c) {
    wire::WireMessage hello = greeting_;
    hello.t_ms = now();
    c->send(wire::encode(hello));
    if (e == wire::Endpoint::kUser) {
      user_ = std::move(c);
    } else {
      operator_ = std::move(c);
      channel_.operator_connected();
    }
  }

  void inbound(wire::Endpoint from, const std::string& text) {
    if (finished_) return;
    std::vector<wire::Outbound> out;
    try {
      out = channel_.handle_inbound(from, wire::decode(text), now());
    } catch (const Error& e) {
      const auto to = from == wire::Endpoint::kUser ? wire::Recipient::kUser
                                                    : wire::Recipient::kOperator;
      out.push_back({to, wire::make_error(id_, now(), error_code_name(e.code()), e.what())});
    }
    deliver(out);
    if (channel_.ended()) finish();
  }

  void detached(wire::Endpoint e, const Connection* c) {
    if (e == wire::Endpoint::kUser) {
      if (user_.get() != c) return;
      user_.reset();
      if (!finished_) {
        deliver(channel_.close(now()));
        finish();
      }
    } else {
      if (operator_.get() != c) return;
      operator_.reset();
      if (!finished_) channel_.operator_disconnected(now());
    }
  }

  void shutdown() {
    if (finished_) return;
    deliver(channel_.close(now()));
    finish();
  }

 private:
  Millis now() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0_).count();
  }

  void schedule_tick() {
    ++tick_index_;
    const Millis at = tick_index_ * server_.options.config.server.tick_ms;
    timer_.expires_at(t0_ + std::chrono::milliseconds(at));
    timer_.async_wait([self = shared_from_this(), at](beast::error_code ec) {
      if (ec || self->finished_) return;
      // Scheduled on the nominal grid, stamped when it actually runs.
      self->deliver(self->channel_.tick(std::max(at, self->now())));
      if (self->channel_.ended()) {
        self->finish();
      } else {
        self->schedule_tick();
      }
    });
  }

  void deliver(const std::vector<wire::Outbound>& out) {
    for (const auto& o : out) {
      if (o.message.type == "session_start") greeting_ = o.message;
      const std::string frame = wire::encode(o.message);
      if (user_ && o.reaches(wire::Endpoint::kUser)) user_->send(frame);
      if (operator_ && o.reaches(wire::Endpoint::kOperator)) operator_->send(frame);
    }
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    timer_.cancel();
    channel_.engine().set_sink(nullptr);
    log_.close();
    if (user_) user_->finish();
    if (operator_) operator_->finish();
    auto self = shared_from_this();
    server_.sessions.erase(id_);
    if (server_.closed_callback) server_.closed_callback(id_);
  }

  ServerImpl& server_;
  std::string id_;
  wire::SessionChannel channel_;
  std::ofstream log_;
  net::steady_timer timer_;
  Clock::time_point t0_;
  Millis tick_index_ = 0;
  std::shared_ptr<Connection> user_;
  std::shared_ptr<Connection> operator_;
  wire::WireMessage greeting_;
  bool finished_ = false;
};

void Connection::accept(http::request<http::string_body> request) {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
    if (ec) {
      self->lost();
      return;
    }
    self->accepted_ = true;
    if (!self->queue_.empty()) {
      self->write_next();
    } else if (self->closing_) {
      self->close_now();
    }
    self->read_next();
  });
}

void Connection::read_next() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->lost();
      return;
    }
    std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    if (auto s = self->session_.lock()) s->inbound(self->endpoint_, text);
    if (!self->closed_) self->read_next();
  });
}

void Connection::write_next() {
  ws_.text(true);
  ws_.async_write(net::buffer(queue_.front()),
                  [self = shared_from_this()](beast::error_code ec, std::size_t) {
                    if (ec) {
                      self->lost();
                      return;
                    }
                    self->queue_.pop_front();
                    if (!self->queue_.empty()) {
                      self->write_next();
                    } else if (self->closing_) {
                      self->close_now();
                    }
                  });
}

void Connection::close_now() {
  if (closed_) return;
  closed_ = true;
  ws_.async_close(websocket::close_code::normal,
                  [self = shared_from_this()](beast::error_code) {});
}

void Connection::lost() {
  const bool was_closed = closed_;
  closed_ = true;
  queue_.clear();
  if (auto s = session_.lock()) s->detached(endpoint_, this);
  if (!was_closed) {
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }
}

namespace {

// Reads the HTTP upgrade request and routes it, or answers with an error
// status.
class Handshake : public std::enable_shared_from_this<Handshake> {
 public:
  Handshake(std::shared_ptr<ServerImpl> server, tcp::socket socket)
      : server_(std::move(server)), stream_(std::move(socket)) {}

  void run() {
    stream_.expires_after(std::chrono::seconds(10));
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) self->route();
                     });
  }

 private:
  void refuse(http::status status, std::string reason) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::content_type, "text/plain");
    res->keep_alive(false);
    res->body() = std::move(reason);
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code, std::size_t) {
                        beast::error_code ignored;
                        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                      });
  }

  void route() {
    if (!websocket::is_upgrade(request_)) {
      refuse(http::status::bad_request, "websocket upgrade required\n");
      return;
    }
    const auto route = parse_route(std::string_view(request_.target().data(),
                                                    request_.target().size()));
    if (!route) {
      refuse(http::status::not_found, "expected /session/<id>/user or /session/<id>/operator\n");
      return;
    }
    auto& server = *server_;
    std::shared_ptr<Session> session;
    if (auto it = server.sessions.find(route->session_id); it != server.sessions.end()) {
      session = it->second;
      if (session->occupied(route->endpoint)) {
        refuse(http::status::conflict, "endpoint already connected\n");
        return;
      }
    } else {
      const auto path = server.options.log_dir / (route->session_id + ".jsonl");
      if (std::filesystem::exists(path)) {
        refuse(http::status::conflict, "session log already exists\n");
        return;
      }
      std::ofstream log(path, std::ios::binary);
      if (!log) {
        refuse(http::status::internal_server_error, "cannot open session log\n");
        return;
      }
      session = std::make_shared<Session>(server, route->session_id, std::move(log));
      server.sessions.emplace(route->session_id, session);
      session->begin();
    }
    stream_.expires_never();
    auto connection = std::make_shared<Connection>(std::move(stream_), session, route->endpoint);
    session->attach(route->endpoint, connection);
    connection->accept(std::move(request_));
  }

  std::shared_ptr<ServerImpl> server_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

void SessionServer::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc),
                        [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
                          if (ec) {
                            if (ec == net::error::operation_aborted) return;
                          } else {
                            std::make_shared<Handshake>(self, std::move(socket))->run();
                          }
                          if (self->acceptor.is_open()) self->do_accept();
                        });
}

void SessionServer::Impl::close_all() {
  auto open = sessions;
  for (auto& [id, session] : open) session->shutdown();
}

SessionServer::SessionServer(ServerOptions options)
    : impl_(std::make_shared<Impl>(std::move(options))) {
  impl_->options.config.validate();
}

SessionServer::~SessionServer() {
  impl_->close_all();
  impl_->sessions.clear();
}

void SessionServer::start() {
  std::filesystem::create_directories(impl_->options.log_dir);
  const tcp::endpoint endpoint(net::ip::make_address(impl_->options.address),
                               impl_->options.port);
  auto& acceptor = impl_->acceptor;
  acceptor.open(endpoint.protocol());
  acceptor.set_option(net::socket_base::reuse_address(true));
  acceptor.bind(endpoint);
  acceptor.listen(net::socket_base::max_listen_connections);
  impl_->do_accept();
}

std::uint16_t SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::run() {
  auto guard = net::make_work_guard(impl_->ioc);
  impl_->ioc.run();
}

void SessionServer::stop() {
  net::post(impl_->ioc, [impl = impl_] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    impl->close_all();
    impl->ioc.stop();
  });
}

void SessionServer::on_session_closed(std::function<void(const std::string&)> callback) {
  impl_->closed_callback = std::move(callback);
}

}  // namespace semiauto::server
