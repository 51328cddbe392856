#include "semiauto/client.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>

namespace semiauto::client {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

}  // namespace

struct WireClient::Impl {
  net::io_context ioc{1};
  websocket::stream<beast::tcp_stream> ws{ioc};
  beast::flat_buffer buffer;
  std::deque<wire::WireMessage> inbox;
  bool reading = false;
  bool closed = false;

  void read_next() {
    reading = true;
    ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
      reading = false;
      if (ec) {
        closed = true;
        return;
      }
      auto text = beast::buffers_to_string(buffer.data());
      buffer.consume(buffer.size());
      inbox.push_back(wire::decode(text));
      read_next();
    });
  }
};

WireClient::WireClient(const std::string& host, std::uint16_t port,
                       const std::string& session_id, wire::Endpoint endpoint)
    : impl_(std::make_unique<Impl>()), session_id_(session_id) {
  tcp::resolver resolver(impl_->ioc);
  auto results = resolver.resolve(host, std::to_string(port));
  beast::get_lowest_layer(impl_->ws).connect(results);
  beast::get_lowest_layer(impl_->ws).socket().set_option(tcp::no_delay(true));
  websocket::response_type response;
  const std::string target =
      "/session/" + session_id + "/" + std::string(wire::to_string(endpoint));
  // The async form keeps the HTTP response when the upgrade is declined.
  beast::error_code ec;
  impl_->ws.async_handshake(response, host + ":" + std::to_string(port), target,
                            [&ec](beast::error_code e) { ec = e; });
  impl_->ioc.run();
  impl_->ioc.restart();
  if (ec) {
    const int status = response.result_int();
    if (status >= 400) throw HandshakeRefused(status);
    throw beast::system_error(ec);
  }
  impl_->ws.text(true);
  impl_->read_next();
}

WireClient::~WireClient() {
  try {
    close();
  } catch (...) {
  }
}

void WireClient::send(const wire::WireMessage& message) {
  if (impl_->closed) return;
  const std::string frame = wire::encode(message);
  bool done = false;
  impl_->ws.async_write(net::buffer(frame), [&](beast::error_code ec, std::size_t) {
    done = true;
    if (ec) impl_->closed = true;
  });
  impl_->ioc.restart();
  while (!done) impl_->ioc.run_one();
}

void WireClient::send(const std::string& type, nlohmann::ordered_json body) {
  send(wire::WireMessage{type, session_id_, 0, std::move(body)});
}

std::optional<wire::WireMessage> WireClient::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  impl_->ioc.restart();
  while (impl_->inbox.empty() && !impl_->closed) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) break;
    impl_->ioc.run_one_for(deadline - now);
  }
  if (impl_->inbox.empty()) return std::nullopt;
  auto message = std::move(impl_->inbox.front());
  impl_->inbox.pop_front();
  return message;
}

void WireClient::close() {
  if (impl_->closed) return;
  impl_->closed = true;
  beast::error_code ec;
  bool done = false;
  impl_->ws.async_close(websocket::close_code::normal, [&](beast::error_code) { done = true; });
  impl_->ioc.restart();
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  while (!done && std::chrono::steady_clock::now() < deadline) {
    impl_->ioc.run_one_for(std::chrono::milliseconds(100));
  }
  beast::get_lowest_layer(impl_->ws).socket().close(ec);
  impl_->ioc.restart();
  impl_->ioc.poll();
}

}  // namespace semiauto::client
