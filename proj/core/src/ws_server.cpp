#include "npe/ws_server.hpp"

#include "npe/error.hpp"
#include "npe/service.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/socket.h>

#include <condition_variable>
#include <list>
#include <mutex>
#include <thread>

namespace npe {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct WsServer::Impl {
  PoseService& service;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::thread accept_thread;

  std::mutex mutex;
  std::condition_variable stopped_cv;
  bool stopping = false;
  bool stopped = false;
  struct Connection {
    std::shared_ptr<tcp::socket> socket;
    std::thread thread;
  };
  std::list<Connection> connections;

  Impl(PoseService& s, const std::string& bind, std::uint16_t port) : service(s), acceptor(io) {
    const tcp::endpoint endpoint(asio::ip::make_address(bind), port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
  }

  void serve(std::shared_ptr<tcp::socket> socket) {
    beast::error_code ec;
    websocket::stream<tcp::socket&> ws(*socket);
    ws.accept(ec);
    if (ec) return;
    ws.text(true);
    beast::flat_buffer buffer;
    while (true) {
      buffer.clear();
      ws.read(buffer, ec);
      if (ec) break;
      const std::string reply = service.handle_text(beast::buffers_to_string(buffer.data()));
      ws.text(true);
      ws.write(asio::buffer(reply), ec);
      if (ec) break;
    }
    socket->shutdown(tcp::socket::shutdown_both, ec);
  }

  void accept_loop() {
    while (true) {
      auto socket = std::make_shared<tcp::socket>(io);
      beast::error_code ec;
      acceptor.accept(*socket, ec);
      std::lock_guard lock(mutex);
      if (stopping) break;
      if (ec) continue;
      socket->set_option(tcp::no_delay(true), ec);
      connections.push_back({socket, {}});
      connections.back().thread = std::thread([this, socket] { serve(socket); });
    }
  }
};

WsServer::WsServer(PoseService& service, const std::string& bind_address, std::uint16_t port) {
  try {
    impl_ = std::make_unique<Impl>(service, bind_address, port);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, "cannot listen on " + bind_address + ":" + std::to_string(port) + ": " + e.what());
  }
}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::start() {
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void WsServer::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void WsServer::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopping) return;
    impl_->stopping = true;
    beast::error_code ec;
    // shutdown() wakes a thread blocked in accept(); close() alone does not on Linux.
    ::shutdown(impl_->acceptor.native_handle(), SHUT_RDWR);
    for (auto& c : impl_->connections) c.socket->shutdown(tcp::socket::shutdown_both, ec);
  }
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  for (auto& c : impl_->connections) {
    if (c.thread.joinable()) c.thread.join();
  }
  beast::error_code ec;
  impl_->acceptor.close(ec);
  std::lock_guard lock(impl_->mutex);
  impl_->stopped = true;
  impl_->stopped_cv.notify_all();
}

struct WsClient::Impl {
  asio::io_context io;
  websocket::stream<tcp::socket> ws{io};
};

WsClient::WsClient(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  try {
    tcp::resolver resolver(impl_->io);
    const auto results = resolver.resolve(host, std::to_string(port));
    asio::connect(impl_->ws.next_layer(), results.begin(), results.end());
    impl_->ws.next_layer().set_option(tcp::no_delay(true));
    impl_->ws.handshake(host + ":" + std::to_string(port), "/");
    impl_->ws.text(true);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, "cannot connect to " + host + ":" + std::to_string(port) + ": " + e.what());
  }
}

WsClient::~WsClient() {
  try {
    close();
  } catch (...) {
  }
}

void WsClient::send(const std::string& text) {
  beast::error_code ec;
  impl_->ws.write(asio::buffer(text), ec);
  if (ec) throw Error(ErrorCode::Io, "send failed: " + ec.message());
}

std::string WsClient::receive() {
  beast::flat_buffer buffer;
  beast::error_code ec;
  impl_->ws.read(buffer, ec);
  if (ec) throw Error(ErrorCode::Io, "receive failed: " + ec.message());
  return beast::buffers_to_string(buffer.data());
}

std::string WsClient::request(const std::string& text) {
  send(text);
  return receive();
}

void WsClient::close() {
  if (!impl_->ws.is_open()) return;
  beast::error_code ec;
  impl_->ws.close(websocket::close_code::normal, ec);
}

}  // namespace npe
