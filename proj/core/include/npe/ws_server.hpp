#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace npe {

class PoseService;

/// WebSocket transport for PoseService: one JSON text message per frame,
/// replies on the same connection. Each connection gets its own thread.
class WsServer {
 public:
  /// Binds immediately; port 0 picks a free port.
  WsServer(PoseService& service, const std::string& bind_address, std::uint16_t port);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  std::uint16_t port() const;
  /// Accepts connections on a background thread.
  void start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  /// Closes the listener and every open connection, then joins all threads.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocking client used by tests and the command-line tool.
class WsClient {
 public:
  WsClient(const std::string& host, std::uint16_t port);
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  void send(const std::string& text);
  std::string receive();
  /// send() followed by receive().
  std::string request(const std::string& text);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace npe
