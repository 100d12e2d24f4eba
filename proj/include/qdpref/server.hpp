#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qdpref/live.hpp"

namespace qdpref {

struct HttpReply {
  int status = 200;
  Json body;
};

/// The HTTP fallback routes, independent of any socket:
///   GET  /health
///   GET  /sessions                      POST /sessions          (body: session/start payload)
///   POST /sessions/load                 (body: {path})
///   POST /sessions/{id}/messages        (body: one protocol message; reply: array of messages)
///   POST /sessions/{id}/save            (body: {path})
///   GET  /sessions/{id}/suggestions     GET /sessions/{id}/status    GET /sessions/{id}/events
///   DELETE /sessions/{id}
HttpReply route_http(SessionService& service, const std::string& method, const std::string& target,
                     const std::string& body);

// WebSocket endpoint at /ws plus the HTTP routes above, one thread per connection.
// On /ws the first message must be session/start, session/load or session/attach {id};
// the reply is session/started {id}, after which protocol messages flow both ways.
class Server {
 public:
  Server(SessionService& service, const std::string& address, std::uint16_t port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return port_; }
  void start();  // accept on a background thread
  void run();    // accept on the calling thread until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
  std::thread acceptor_thread_;
};

}  // namespace qdpref
