#include "qdpref/server.hpp"

#include <atomic>
#include <deque>
#include <iostream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "qdpref/error.hpp"

namespace qdpref {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::vector<std::string> path_parts(const std::string& target) {
  std::vector<std::string> parts;
  const auto q = target.find('?');
  const std::string path = target.substr(0, q);
  std::size_t start = 0;
  while (start < path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

Json error_body(const std::string& code, const std::string& message) {
  return {{"kind", "error"}, {"payload", {{"code", code}, {"message", message}}}};
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("request body: ") + e.what());
  }
}

Json started(const LiveSession& live) {
  return {{"kind", "session/started"}, {"seq", 0}, {"payload", {{"id", live.id()}, {"generation", live.generation()}}}};
}

}  // namespace

HttpReply route_http(SessionService& service, const std::string& method, const std::string& target,
                     const std::string& body) {
  const auto parts = path_parts(target);
  try {
    if (parts.size() == 1 && parts[0] == "health" && method == "GET") {
      return {200, {{"ok", true}, {"sessions", service.ids().size()}}};
    }
    if (parts.empty() || parts[0] != "sessions") return {404, error_body("NotFound", "no route for " + target)};

    if (parts.size() == 1) {
      if (method == "GET") return {200, {{"sessions", service.ids()}}};
      if (method == "POST") {
        auto live = service.start(parse_body(body));
        return {201, started(*live)["payload"]};
      }
    }
    if (parts.size() == 2 && parts[1] == "load" && method == "POST") {
      auto live = service.load(parse_body(body));
      return {201, started(*live)["payload"]};
    }
    if (parts.size() >= 2) {
      auto live = service.find(parts[1]);
      if (!live) return {404, error_body("UnknownSession", "no session '" + parts[1] + "'")};
      if (parts.size() == 2 && method == "DELETE") {
        service.remove(parts[1]);
        return {200, {{"removed", parts[1]}}};
      }
      if (parts.size() == 3) {
        const auto& what = parts[2];
        if (what == "messages" && method == "POST") return {200, service.submit(*live, parse_body(body)).get()};
        if (what == "save" && method == "POST") {
          const Json msg = {{"kind", "session/save"}, {"payload", parse_body(body)}};
          const auto replies = service.submit(*live, msg).get();
          const bool ok = !replies.empty() && replies.front()["kind"] == "ack";
          return {ok ? 200 : 400, replies.empty() ? Json() : replies.front()};
        }
        if (what == "suggestions" && method == "GET") return {200, live->latest_published()};
        if (what == "status" && method == "GET") {
          return {200, service.submit(*live, {{"kind", "model/status"}}).get().front()["payload"]};
        }
        if (what == "events" && method == "GET") {
          return {200, live->call([](Session& s) { return s.to_json()["events"]; }).get()};
        }
      }
    }
    return {404, error_body("NotFound", "no route for " + method + " " + target)};
  } catch (const Error& e) {
    return {e.code() == ErrorCode::IoError ? 404 : 400, error_body(std::string(to_string(e.code())), e.what())};
  }
}

// ---------------------------------------------------------------------------

struct Server::Impl {
  SessionService& service;
  net::io_context accept_ioc;
  tcp::acceptor acceptor;
  std::atomic<bool> stopping{false};

  std::mutex mutex;
  std::map<int, std::function<void()>> closers;
  std::vector<std::thread> threads;
  int next_id = 0;

  Impl(SessionService& s, const std::string& address, std::uint16_t port)
      : service(s), acceptor(accept_ioc, tcp::endpoint(net::ip::make_address(address), port)) {}

  void accept_loop();
  void serve(tcp::socket socket, int id);
  void serve_websocket(tcp::socket socket, http::request<http::string_body> req, int id);
};

void Server::Impl::accept_loop() {
  while (!stopping) {
    beast::error_code ec;
    tcp::socket socket(accept_ioc);
    acceptor.accept(socket, ec);
    if (ec || stopping) break;
    std::lock_guard lock(mutex);
    const int id = next_id++;
    threads.emplace_back([this, s = std::move(socket), id]() mutable { serve(std::move(s), id); });
  }
}

void Server::Impl::serve(tcp::socket socket, int id) {
  {
    std::lock_guard lock(mutex);
    closers[id] = [&socket] {
      beast::error_code ignored;
      socket.shutdown(tcp::socket::shutdown_both, ignored);
    };
  }
  beast::flat_buffer buffer;
  beast::error_code ec;
  while (!stopping) {
    http::request<http::string_body> req;
    http::read(socket, buffer, req, ec);
    if (ec) break;
    if (websocket::is_upgrade(req)) {
      {
        std::lock_guard lock(mutex);
        closers.erase(id);
      }
      if (req.target() == "/ws") serve_websocket(std::move(socket), std::move(req), id);
      return;
    }
    const auto reply = route_http(service, std::string(req.method_string()), std::string(req.target()), req.body());
    http::response<http::string_body> res{static_cast<http::status>(reply.status), req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = reply.body.dump();
    res.prepare_payload();
    http::write(socket, res, ec);
    if (ec || !res.keep_alive()) break;
  }
  beast::error_code ignored;
  socket.shutdown(tcp::socket::shutdown_both, ignored);
  std::lock_guard lock(mutex);
  closers.erase(id);
}

void Server::Impl::serve_websocket(tcp::socket socket, http::request<http::string_body> req, int id) {
  net::io_context ioc;
  const auto protocol = socket.local_endpoint().protocol();
  websocket::stream<tcp::socket> ws(net::ip::tcp::socket(ioc, protocol, socket.release()));
  beast::error_code ec;
  ws.accept(req, ec);
  if (ec) return;
  ws.text(true);

  std::deque<std::string> outbox;
  bool writing = false;
  std::shared_ptr<LiveSession> live;
  int token = 0;
  beast::flat_buffer buffer;

  std::function<void()> write_next = [&] {
    if (writing || outbox.empty()) return;
    writing = true;
    ws.async_write(net::buffer(outbox.front()), [&](beast::error_code wec, std::size_t) {
      outbox.pop_front();
      writing = false;
      if (!wec) write_next();
    });
  };
  // Only ever called on this connection's io_context thread.
  const auto send = [&](Json msg) {
    outbox.push_back(msg.dump());
    write_next();
  };
  const auto bind = [&](std::shared_ptr<LiveSession> session) {
    live = std::move(session);
    send(started(*live));
    token = live->subscribe([&ioc, &send](const Json& m) { net::post(ioc, [&send, m] { send(m); }); });
  };

  std::function<void()> read_next = [&] {
    ws.async_read(buffer, [&](beast::error_code rec, std::size_t) {
      if (rec) return;
      const std::string text = beast::buffers_to_string(buffer.data());
      buffer.consume(buffer.size());
      Json msg;
      try {
        msg = Json::parse(text);
      } catch (const Json::parse_error& e) {
        send({{"kind", "error"}, {"seq", 0}, {"payload", {{"code", "MalformedInput"}, {"message", e.what()}, {"replyTo", nullptr}}}});
        read_next();
        return;
      }
      const Json seq = msg.is_object() && msg.contains("seq") ? msg["seq"] : Json();
      const std::string kind = msg.is_object() ? msg.value("kind", "") : "";
      const Json payload = msg.is_object() && msg.contains("payload") ? msg["payload"] : Json::object();
      try {
        if (kind == "session/start" || kind == "session/load" || kind == "session/attach") {
          if (live) throw Error(ErrorCode::ProtocolError, "connection already bound to session '" + live->id() + "'");
          if (kind == "session/start") bind(service.start(payload));
          else if (kind == "session/load") bind(service.load(payload));
          else {
            auto found = service.find(payload.value("id", ""));
            if (!found) throw Error(ErrorCode::ProtocolError, "no session '" + payload.value("id", "") + "'");
            bind(found);
          }
        } else if (!live) {
          throw Error(ErrorCode::ProtocolError, "first message must be session/start, session/load or session/attach");
        } else {
          for (auto& reply : service.submit(*live, msg).get()) send(std::move(reply));
        }
      } catch (const Error& e) {
        send({{"kind", "error"}, {"seq", 0}, {"payload", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"replyTo", seq}}}});
      }
      read_next();
    });
  };

  {
    std::lock_guard lock(mutex);
    closers[id] = [&ioc] { ioc.stop(); };
  }
  read_next();
  ioc.run();
  if (live) live->unsubscribe(token);
  {
    std::lock_guard lock(mutex);
    closers.erase(id);
  }
  ws.next_layer().close(ec);
}

Server::Server(SessionService& service, const std::string& address, std::uint16_t port)
    : impl_(std::make_unique<Impl>(service, address, port)), port_(impl_->acceptor.local_endpoint().port()) {}

Server::~Server() { stop(); }

void Server::start() {
  acceptor_thread_ = std::thread([this] { impl_->accept_loop(); });
}

void Server::run() { impl_->accept_loop(); }

void Server::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  beast::error_code ec;
  // Wake a blocked accept() with a throwaway connection, then close.
  {
    net::io_context ioc;
    tcp::socket poke(ioc);
    auto address = impl_->acceptor.local_endpoint(ec).address();
    if (address.is_unspecified()) address = net::ip::make_address(address.is_v6() ? "::1" : "127.0.0.1");
    poke.connect(tcp::endpoint(address, port_), ec);
  }
  if (acceptor_thread_.joinable()) acceptor_thread_.join();
  impl_->acceptor.close(ec);
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(impl_->mutex);
    for (auto& [id, close] : impl_->closers) close();
    threads.swap(impl_->threads);
  }
  for (auto& t : threads) t.join();
}

}  // namespace qdpref
