#include <doctest.h>

#include <chrono>
#include <filesystem>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "qdpref/server.hpp"
#include "support.hpp"

using namespace qdpref;
namespace beast = boost::beast;
namespace http = beast::http;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

struct HttpResult {
  int status;
  Json body;
};

HttpResult request(std::uint16_t port, http::verb verb, const std::string& target, const Json& body = nullptr) {
  net::io_context ioc;
  tcp::socket socket(ioc);
  socket.connect({net::ip::make_address("127.0.0.1"), port});
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "localhost");
  if (!body.is_null()) req.body() = body.dump();
  req.prepare_payload();
  http::write(socket, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(socket, buffer, res);
  beast::error_code ec;
  socket.shutdown(tcp::socket::shutdown_both, ec);
  return {static_cast<int>(res.result_int()), res.body().empty() ? Json() : Json::parse(res.body())};
}

struct WsClient {
  net::io_context ioc;
  beast::websocket::stream<tcp::socket> ws{ioc};

  explicit WsClient(std::uint16_t port) {
    ws.next_layer().connect({net::ip::make_address("127.0.0.1"), port});
    ws.handshake("localhost", "/ws");
  }
  void send(const Json& m) { ws.write(net::buffer(m.dump())); }
  Json receive() {
    beast::flat_buffer buffer;
    ws.read(buffer);
    return Json::parse(beast::buffers_to_string(buffer.data()));
  }
  // Next message of `kind`, skipping unsolicited traffic.
  Json expect(const std::string& kind, int limit = 200) {
    for (int k = 0; k < limit; ++k) {
      auto m = receive();
      if (m["kind"] == kind) return m;
    }
    FAIL("no " << kind << " message");
    return {};
  }
  // Next reply (ack or error), skipping pushes.
  Json reply(int limit = 200) {
    for (int k = 0; k < limit; ++k) {
      auto m = receive();
      if (m["kind"] == "ack" || m["kind"] == "error") return m;
    }
    FAIL("no reply");
    return {};
  }
  ~WsClient() {
    beast::error_code ec;
    ws.close(beast::websocket::close_code::normal, ec);
  }
};

}  // namespace

TEST_CASE("HTTP routes") {
  SessionService service({std::filesystem::temp_directory_path().string(), {}});
  Server server(service, "127.0.0.1", 0);
  server.start();
  const auto port = server.port();

  auto r = request(port, http::verb::get, "/health");
  CHECK(r.status == 200);
  CHECK(r.body["ok"] == true);

  r = request(port, http::verb::post, "/sessions", {{"seed", 5}, {"id", "h1"}});
  CHECK(r.status == 201);
  CHECK(r.body["id"] == "h1");
  CHECK(request(port, http::verb::post, "/sessions", {{"id", "h1"}}).status == 400);

  r = request(port, http::verb::post, "/sessions/h1/messages",
              {{"kind", "room/edit"}, {"seq", 1}, {"payload", {{"x", 5}, {"y", 2}, {"tile", "W"}}}});
  CHECK(r.status == 200);
  CHECK(r.body[0]["kind"] == "ack");

  r = request(port, http::verb::post, "/sessions/h1/messages", {{"kind", "room/edit"}, {"payload", {{"x", 99}, {"y", 2}, {"tile", "W"}}}});
  CHECK(r.body[0]["payload"]["code"] == "OutOfBounds");

  r = request(port, http::verb::get, "/sessions/h1/status");
  CHECK(r.body["episodes"] == 0);

  // a first publish happens as soon as the session starts
  for (int k = 0; k < 50 && request(port, http::verb::get, "/sessions/h1/suggestions").body.is_null(); ++k) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  r = request(port, http::verb::get, "/sessions/h1/suggestions");
  CHECK(r.body["kind"] == "suggestions/published");

  r = request(port, http::verb::post, "/sessions/h1/save", {{"path", "qdpref_http_save.json"}});
  CHECK(r.status == 200);
  CHECK(request(port, http::verb::get, "/sessions/h1/events").body.size() >= 2);

  CHECK(request(port, http::verb::delete_, "/sessions/h1").status == 200);
  r = request(port, http::verb::post, "/sessions/load", {{"path", "qdpref_http_save.json"}});
  CHECK(r.status == 201);
  CHECK(r.body["id"] == "h1");
  CHECK(request(port, http::verb::post, "/sessions/load", {{"path", "missing.json"}}).status == 404);
  CHECK(request(port, http::verb::get, "/sessions/zz/status").status == 404);
  CHECK(request(port, http::verb::get, "/nowhere").status == 404);

  server.stop();
  std::filesystem::remove(std::filesystem::temp_directory_path() / "qdpref_http_save.json");
}

TEST_CASE("WebSocket session") {
  SessionService service({std::filesystem::temp_directory_path().string(), {}});
  Server server(service, "127.0.0.1", 0);
  server.start();
  {
    WsClient c(server.port());
    c.send({{"kind", "room/edit"}, {"seq", 1}, {"payload", {{"x", 1}, {"y", 1}, {"tile", "W"}}}});
    auto m = c.receive();
    CHECK(m["kind"] == "error");
    CHECK(m["payload"]["code"] == "ProtocolError");

    c.send({{"kind", "session/start"}, {"seq", 2}, {"payload", {{"seed", 9}, {"id", "w1"}}}});
    m = c.expect("session/started");
    CHECK(m["payload"]["id"] == "w1");

    const auto published = c.expect("suggestions/published");
    CHECK(published["payload"]["grid"]["cells"].size() == 25);

    c.send({{"kind", "room/edit"}, {"seq", 3}, {"payload", {{"x", 5}, {"y", 5}, {"tile", "T"}}}});
    m = c.reply();
    CHECK(m["kind"] == "ack");
    CHECK(m["payload"]["replyTo"] == 3);

    c.send({{"kind", "dims/set"}, {"seq", 4}, {"payload", {"symmetry", "leniency"}}});
    CHECK(c.reply()["kind"] == "ack");

    // wait until a publish carries an elite, then apply it
    Json cell;
    for (int k = 0; k < 100 && cell.is_null(); ++k) {
      const auto p = c.expect("suggestions/published");
      if (p["payload"]["dims"][1] != "leniency") continue;
      for (const auto& e : p["payload"]["grid"]["cells"]) {
        if (!e.is_null()) {
          cell = e["cell"];
          break;
        }
      }
    }
    REQUIRE_FALSE(cell.is_null());
    c.send({{"kind", "suggestion/apply"}, {"seq", 5}, {"payload", {{"cell", cell}}}});
    CHECK(c.reply()["kind"] == "ack");
    const auto status = c.expect("model/status", 2000);
    CHECK(status["payload"]["episodes"] == 1);

    c.send("not json at all");
  }
  {
    // a second connection can attach to the running session
    WsClient c(server.port());
    c.send({{"kind", "session/attach"}, {"payload", {{"id", "w1"}}}});
    CHECK(c.expect("session/started")["payload"]["id"] == "w1");
    CHECK(c.expect("suggestions/published")["kind"] == "suggestions/published");
  }
  server.stop();
}
