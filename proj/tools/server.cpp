// qdpref-server: live design sessions over WebSocket (/ws) and HTTP.
#include <chrono>
#include <csignal>
#include <thread>
#include <iostream>

#include <CLI11.hpp>

#include "qdpref/error.hpp"
#include "qdpref/server.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
}

int main(int argc, char** argv) {
  CLI::App app{"Mixed-initiative dungeon design session server"};
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;
  qdpref::SessionService::Options options;
  std::string config_path;
  app.add_option("--address", address, "Listen address")->capture_default_str();
  app.add_option("--port", port, "Listen port (0 picks a free one)")->capture_default_str();
  app.add_option("--session-dir", options.session_dir, "Directory for relative save/load paths")->capture_default_str();
  app.add_option("--config", config_path, "Engine/session config JSON applied to new sessions");
  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) options.config = qdpref::load_config_file(config_path);
    qdpref::SessionService service(options);
    qdpref::Server server(service, address, port);
    std::signal(SIGINT, [](int) { g_stop = 1; });
    std::signal(SIGTERM, [](int) { g_stop = 1; });
    server.start();
    std::cout << "listening on " << address << ":" << server.port() << std::endl;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  } catch (const qdpref::Error& e) {
    std::cerr << "error [" << qdpref::to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
