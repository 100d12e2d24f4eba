#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qdpref/session.hpp"

namespace qdpref {

// Runs a Session on its own thread. The engine steps continuously; inbound messages
// queue up and are handled at the next generation boundary. Unsolicited output
// (suggestions/published, model/status) goes to every subscriber.
class LiveSession {
 public:
  using Sink = std::function<void(const Json&)>;

  explicit LiveSession(std::unique_ptr<Session> session);
  ~LiveSession();
  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  const std::string& id() const { return id_; }

  /// Replies (ack or error) for one message, resolved at the next boundary.
  std::future<std::vector<Json>> submit(Json message);
  /// Runs `fn` on the session thread at the next boundary.
  std::future<Json> call(std::function<Json(Session&)> fn);

  int subscribe(Sink sink);
  void unsubscribe(int token);

  /// Latest suggestions/published message, or null before the first publish.
  Json latest_published() const;
  std::uint64_t generation() const { return generation_.load(); }

  void stop();

 private:
  void loop();
  void broadcast(const std::vector<Json>& messages);

  std::unique_ptr<Session> session_;
  std::string id_;
  std::atomic<std::uint64_t> generation_{0};
  std::atomic<bool> stopping_{false};

  std::mutex tasks_mutex_;
  std::vector<std::function<void(Session&)>> tasks_;

  mutable std::mutex sinks_mutex_;
  std::map<int, Sink> sinks_;
  int next_token_ = 1;
  Json latest_;

  std::thread thread_;
};

// Owns the live sessions of one server process. Transport independent.
class SessionService {
 public:
  struct Options {
    std::string session_dir = ".";
    SessionConfig config;
  };

  explicit SessionService(Options options);

  /// payload: optional {config, seed, dungeon, activeRoom, id}. Returns the new session.
  std::shared_ptr<LiveSession> start(const Json& payload);
  /// payload: {path}, relative paths resolve against the session directory.
  std::shared_ptr<LiveSession> load(const Json& payload);
  std::shared_ptr<LiveSession> find(const std::string& id) const;
  bool remove(const std::string& id);
  std::vector<std::string> ids() const;

  /// Resolves a save/load path against the session directory.
  std::string resolve(const std::string& path) const;
  /// Forwards a message to a live session, resolving session/save paths first.
  std::future<std::vector<Json>> submit(LiveSession& session, Json message) const;

 private:
  Options options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace qdpref
