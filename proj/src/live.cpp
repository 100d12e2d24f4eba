#include "qdpref/live.hpp"

#include <filesystem>

#include "qdpref/error.hpp"
#include "qdpref/json_io.hpp"

namespace qdpref {

namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

LiveSession::LiveSession(std::unique_ptr<Session> session) : session_(std::move(session)), id_(session_->id()) {
  session_->set_auto_publish(false);
  generation_ = session_->generation();
  thread_ = std::thread([this] { loop(); });
}

LiveSession::~LiveSession() { stop(); }

void LiveSession::stop() {
  stopping_ = true;
  if (thread_.joinable()) thread_.join();
}

std::future<std::vector<Json>> LiveSession::submit(Json message) {
  auto promise = std::make_shared<std::promise<std::vector<Json>>>();
  auto future = promise->get_future();
  std::lock_guard lock(tasks_mutex_);
  tasks_.push_back([promise, message = std::move(message), this](Session& s) {
    auto replies = s.handle_message(message);
    // Replies go to the caller; a successful edit also changes what subscribers see next publish.
    promise->set_value(std::move(replies));
  });
  return future;
}

std::future<Json> LiveSession::call(std::function<Json(Session&)> fn) {
  auto promise = std::make_shared<std::promise<Json>>();
  auto future = promise->get_future();
  std::lock_guard lock(tasks_mutex_);
  tasks_.push_back([promise, fn = std::move(fn)](Session& s) {
    try {
      promise->set_value(fn(s));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  });
  return future;
}

int LiveSession::subscribe(Sink sink) {
  std::lock_guard lock(sinks_mutex_);
  const int token = next_token_++;
  sinks_.emplace(token, std::move(sink));
  if (!latest_.is_null()) sinks_[token](latest_);
  return token;
}

void LiveSession::unsubscribe(int token) {
  std::lock_guard lock(sinks_mutex_);
  sinks_.erase(token);
}

Json LiveSession::latest_published() const {
  std::lock_guard lock(sinks_mutex_);
  return latest_;
}

void LiveSession::broadcast(const std::vector<Json>& messages) {
  if (messages.empty()) return;
  std::lock_guard lock(sinks_mutex_);
  for (const auto& m : messages) {
    if (m["kind"] == "suggestions/published") latest_ = m;
    for (auto& [token, sink] : sinks_) sink(m);
  }
}

void LiveSession::loop() {
  const auto& cfg = session_->config();
  const auto every = static_cast<std::uint64_t>(cfg.publish_every_generations);
  const auto min_interval = std::chrono::milliseconds(cfg.publish_min_interval_ms);
  const auto max_interval = std::chrono::milliseconds(cfg.publish_interval_ms);
  auto last_publish = Clock::now();
  std::uint64_t last_gen = session_->generation();
  broadcast(session_->publish_now());

  while (!stopping_) {
    std::vector<std::function<void(Session&)>> tasks;
    {
      std::lock_guard lock(tasks_mutex_);
      tasks.swap(tasks_);
    }
    const bool changed = !tasks.empty();
    for (auto& task : tasks) task(*session_);

    broadcast(session_->tick());
    generation_ = session_->generation();

    const auto since = Clock::now() - last_publish;
    const auto gens = session_->generation() - last_gen;
    if ((gens >= every && since >= min_interval) || (gens >= 1 && since >= max_interval) ||
        (changed && since >= min_interval)) {
      broadcast(session_->publish_now());
      last_publish = Clock::now();
      last_gen = session_->generation();
    }
  }

  // Anything still queued gets an answer rather than a broken promise.
  std::vector<std::function<void(Session&)>> tasks;
  {
    std::lock_guard lock(tasks_mutex_);
    tasks.swap(tasks_);
  }
  for (auto& task : tasks) task(*session_);
}

// ---------------------------------------------------------------------------

SessionService::SessionService(Options options) : options_(std::move(options)) {}

std::string SessionService::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(options_.session_dir) / p).string();
}

std::future<std::vector<Json>> SessionService::submit(LiveSession& session, Json message) const {
  if (message.is_object() && message.value("kind", "") == "session/save" && message.contains("payload") &&
      message["payload"].is_object() && message["payload"].contains("path") && message["payload"]["path"].is_string()) {
    message["payload"]["path"] = resolve(message["payload"]["path"].get<std::string>());
  }
  return session.submit(std::move(message));
}

std::shared_ptr<LiveSession> SessionService::start(const Json& payload) {
  if (!payload.is_null() && !payload.is_object()) throw Error(ErrorCode::ProtocolError, "session/start payload must be an object");
  const Json p = payload.is_null() ? Json::object() : payload;
  SessionConfig config = options_.config;
  if (p.contains("config")) config = config_from_json(p["config"]);
  const std::uint64_t seed = p.value("seed", std::uint64_t{0});
  Dungeon dungeon = p.contains("dungeon") ? dungeon_from_json(p["dungeon"]) : Session::default_dungeon(config);
  std::string active = p.value("activeRoom", std::string());
  if (active.empty()) {
    if (dungeon.rooms.empty()) throw Error(ErrorCode::MalformedInput, "dungeon has no rooms");
    active = dungeon.rooms.begin()->first;
  }
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = p.value("id", "s" + std::to_string(++counter_));
    if (sessions_.count(id)) throw Error(ErrorCode::ProtocolError, "session '" + id + "' already exists");
  }
  auto live = std::make_shared<LiveSession>(
      std::make_unique<Session>(id, std::move(dungeon), active, config, seed, SwapPolicy::WhenReady));
  std::lock_guard lock(mutex_);
  sessions_[id] = live;
  return live;
}

std::shared_ptr<LiveSession> SessionService::load(const Json& payload) {
  if (!payload.is_object() || !payload.contains("path") || !payload["path"].is_string()) {
    throw Error(ErrorCode::ProtocolError, "session/load needs {\"path\": ...}");
  }
  auto session = Session::load(resolve(payload["path"].get<std::string>()));
  // The replayed session continues live; the next id is fresh if the saved one is taken.
  std::string id = session->id();
  {
    std::lock_guard lock(mutex_);
    if (sessions_.count(id)) throw Error(ErrorCode::ProtocolError, "session '" + id + "' is already running");
  }
  session->set_swap_policy(SwapPolicy::WhenReady);
  auto live = std::make_shared<LiveSession>(std::move(session));
  std::lock_guard lock(mutex_);
  sessions_[id] = live;
  return live;
}

std::shared_ptr<LiveSession> SessionService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

bool SessionService::remove(const std::string& id) {
  std::shared_ptr<LiveSession> victim;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    victim = std::move(it->second);
    sessions_.erase(it);
  }
  victim->stop();
  return true;
}

std::vector<std::string> SessionService::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

}  // namespace qdpref
