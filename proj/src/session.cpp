#include "qdpref/session.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "qdpref/digest.hpp"
#include "qdpref/error.hpp"
#include "qdpref/json_io.hpp"

namespace qdpref {

namespace {

constexpr const char* kSessionFormat = "qdpref-session";

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

[[noreturn]] void protocol(const std::string& what) { throw Error(ErrorCode::ProtocolError, what); }

int payload_int(const Json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end() || !it->is_number_integer()) protocol(std::string("payload needs integer '") + key + "'");
  return it->get<int>();
}

CellIndex payload_cell(const Json& payload) {
  if (!payload.is_object()) protocol("payload must be an object");
  const auto it = payload.find("cell");
  if (it == payload.end() || !it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() ||
      !(*it)[1].is_number_integer()) {
    protocol("payload needs \"cell\": [i, j]");
  }
  return {(*it)[0].get<int>(), (*it)[1].get<int>()};
}

DimensionPair payload_dims(const Json& payload) {
  const Json* names = &payload;
  if (payload.is_object()) {
    const auto it = payload.find("dims");
    if (it == payload.end()) protocol("payload needs \"dims\"");
    names = &*it;
  }
  if (!names->is_array() || names->size() != 2) protocol("dims/set expects two dimension names");
  DimensionPair dims{};
  for (int k = 0; k < 2; ++k) {
    if (!(*names)[k].is_string()) protocol("dimension names must be strings");
    const auto kind = dimension_from_string((*names)[k].get<std::string>());
    if (!kind) protocol("unknown dimension '" + (*names)[k].get<std::string>() + "'");
    dims[k] = *kind;
  }
  return dims;
}

Json cell_json(CellIndex c) { return Json::array({c.i, c.j}); }

const char* message_kind_for(EventKind kind) {
  switch (kind) {
    case EventKind::Edit: return "room/edit";
    case EventKind::Lock: return "room/lock";
    case EventKind::SetDims: return "dims/set";
    case EventKind::ApplySuggestion: return "suggestion/apply";
    case EventKind::SelectRoom: return "room/select";
    default: return nullptr;
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Edit: return "EDIT";
    case EventKind::Lock: return "LOCK";
    case EventKind::SetDims: return "SET_DIMS";
    case EventKind::ApplySuggestion: return "APPLY_SUGGESTION";
    case EventKind::Publish: return "PUBLISH";
    case EventKind::TrainDone: return "TRAIN_DONE";
    case EventKind::Save: return "SAVE";
    case EventKind::SelectRoom: return "SELECT_ROOM";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) {
  for (auto k : {EventKind::Edit, EventKind::Lock, EventKind::SetDims, EventKind::ApplySuggestion, EventKind::Publish,
                 EventKind::TrainDone, EventKind::Save, EventKind::SelectRoom}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finaliser over a combination of the three inputs
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * index;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<PreferenceEntry> rank_top_preference(const EliteSnapshot& snapshot, const PreferenceModel& model, int k) {
  struct Scored {
    std::size_t flat;
    double pref;
    double conf;
  };
  std::vector<Scored> scored;
  for (std::size_t f = 0; f < snapshot.cells.size(); ++f) {
    if (!snapshot.cells[f]) continue;
    const auto probs = predict(model, snapshot.cells[f]->room.tiles());
    scored.push_back({f, predicted_preference(probs), confidence(probs)});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.pref != b.pref) return a.pref > b.pref;
    if (a.conf != b.conf) return a.conf > b.conf;
    return a.flat < b.flat;
  });
  std::vector<PreferenceEntry> out;
  for (std::size_t r = 0; r < scored.size() && static_cast<int>(r) < k; ++r) {
    const auto& s = scored[r];
    out.push_back({snapshot.index_of(s.flat), snapshot.cells[s.flat]->room, s.pref, s.conf});
  }
  return out;
}

ModelStatus model_status(const PreferenceModel& model, const EliteSnapshot& snapshot) {
  ModelStatus st{model.last_test_accuracy, model.episodes_trained, 0.0};
  int n = 0;
  for (const auto& cell : snapshot.cells) {
    if (!cell) continue;
    const auto probs = predict(model, cell->room.tiles());
    st.mean_w1 += compute_weights(confidence(probs), model.last_test_accuracy).w1;
    ++n;
  }
  if (n > 0) st.mean_w1 /= n;
  return st;
}

// ---------------------------------------------------------------------------

Session::Session(std::string id, Dungeon dungeon, std::string active_room, SessionConfig config, std::uint64_t seed,
                 SwapPolicy policy)
    : id_(std::move(id)),
      config_(std::move(config)),
      seed_(seed),
      policy_(policy),
      initial_dungeon_(dungeon),
      initial_active_room_(active_room),
      dungeon_(std::move(dungeon)),
      active_room_(std::move(active_room)),
      evolver_(config_.engine, derive_seed(seed, 1)),
      stream_digest_(kFnvOffset) {
  dungeon_.validate();
  const auto it = dungeon_.rooms.find(active_room_);
  if (it == dungeon_.rooms.end()) throw Error(ErrorCode::UnknownRoom, "active room '" + active_room_ + "' not in dungeon");
  evolver_.set_target_room(it->second);

  std::mt19937_64 init_rng(derive_seed(seed, 2));
  auto model = PreferenceModel::create(static_cast<int>(it->second.area()), config_.training, init_rng);
  model_ = std::make_shared<const PreferenceModel>(model);
  evolver_.set_model(model_);
  trainer_ = std::make_unique<Trainer>(std::move(model), config_.training);
}

Session::~Session() = default;
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;

Dungeon Session::default_dungeon(const SessionConfig& config) {
  Dungeon d;
  const int mid = config.room_height / 2;
  d.rooms.emplace("room-1", Room::create(config.room_width, config.room_height, {{Side::West, mid}, {Side::East, mid}}));
  return d;
}

Json Session::message(const std::string& kind, Json payload) {
  return {{"kind", kind}, {"seq", ++out_seq_}, {"payload", std::move(payload)}};
}

Json Session::error_message(const std::string& code, const std::string& text, const Json& reply_to) {
  return message("error", {{"code", code}, {"message", text}, {"replyTo", reply_to}});
}

void Session::log(EventKind kind, Json payload) {
  const std::uint64_t seq = events_.empty() ? 1 : events_.back().seq + 1;
  events_.push_back({seq, generation(), wall_clock_ ? now_ms() : 0, kind, std::move(payload)});
}

void Session::set_active_room(Room room) {
  evolver_.set_target_room(room);
  dungeon_.rooms.at(active_room_) = std::move(room);
}

std::uint64_t Session::dungeon_digest() const { return fnv1a(serialize_dungeon(dungeon_)); }

ModelStatus Session::status() const { return model_status(*model_, evolver_.publish()); }

std::vector<Json> Session::handle_message(const Json& msg) {
  Json seq = nullptr;
  try {
    if (!msg.is_object()) protocol("message must be a JSON object");
    if (msg.contains("seq")) seq = msg["seq"];
    const auto kind = msg.find("kind");
    if (kind == msg.end() || !kind->is_string()) protocol("message needs a string \"kind\"");
    const Json payload = msg.contains("payload") ? msg["payload"] : Json::object();
    return route(kind->get<std::string>(), payload, seq);
  } catch (const Error& e) {
    return {error_message(std::string(to_string(e.code())), e.what(), seq)};
  } catch (const Json::exception& e) {
    return {error_message("ProtocolError", e.what(), seq)};
  }
}

std::vector<Json> Session::route(const std::string& kind, const Json& payload, const Json& seq) {
  const auto ack = [&](Json extra) {
    extra["replyTo"] = seq;
    extra["of"] = kind;
    return message("ack", std::move(extra));
  };
  const auto require_active = [&] {
    if (payload.contains("room") && payload["room"] != active_room_) {
      protocol("edits apply to the active room '" + active_room_ + "'");
    }
  };

  if (kind == "room/edit") {
    if (!payload.is_object()) protocol("payload must be an object");
    require_active();
    const int x = payload_int(payload, "x");
    const int y = payload_int(payload, "y");
    const auto tile_it = payload.find("tile");
    if (tile_it == payload.end() || !tile_it->is_string() || tile_it->get<std::string>().size() != 1) {
      protocol("payload needs \"tile\": one of F/W/T/E");
    }
    const auto tile = tile_from_char(tile_it->get<std::string>()[0]);
    if (!tile) protocol("unknown tile '" + tile_it->get<std::string>() + "'");
    set_active_room(apply_edit(active_room(), {{x, y}, *tile}));
    log(EventKind::Edit, {{"x", x}, {"y", y}, {"tile", std::string(1, tile_char(*tile))}});
    return {ack({})};
  }

  if (kind == "room/lock") {
    if (!payload.is_object()) protocol("payload must be an object");
    require_active();
    const int x = payload_int(payload, "x");
    const int y = payload_int(payload, "y");
    if (!active_room().in_bounds(x, y)) {
      throw Error(ErrorCode::OutOfBounds, "(" + std::to_string(x) + "," + std::to_string(y) + ") outside the room");
    }
    bool change = true;
    if (payload.contains("locked")) {
      if (!payload["locked"].is_boolean()) protocol("\"locked\" must be a boolean");
      change = payload["locked"].get<bool>() != active_room().locked(x, y);
    }
    if (change) {
      set_active_room(apply_edit(active_room(), {{x, y}, LockToggle{}}));
      log(EventKind::Lock, {{"x", x}, {"y", y}});
    }
    return {ack({{"locked", active_room().locked(x, y)}})};
  }

  if (kind == "dims/set") {
    const auto dims = payload_dims(payload);
    evolver_.set_dimensions(dims);
    const Json names = Json::array({to_string(dims[0]), to_string(dims[1])});
    log(EventKind::SetDims, {{"dims", names}});
    return {ack({{"dims", names}})};
  }

  if (kind == "suggestion/apply") {
    const auto cell = payload_cell(payload);
    auto applied = evolver_.apply_suggestion(cell);
    const int episode = ++episodes_requested_;
    const auto matrix = build_adhoc_matrix(cell, evolver_.grid().shape(), config_.adhoc_metric);
    std::mt19937_64 split_rng(derive_seed(seed_, 3, static_cast<std::uint64_t>(episode)));
    auto dataset = build_dataset(applied.population, matrix, split_rng, config_.test_fraction);
    pending_.push_back({episode, generation(),
                        trainer_->submit(std::move(dataset), derive_seed(seed_, 4, static_cast<std::uint64_t>(episode)))});
    dungeon_.rooms.at(active_room_) = applied.room;
    log(EventKind::ApplySuggestion, {{"cell", cell_json(cell)}, {"episode", episode}});
    return {ack({{"episode", episode}, {"room", room_to_json(applied.room)}})};
  }

  if (kind == "room/select") {
    if (!payload.is_object() || !payload.contains("room") || !payload["room"].is_string()) {
      protocol("payload needs \"room\": <id>");
    }
    const auto id = payload["room"].get<std::string>();
    const auto it = dungeon_.rooms.find(id);
    if (it == dungeon_.rooms.end()) throw Error(ErrorCode::UnknownRoom, "no room '" + id + "'");
    if (static_cast<int>(it->second.area()) != model_->net.input_size()) {
      throw Error(ErrorCode::ShapeMismatch, "room '" + id + "' does not match the preference model's room size");
    }
    active_room_ = id;
    evolver_.set_target_room(it->second);
    log(EventKind::SelectRoom, {{"room", id}});
    return {ack({{"room", id}})};
  }

  if (kind == "session/save") {
    if (!payload.is_object() || !payload.contains("path") || !payload["path"].is_string()) {
      protocol("payload needs \"path\"");
    }
    const auto path = payload["path"].get<std::string>();
    save(path);
    return {ack({{"path", path}})};
  }

  if (kind == "model/status") {
    const auto st = status();
    return {message("model/status", {{"testAcc", st.test_accuracy}, {"episodes", st.episodes}, {"meanW1", st.mean_w1}})};
  }

  if (kind == "suggestions/request") return {message("suggestions/published", suggestions_payload(evolver_.publish()))};

  if (kind == "session/start" || kind == "session/load") protocol(kind + " is handled by the service, not a running session");
  protocol("unknown message kind '" + kind + "'");
}

std::vector<Json> Session::install(TrainingOutcome outcome, int episode) {
  evolver_.set_model(outcome.model);
  model_ = outcome.model;
  log(EventKind::TrainDone, {{"episode", episode}, {"testAcc", outcome.result.test_accuracy}});
  last_training_ = std::move(outcome);
  const auto st = status();
  return {message("model/status", {{"testAcc", st.test_accuracy}, {"episodes", st.episodes}, {"meanW1", st.mean_w1}})};
}

std::vector<Json> Session::finish_training() {
  if (pending_.empty()) return {};
  auto front = std::move(pending_.front());
  pending_.pop_front();
  try {
    return install(front.outcome.get(), front.episode);
  } catch (const std::exception& e) {
    return {message("error", {{"code", "TrainingFailed"}, {"message", e.what()}, {"replyTo", nullptr}})};
  }
}

std::vector<Json> Session::finish_all_training() {
  std::vector<Json> out;
  while (!pending_.empty()) {
    auto more = finish_training();
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::vector<Json> Session::tick() {
  std::vector<Json> out;
  if (!evolver_.paused()) evolver_.step();

  const auto append = [&](std::vector<Json> more) { out.insert(out.end(), more.begin(), more.end()); };
  if (policy_ == SwapPolicy::WhenReady) {
    while (!pending_.empty() &&
           pending_.front().outcome.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
      append(finish_training());
    }
  } else if (policy_ == SwapPolicy::AfterDelay) {
    const auto delay = static_cast<std::uint64_t>(std::max(0, config_.swap_delay_generations));
    while (!pending_.empty() && generation() >= pending_.front().requested_at + delay) append(finish_training());
  }

  if (auto_publish_ && generation() - last_publish_generation_ >= static_cast<std::uint64_t>(config_.publish_every_generations)) {
    append(publish_now());
  }
  return out;
}

std::vector<Json> Session::advance(std::uint64_t generations) {
  std::vector<Json> out;
  for (std::uint64_t g = 0; g < generations; ++g) {
    auto more = tick();
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::vector<Json> Session::publish_now() {
  const auto snapshot = evolver_.publish();
  const auto digest = snapshot_digest(snapshot);
  stream_digest_ = fnv1a(hex64(digest), stream_digest_);
  last_publish_generation_ = generation();
  log(EventKind::Publish, {{"digest", hex64(digest)}});
  return {message("suggestions/published", suggestions_payload(snapshot))};
}

Json Session::suggestions_payload(const EliteSnapshot& snapshot) const {
  Json cells = Json::array();
  for (std::size_t f = 0; f < snapshot.cells.size(); ++f) {
    const auto& c = snapshot.cells[f];
    if (!c) {
      cells.push_back(nullptr);
      continue;
    }
    cells.push_back({{"cell", cell_json(snapshot.index_of(f))},
                     {"tiles", tiles_to_string(c->room.tiles())},
                     {"objective", c->objective},
                     {"combined", c->combined},
                     {"descriptor", {c->descriptor.values[0], c->descriptor.values[1]}}});
  }
  Json top = Json::array();
  for (const auto& e : rank_top_preference(snapshot, *model_, config_.top_k)) {
    top.push_back({{"cell", cell_json(e.cell)},
                   {"tiles", tiles_to_string(e.room.tiles())},
                   {"predictedPref", e.predicted_pref},
                   {"confidence", e.confidence}});
  }
  const auto& room = active_room();
  return {{"generation", snapshot.generation},
          {"dims", {to_string(snapshot.dims[0]), to_string(snapshot.dims[1])}},
          {"room", {{"id", active_room_}, {"w", room.width()}, {"h", room.height()}}},
          {"grid", {{"rows", snapshot.shape.rows}, {"cols", snapshot.shape.cols}, {"cells", std::move(cells)}}},
          {"top", std::move(top)},
          {"digest", hex64(snapshot_digest(snapshot))}};
}

// ---------------------------------------------------------------------------
// Persistence

Json Session::to_json() const {
  Json events = Json::array();
  for (const auto& e : events_) {
    events.push_back({{"seq", e.seq},
                      {"generation", e.generation},
                      {"timestamp", e.timestamp_ms},
                      {"kind", to_string(e.kind)},
                      {"payload", e.payload}});
  }
  return {{"format", kSessionFormat},
          {"version", kSessionFormatVersion},
          {"id", id_},
          {"seed", seed_},
          {"config", config_to_json(config_)},
          {"initialDungeon", dungeon_to_json(initial_dungeon_)},
          {"initialActiveRoom", initial_active_room_},
          {"dungeon", dungeon_to_json(dungeon_)},
          {"activeRoom", active_room_},
          {"generation", generation()},
          {"events", std::move(events)},
          {"model", model_to_string(*model_)},
          {"digests", {{"dungeon", hex64(dungeon_digest())}, {"snapshots", hex64(stream_digest_)}}}};
}

void Session::save(const std::string& path) {
  log(EventKind::Save, {{"path", path}});
  const auto text = to_json().dump(1) + "\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

std::unique_ptr<Session> Session::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, path + ": parse error at byte " + std::to_string(e.byte));
  }
  return replay(doc);
}

std::unique_ptr<Session> Session::replay(const Json& doc) {
  const auto fail = [](const std::string& what) -> void { throw Error(ErrorCode::MalformedInput, "session document: " + what); };
  if (!doc.is_object() || doc.value("format", "") != kSessionFormat) fail("not a session document");
  if (!doc.contains("version") || !doc["version"].is_number_integer()) fail("missing version");
  if (doc["version"].get<int>() != kSessionFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "session format version " + doc["version"].dump() + " is not supported (expected " +
                                                std::to_string(kSessionFormatVersion) + ")");
  }
  for (const char* key : {"id", "seed", "config", "initialDungeon", "initialActiveRoom", "events"}) {
    if (!doc.contains(key)) fail(std::string("missing '") + key + "'");
  }

  auto session = std::make_unique<Session>(doc["id"].get<std::string>(), dungeon_from_json(doc["initialDungeon"]),
                                           doc["initialActiveRoom"].get<std::string>(), config_from_json(doc["config"]),
                                           doc["seed"].get<std::uint64_t>(), SwapPolicy::Explicit);
  session->set_auto_publish(false);

  for (const auto& ev : doc["events"]) {
    const auto kind = event_kind_from_string(ev.at("kind").get<std::string>());
    if (!kind) fail("unknown event kind " + ev.at("kind").dump());
    const auto gen = ev.at("generation").get<std::uint64_t>();
    if (session->generation() > gen) fail("event generations go backwards at seq " + ev.at("seq").dump());
    while (session->generation() < gen) session->tick();

    const auto& payload = ev.at("payload");
    switch (*kind) {
      case EventKind::Publish: {
        session->publish_now();
        const auto expected = payload.at("digest").get<std::string>();
        if (session->events_.back().payload["digest"] != expected) {
          fail("replay diverged: snapshot digest mismatch at seq " + ev.at("seq").dump());
        }
        break;
      }
      case EventKind::TrainDone:
        if (session->pending_.empty()) fail("TRAIN_DONE without a pending training episode");
        session->finish_training();
        break;
      case EventKind::Save:
        session->log(EventKind::Save, payload);
        break;
      default: {
        const auto replies = session->handle_message({{"kind", message_kind_for(*kind)}, {"payload", payload}});
        for (const auto& r : replies) {
          if (r["kind"] == "error") fail("replay diverged at seq " + ev.at("seq").dump() + ": " + r["payload"]["message"].dump());
        }
      }
    }
  }

  if (doc.contains("digests")) {
    if (doc["digests"].value("dungeon", "") != hex64(session->dungeon_digest())) fail("replay diverged: dungeon digest mismatch");
    if (doc["digests"].value("snapshots", "") != hex64(session->stream_digest())) fail("replay diverged: snapshot stream mismatch");
  }
  if (doc.contains("model") && doc["model"].get<std::string>() != model_to_string(*session->model_)) {
    fail("replay diverged: model checkpoint mismatch");
  }
  return session;
}

}  // namespace qdpref
