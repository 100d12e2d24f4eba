#pragma once

#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdpref/config.hpp"
#include "qdpref/engine.hpp"
#include "qdpref/level.hpp"
#include "qdpref/preference.hpp"
#include "qdpref/trainer.hpp"

namespace qdpref {

using Json = nlohmann::json;

enum class EventKind { Edit, Lock, SetDims, ApplySuggestion, Publish, TrainDone, Save, SelectRoom };

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view name);

struct DesignerEvent {
  std::uint64_t seq = 0;
  std::uint64_t generation = 0;  // engine generation at which the event took effect
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::Edit;
  Json payload;
};

struct PreferenceEntry {
  CellIndex cell;
  Room room;
  double predicted_pref = 0.0;
  double confidence = 0.0;
};

/// Elites ordered by predicted preference, then confidence, then row-major cell; at most k.
std::vector<PreferenceEntry> rank_top_preference(const EliteSnapshot& snapshot, const PreferenceModel& model, int k = 6);

struct ModelStatus {
  double test_accuracy = 0.0;
  int episodes = 0;
  double mean_w1 = 0.0;  // over the current elites
};

ModelStatus model_status(const PreferenceModel& model, const EliteSnapshot& snapshot);

// When a finished training episode replaces the engine's model.
enum class SwapPolicy {
  WhenReady,   // first generation boundary after training completes (live sessions)
  AfterDelay,  // exactly swap_delay_generations after the suggestion was applied (lockstep runs)
  Explicit,    // only through finish_training(), driven by a TRAIN_DONE event (replay)
};

inline constexpr int kSessionFormatVersion = 1;

// One design session: dungeon, engine, preference model, trainer and event log.
// Not thread-safe; a live session serialises access through LiveSession.
// Every method that changes state runs at a generation boundary and logs an event,
// so (seed, event log) reproduces the session.
class Session {
 public:
  Session(std::string id, Dungeon dungeon, std::string active_room, SessionConfig config, std::uint64_t seed,
          SwapPolicy policy);
  ~Session();
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;

  /// A single open room with doors on the west and east walls.
  static Dungeon default_dungeon(const SessionConfig& config);

  /// Routes one inbound protocol message. Failures come back as `error` messages; state stays intact.
  std::vector<Json> handle_message(const Json& message);

  /// One generation plus boundary work (model swaps, cadence publishing).
  std::vector<Json> tick();
  std::vector<Json> advance(std::uint64_t generations);
  /// Publishes the current elites and logs a PUBLISH event.
  std::vector<Json> publish_now();
  /// Waits for the oldest in-flight episode and installs its model.
  std::vector<Json> finish_training();
  /// Waits for and installs every in-flight episode.
  std::vector<Json> finish_all_training();

  void set_auto_publish(bool on) { auto_publish_ = on; }
  void set_swap_policy(SwapPolicy policy) { policy_ = policy; }
  /// Off: events are stamped with timestamp 0, so logs of scripted runs compare byte for byte.
  void set_wall_clock(bool on) { wall_clock_ = on; }

  const std::string& id() const { return id_; }
  const Dungeon& dungeon() const { return dungeon_; }
  const std::string& active_room_id() const { return active_room_; }
  const Room& active_room() const { return dungeon_.rooms.at(active_room_); }
  const Evolver& evolver() const { return evolver_; }
  std::uint64_t generation() const { return evolver_.generation(); }
  const std::shared_ptr<const PreferenceModel>& model() const { return model_; }
  const std::vector<DesignerEvent>& events() const { return events_; }
  const SessionConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  SwapPolicy swap_policy() const { return policy_; }
  std::size_t training_in_flight() const { return pending_.size(); }
  const std::optional<TrainingOutcome>& last_training() const { return last_training_; }

  /// Running digest over every snapshot published so far.
  std::uint64_t stream_digest() const { return stream_digest_; }
  std::uint64_t dungeon_digest() const;

  ModelStatus status() const;
  Json suggestions_payload(const EliteSnapshot& snapshot) const;

  /// Save document: initial dungeon, config, seed, event log, model checkpoint, digests.
  Json to_json() const;
  /// Logs a SAVE event and writes the document. Throws IoError.
  void save(const std::string& path);
  /// Reads, version-checks and replays a save document. Throws IoError / VersionMismatch / MalformedInput.
  static std::unique_ptr<Session> load(const std::string& path);
  static std::unique_ptr<Session> replay(const Json& document);

 private:
  struct PendingEpisode {
    int episode = 0;
    std::uint64_t requested_at = 0;
    std::shared_future<TrainingOutcome> outcome;
  };

  Json message(const std::string& kind, Json payload);
  Json error_message(const std::string& code, const std::string& text, const Json& reply_to);
  void log(EventKind kind, Json payload);
  std::vector<Json> route(const std::string& kind, const Json& payload, const Json& seq);
  std::vector<Json> install(TrainingOutcome outcome, int episode);
  void set_active_room(Room room);

  std::string id_;
  SessionConfig config_;
  std::uint64_t seed_;
  SwapPolicy policy_;
  bool wall_clock_ = true;
  Dungeon initial_dungeon_;
  std::string initial_active_room_;
  Dungeon dungeon_;
  std::string active_room_;
  Evolver evolver_;
  std::shared_ptr<const PreferenceModel> model_;
  std::unique_ptr<Trainer> trainer_;
  std::deque<PendingEpisode> pending_;
  std::optional<TrainingOutcome> last_training_;
  std::vector<DesignerEvent> events_;
  int episodes_requested_ = 0;
  std::uint64_t out_seq_ = 0;
  std::uint64_t stream_digest_;
  std::uint64_t last_publish_generation_ = 0;
  bool auto_publish_ = true;
};

/// Seeds derived from the session seed, one stream per purpose and episode.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace qdpref
