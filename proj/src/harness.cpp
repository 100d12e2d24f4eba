#include "qdpref/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdpref/digest.hpp"
#include "qdpref/error.hpp"

namespace qdpref {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

DimensionKind scenario_dim(const std::string& name) {
  const auto kind = dimension_from_string(name);
  if (!kind) throw Error(ErrorCode::ConfigError, "unknown dimension '" + name + "' in scenario");
  return *kind;
}

double policy_score(const DesignerPolicy& policy, const Room& room, const Room& target, int episode,
                    const PatternConfig& patterns) {
  switch (policy.kind) {
    case PolicyKind::MaxDimension: return dimension_value(room, policy.dim, &target, patterns);
    case PolicyKind::PatternSeeker: return objective_fitness(room, patterns);
    case PolicyKind::Drifting:
      return dimension_value(room, episode >= policy.switch_episode ? policy.dim_b : policy.dim, &target, patterns);
    case PolicyKind::Random: break;
  }
  return 0.0;
}

// Fixed draft applied before the first episode, sized to the room.
std::vector<Json> draft_edits(int w, int h) {
  std::vector<Json> edits;
  const auto edit = [&](int x, int y, const char* tile) {
    if (x > 0 && y > 0 && x < w - 1 && y < h - 1) {
      edits.push_back({{"kind", "room/edit"}, {"payload", {{"x", x}, {"y", y}, {"tile", tile}}}});
    }
  };
  const int a = w / 4, b = w - 1 - w / 4;
  for (int y = 1; y <= h / 3; ++y) edit(a, y, "W");
  for (int y = h - 1 - h / 3; y < h - 1; ++y) edit(b, y, "W");
  edit(w / 2, 1, "T");
  edit(w / 2, h - 2, "E");
  return edits;
}

}  // namespace

DesignerPolicy parse_scenario(const std::string& name) {
  const auto parts = split(name, ':');
  DesignerPolicy p;
  if (parts.size() == 2 && parts[0] == "max") {
    p.kind = PolicyKind::MaxDimension;
    p.dim = scenario_dim(parts[1]);
  } else if (parts.size() == 1 && parts[0] == "patterns") {
    p.kind = PolicyKind::PatternSeeker;
  } else if (parts.size() == 1 && parts[0] == "random") {
    p.kind = PolicyKind::Random;
  } else if (parts.size() == 4 && parts[0] == "drift") {
    p.kind = PolicyKind::Drifting;
    p.dim = scenario_dim(parts[1]);
    p.dim_b = scenario_dim(parts[2]);
    try {
      p.switch_episode = std::stoi(parts[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad switch episode in scenario '" + name + "'");
    }
  } else {
    throw Error(ErrorCode::ConfigError,
                "unknown scenario '" + name + "' (expected max:<dim>, patterns, random or drift:<dimA>:<dimB>:<episode>)");
  }
  return p;
}

std::string scenario_name(const DesignerPolicy& p) {
  switch (p.kind) {
    case PolicyKind::MaxDimension: return "max:" + std::string(to_string(p.dim));
    case PolicyKind::PatternSeeker: return "patterns";
    case PolicyKind::Random: return "random";
    case PolicyKind::Drifting:
      return "drift:" + std::string(to_string(p.dim)) + ":" + std::string(to_string(p.dim_b)) + ":" +
             std::to_string(p.switch_episode);
  }
  return "?";
}

CellIndex synthetic_select(const DesignerPolicy& policy, const EliteSnapshot& snapshot, const Room& target,
                           std::mt19937_64& rng, int episode) {
  std::vector<std::size_t> filled;
  for (std::size_t f = 0; f < snapshot.cells.size(); ++f) {
    if (snapshot.cells[f]) filled.push_back(f);
  }
  if (filled.empty()) throw Error(ErrorCode::EmptySnapshot, "snapshot has no elites to choose from");

  if (policy.kind == PolicyKind::Random) {
    std::uniform_int_distribution<std::size_t> pick(0, filled.size() - 1);
    return snapshot.index_of(filled[pick(rng)]);
  }
  std::size_t best = filled.front();
  double best_score = policy_score(policy, snapshot.cells[best]->room, target, episode, {});
  for (std::size_t k = 1; k < filled.size(); ++k) {
    const double s = policy_score(policy, snapshot.cells[filled[k]]->room, target, episode, {});
    if (s > best_score) {
      best = filled[k];
      best_score = s;
    }
  }
  return snapshot.index_of(best);
}

SyntheticDesigner::SyntheticDesigner(DesignerPolicy policy, std::uint64_t seed)
    : policy_(policy), select_rng_(derive_seed(seed, 10)), favorite_rng_(derive_seed(seed, 11)) {}

CellIndex SyntheticDesigner::select(const EliteSnapshot& snapshot, const Room& target, int episode) {
  return synthetic_select(policy_, snapshot, target, select_rng_, episode);
}

CellIndex SyntheticDesigner::favorite(const EliteSnapshot& snapshot, const Room& target, int episode) {
  return synthetic_select(policy_, snapshot, target, favorite_rng_, episode);
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "episode,testAcc,meanConfidence,meanW1,favoriteRank,generations,wallMs\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%d,%llu,%.3f\n", r.episode, r.test_accuracy, r.mean_confidence,
                  r.mean_w1, r.favorite_rank, static_cast<unsigned long long>(r.generations), r.wall_ms);
    out += buf;
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.episodes < 1) throw Error(ErrorCode::ConfigError, "episodes must be positive");
  if (cfg.burst_generations < 1) throw Error(ErrorCode::ConfigError, "burst length must be positive");
  const auto policy = parse_scenario(cfg.scenario);
  const auto& sc = cfg.session;
  const auto delay = static_cast<std::uint64_t>(std::max(0, sc.swap_delay_generations));

  Session session("sim-" + std::to_string(cfg.seed), Session::default_dungeon(sc), "room-1", sc, cfg.seed,
                  SwapPolicy::AfterDelay);
  session.set_wall_clock(cfg.record_wall_time);
  SyntheticDesigner designer(policy, cfg.seed);

  for (const auto& msg : draft_edits(sc.room_width, sc.room_height)) {
    for (const auto& reply : session.handle_message(msg)) {
      if (reply["kind"] == "error") throw Error(ErrorCode::ConfigError, "draft edit rejected: " + reply.dump());
    }
  }

  ExperimentReport report;
  for (int episode = 1; episode <= cfg.episodes; ++episode) {
    // The swap delay counts toward the burst, so applications are burst_generations apart.
    const std::uint64_t burst = episode == 1 ? cfg.burst_generations
                                             : static_cast<std::uint64_t>(cfg.burst_generations) - std::min<std::uint64_t>(delay, cfg.burst_generations);
    session.advance(burst);

    const auto before = session.evolver().publish();
    const auto cell = designer.select(before, session.active_room(), episode);
    for (const auto& reply : session.handle_message({{"kind", "suggestion/apply"}, {"payload", {{"cell", {cell.i, cell.j}}}}})) {
      if (reply["kind"] == "error") throw Error(ErrorCode::DomainError, "suggestion rejected: " + reply.dump());
    }
    const auto applied_at = session.generation();
    session.advance(delay);
    session.finish_all_training();

    const auto after = session.evolver().publish();
    const auto& model = *session.model();
    ReportRow row;
    row.episode = episode;
    row.generations = session.generation() - applied_at;
    if (session.last_training()) {
      row.test_accuracy = session.last_training()->result.test_accuracy;
      if (cfg.record_wall_time) row.wall_ms = session.last_training()->wall_ms;
    }
    const auto status = model_status(model, after);
    row.mean_w1 = status.mean_w1;
    int n = 0;
    for (const auto& c : after.cells) {
      if (!c) continue;
      row.mean_confidence += confidence(predict(model, c->room.tiles()));
      ++n;
    }
    if (n > 0) row.mean_confidence /= n;
    const auto fav = designer.favorite(after, session.active_room(), episode);
    const auto top = rank_top_preference(after, model, sc.top_k);
    for (std::size_t r = 0; r < top.size(); ++r) {
      if (top[r].cell == fav) row.favorite_rank = static_cast<int>(r) + 1;
    }
    report.rows.push_back(row);
  }
  session.publish_now();
  report.stream_digest = session.stream_digest();

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + cfg.out_dir + ": " + ec.message());
    const fs::path dir(cfg.out_dir);
    session.save((dir / "session.json").string());
    std::ofstream csv(dir / "report.csv", std::ios::binary | std::ios::trunc);
    csv << report_csv(report.rows);
    std::ofstream digest(dir / "digest.txt", std::ios::binary | std::ios::trunc);
    digest << hex64(report.stream_digest) << "\n";
    if (!csv || !digest) throw Error(ErrorCode::IoError, "cannot write report files in " + cfg.out_dir);
  }
  report.session_document = session.to_json();
  return report;
}

std::uint64_t replay_log(const std::string& path) { return Session::load(path)->stream_digest(); }

}  // namespace qdpref
