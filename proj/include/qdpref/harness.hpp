#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qdpref/config.hpp"
#include "qdpref/grid.hpp"
#include "qdpref/session.hpp"

namespace qdpref {

enum class PolicyKind { MaxDimension, PatternSeeker, Random, Drifting };

struct DesignerPolicy {
  PolicyKind kind = PolicyKind::MaxDimension;
  DimensionKind dim = DimensionKind::Symmetry;    // MaxDimension, and Drifting before the switch
  DimensionKind dim_b = DimensionKind::Leniency;  // Drifting from switch_episode on
  int switch_episode = 0;
};

/// Scenario names: "max:<dim>", "patterns", "random", "drift:<dimA>:<dimB>:<episode>". Throws ConfigError.
DesignerPolicy parse_scenario(const std::string& name);
std::string scenario_name(const DesignerPolicy& policy);

/// The cell the policy would apply at `episode`. Ties go to the first cell in row-major order.
/// `target` is the room similarity is measured against. Throws EmptySnapshot.
CellIndex synthetic_select(const DesignerPolicy& policy, const EliteSnapshot& snapshot, const Room& target,
                           std::mt19937_64& rng, int episode);

// Scripted stand-in for a designer: a policy plus two rng streams,
// one for selections and one for the favorite measured after each swap.
class SyntheticDesigner {
 public:
  SyntheticDesigner(DesignerPolicy policy, std::uint64_t seed);

  const DesignerPolicy& policy() const { return policy_; }
  CellIndex select(const EliteSnapshot& snapshot, const Room& target, int episode);
  CellIndex favorite(const EliteSnapshot& snapshot, const Room& target, int episode);

 private:
  DesignerPolicy policy_;
  std::mt19937_64 select_rng_;
  std::mt19937_64 favorite_rng_;
};

struct ExperimentConfig {
  std::string scenario = "max:symmetry";
  int episodes = 10;
  std::uint64_t seed = 42;
  std::string out_dir;  // empty: nothing written
  SessionConfig session;
  int burst_generations = 500;  // generations between applications
  bool record_wall_time = false;
};

struct ReportRow {
  int episode = 0;
  double test_accuracy = 0.0;
  double mean_confidence = 0.0;
  double mean_w1 = 0.0;
  int favorite_rank = 0;  // 1..top_k inside the preference pane, 0 if absent
  std::uint64_t generations = 0;  // generations the engine ran while the episode trained
  double wall_ms = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::uint64_t stream_digest = 0;
  Json session_document;
};

/// Runs a lockstep session against a synthetic designer. With an out_dir, writes
/// report.csv, digest.txt and session.json there. Throws ConfigError.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string report_csv(const std::vector<ReportRow>& rows);

/// Replays a saved session log and checks every recorded digest. Returns the stream digest.
std::uint64_t replay_log(const std::string& path);

}  // namespace qdpref
