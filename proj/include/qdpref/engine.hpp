#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <variant>

#include "qdpref/grid.hpp"
#include "qdpref/level.hpp"
#include "qdpref/patterns.hpp"
#include "qdpref/preference.hpp"

namespace qdpref {

struct EngineConfig {
  GridShape grid{5, 5};
  PopulationCaps caps{25, 25};
  DimensionPair dims{DimensionKind::Symmetry, DimensionKind::Similarity};
  int offspring_per_generation = 20;
  double crossover_rate = 0.5;  // per-tile chance of taking the second parent
  double mutation_rate = 0.04;
  int seed_count = 100;
  double seed_mutation_rate = 0.2;
  WeightedSumForm weighted_sum = WeightedSumForm::Convex;
  PatternConfig patterns;
};

// Commands reach the engine only between generations.
struct SetDimensions { DimensionPair dims; };
struct SetTargetRoom { Room room; };
struct ApplySuggestion { CellIndex cell; };
struct SetLocks { LockMask locks; };
struct Pause {};
struct Resume {};
struct SwapModel { std::shared_ptr<const PreferenceModel> model; };

using EngineCommand = std::variant<SetDimensions, SetTargetRoom, ApplySuggestion, SetLocks, Pause, Resume, SwapModel>;

// What ApplySuggestion hands back: the applied room and the population it was chosen from.
struct AppliedSuggestion {
  CellIndex cell;
  Room room;
  PopulationSnapshot population;
};

enum class TargetChange { Unchanged, Repaired, Reseeded };

// Constrained MAP-Elites with a feasible and an infeasible population per cell.
// Single-threaded and deterministic for a given seed and command sequence.
class Evolver {
 public:
  Evolver(EngineConfig config, std::uint64_t seed);

  const EngineConfig& config() const { return config_; }
  const EliteGrid& grid() const { return grid_; }
  const std::optional<Room>& target() const { return target_; }
  const std::shared_ptr<const PreferenceModel>& model() const { return model_; }
  std::uint64_t generation() const { return grid_.generation(); }
  bool paused() const { return paused_; }

  /// One generation of offspring. Throws NoPopulation without population or target.
  void step();

  /// Replaces the target. Same shape: repairs, re-evaluates and injects seeds. New shape: reseeds.
  TargetChange set_target_room(const Room& room);
  /// Throws DuplicateDimension.
  void set_dimensions(DimensionPair dims);
  void set_locks(const LockMask& locks);
  /// Installs a new model and rescores every feasible individual.
  void set_model(std::shared_ptr<const PreferenceModel> model);

  /// Makes the elite of `cell` the new target. Throws OutOfRange / EmptyCell.
  AppliedSuggestion apply_suggestion(CellIndex cell);

  std::optional<AppliedSuggestion> apply(const EngineCommand& command);

  EliteSnapshot publish() const;

  /// Evaluates a genotype against the current target, dims and model (genotype used as is).
  Individual evaluate(TileGrid genotype) const;
  /// Forces locked tiles to the target and FLOOR under doors.
  void repair(TileGrid& genotype) const;

 private:
  void seed_from_target();
  void reinsert_all();
  TileGrid mutated(TileGrid genotype, double rate);
  double blend_score(const TileGrid& genotype, double objective) const;

  EngineConfig config_;
  EliteGrid grid_;
  std::optional<Room> target_;
  std::shared_ptr<const PreferenceModel> model_;
  std::mt19937_64 rng_;
  bool paused_ = false;
};

}  // namespace qdpref
