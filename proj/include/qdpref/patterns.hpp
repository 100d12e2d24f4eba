#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "qdpref/level.hpp"

namespace qdpref {

// Tunables for the objective and the dimension metrics.
struct PatternConfig {
  double chamber_target = 0.5;     // target share of chamber tiles among walkable tiles
  double meso_norm = 4.0;          // meso count that saturates the meso score
  double dead_end_penalty = 0.5;   // weight of each dead end in the meso score
  int patterns_cap = 10;           // meso count that saturates the PATTERNS dimension
  double leniency_enemy_share = 0.1;
  int chamber_side = 3;
};

// ---------------------------------------------------------------------------
// Connectivity

/// Maximal 4-connected components of non-WALL tiles, each listed in BFS order,
/// components ordered by their first tile in row-major order.
std::vector<std::vector<Position>> walkable_components(const Room& room);

/// Component id per tile (-1 for WALL); ids follow walkable_components order.
std::vector<int> component_labels(const Room& room);

bool is_feasible(const Room& room);

/// Gradient toward feasibility for the infeasible population; 1.0 iff feasible.
double infeasibility_fitness(const Room& room);

// ---------------------------------------------------------------------------
// Patterns

enum class SpatialLabel : std::uint8_t { Chamber, Corridor, Connector, Nothing };

struct SpatialClassification {
  int width = 0;
  int height = 0;
  std::vector<std::optional<SpatialLabel>> labels;  // nullopt on WALL tiles

  std::optional<SpatialLabel> at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  int count(SpatialLabel label) const;
};

SpatialClassification spatial_patterns(const Room& room, const PatternConfig& config = {});

enum class MesoKind : std::uint8_t { TreasureRoom, GuardRoom, Ambush, DeadEnd };

std::string_view to_string(MesoKind kind);

struct MesoPattern {
  MesoKind kind;
  std::vector<Position> tiles;
};

std::vector<MesoPattern> meso_patterns(const Room& room, const PatternConfig& config = {});
std::vector<MesoPattern> meso_patterns(const Room& room, const SpatialClassification& spatial);

/// Pattern-based fitness of a feasible room. Throws InfeasibleInput otherwise.
double objective_fitness(const Room& room, const PatternConfig& config = {});

// ---------------------------------------------------------------------------
// Behaviour dimensions

enum class DimensionKind : std::uint8_t { Symmetry, Similarity, Patterns, Linearity, Leniency };
inline constexpr int kDimensionKindCount = 5;

std::string_view to_string(DimensionKind kind);
std::optional<DimensionKind> dimension_from_string(std::string_view name);

using DimensionPair = std::array<DimensionKind, 2>;

struct BehaviorDescriptor {
  DimensionPair dims{DimensionKind::Symmetry, DimensionKind::Similarity};
  std::array<double, 2> values{0.0, 0.0};
  friend bool operator==(const BehaviorDescriptor&, const BehaviorDescriptor&) = default;
};

/// Value in [0,1]. SIMILARITY needs `target`, otherwise MissingTarget.
double dimension_value(const Room& room, DimensionKind kind, const Room* target, const PatternConfig& config = {});

double symmetry(const TileGrid& tiles, int width, int height);
double similarity(const TileGrid& a, const TileGrid& b);

// Everything the evaluator needs from one pass over a room.
struct RoomAnalysis {
  bool feasible = false;
  double infeasibility = 0.0;
  int walkable = 0;
  int enemies = 0;
  SpatialClassification spatial;
  std::vector<MesoPattern> meso;
};

RoomAnalysis analyze_room(const Room& room, const PatternConfig& config = {});
/// Objective from a precomputed analysis; the caller guarantees feasibility.
double objective_from(const RoomAnalysis& analysis, const PatternConfig& config);
double dimension_from(const Room& room, const RoomAnalysis& analysis, DimensionKind kind, const Room* target,
                      const PatternConfig& config);

/// Both dimensions of `dims`; throws DuplicateDimension if they coincide.
BehaviorDescriptor describe(const Room& room, DimensionPair dims, const Room* target, const PatternConfig& config = {});

}  // namespace qdpref
