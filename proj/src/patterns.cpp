#include "qdpref/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "qdpref/error.hpp"

namespace qdpref {

namespace {

constexpr std::array<std::array<int, 2>, 4> kNeighbors{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

bool walkable(TileKind kind) { return kind != TileKind::Wall; }

bool is_entity(TileKind kind) { return kind == TileKind::Treasure || kind == TileKind::Enemy; }

int walkable_degree(const Room& room, int x, int y) {
  int degree = 0;
  for (const auto& [dx, dy] : kNeighbors) {
    const int nx = x + dx;
    const int ny = y + dy;
    if (room.in_bounds(nx, ny) && walkable(room.at(nx, ny))) ++degree;
  }
  return degree;
}

// Flood fill over tiles accepted by `pred`, assigning ids in row-major discovery order.
template <class Pred>
std::vector<int> flood_labels(const Room& room, Pred pred, std::vector<std::vector<Position>>* members) {
  std::vector<int> labels(room.area(), -1);
  int next = 0;
  std::deque<Position> queue;
  for (int y = 0; y < room.height(); ++y) {
    for (int x = 0; x < room.width(); ++x) {
      if (labels[room.index(x, y)] != -1 || !pred(x, y)) continue;
      std::vector<Position> component;
      labels[room.index(x, y)] = next;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const auto p = queue.front();
        queue.pop_front();
        component.push_back(p);
        for (const auto& [dx, dy] : kNeighbors) {
          const int nx = p.x + dx;
          const int ny = p.y + dy;
          if (!room.in_bounds(nx, ny) || labels[room.index(nx, ny)] != -1 || !pred(nx, ny)) continue;
          labels[room.index(nx, ny)] = next;
          queue.push_back({nx, ny});
        }
      }
      if (members) members->push_back(std::move(component));
      ++next;
    }
  }
  return labels;
}

struct Reachability {
  bool feasible = false;
  double fitness = 0.0;
};

Reachability reachability(const Room& room) {
  const auto labels = component_labels(room);
  const auto doors = room.door_positions();

  std::set<int> door_components;
  for (const auto& p : doors) door_components.insert(labels[room.index(p.x, p.y)]);

  double door_term = 1.0;
  if (doors.size() >= 2) {
    std::size_t connected = 0;
    std::size_t total = 0;
    for (std::size_t a = 0; a < doors.size(); ++a) {
      for (std::size_t b = a + 1; b < doors.size(); ++b) {
        ++total;
        if (labels[room.index(doors[a].x, doors[a].y)] == labels[room.index(doors[b].x, doors[b].y)]) ++connected;
      }
    }
    door_term = static_cast<double>(connected) / static_cast<double>(total);
  }

  std::size_t entities = 0;
  std::size_t reachable = 0;
  std::set<int> entity_components;
  for (std::size_t i = 0; i < room.area(); ++i) {
    if (!is_entity(room.tiles()[i])) continue;
    ++entities;
    entity_components.insert(labels[i]);
    if (door_components.count(labels[i])) ++reachable;
  }
  const double entity_term = entities == 0 ? 1.0 : static_cast<double>(reachable) / static_cast<double>(entities);

  Reachability r;
  r.feasible = door_components.size() == 1 &&
               (entity_components.empty() ||
                (entity_components.size() == 1 && *entity_components.begin() == *door_components.begin()));
  r.fitness = r.feasible ? 1.0 : 0.5 * door_term + 0.5 * entity_term;
  return r;
}

}  // namespace

std::vector<std::vector<Position>> walkable_components(const Room& room) {
  std::vector<std::vector<Position>> members;
  flood_labels(room, [&](int x, int y) { return walkable(room.at(x, y)); }, &members);
  return members;
}

std::vector<int> component_labels(const Room& room) {
  return flood_labels(room, [&](int x, int y) { return walkable(room.at(x, y)); }, nullptr);
}

bool is_feasible(const Room& room) { return reachability(room).feasible; }

double infeasibility_fitness(const Room& room) { return reachability(room).fitness; }

int SpatialClassification::count(SpatialLabel label) const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), std::optional<SpatialLabel>(label)));
}

SpatialClassification spatial_patterns(const Room& room, const PatternConfig& config) {
  const int w = room.width();
  const int h = room.height();
  const int side = config.chamber_side;

  std::vector<std::uint8_t> chamber(room.area(), 0);
  for (int y0 = 0; y0 + side <= h; ++y0) {
    for (int x0 = 0; x0 + side <= w; ++x0) {
      bool open = true;
      for (int y = y0; y < y0 + side && open; ++y) {
        for (int x = x0; x < x0 + side; ++x) {
          if (!walkable(room.at(x, y))) {
            open = false;
            break;
          }
        }
      }
      if (!open) continue;
      for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) chamber[room.index(x, y)] = 1;
    }
  }

  SpatialClassification out;
  out.width = w;
  out.height = h;
  out.labels.assign(room.area(), std::nullopt);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto idx = room.index(x, y);
      if (!walkable(room.at(x, y))) continue;
      if (chamber[idx]) {
        out.labels[idx] = SpatialLabel::Chamber;
        continue;
      }
      const int degree = walkable_degree(room, x, y);
      if (degree >= 3) out.labels[idx] = SpatialLabel::Connector;
      else if (degree >= 1) out.labels[idx] = SpatialLabel::Corridor;
      else out.labels[idx] = SpatialLabel::Nothing;
    }
  }
  return out;
}

std::string_view to_string(MesoKind kind) {
  switch (kind) {
    case MesoKind::TreasureRoom: return "treasure_room";
    case MesoKind::GuardRoom: return "guard_room";
    case MesoKind::Ambush: return "ambush";
    case MesoKind::DeadEnd: return "dead_end";
  }
  return "?";
}

std::vector<MesoPattern> meso_patterns(const Room& room, const PatternConfig& config) {
  return meso_patterns(room, spatial_patterns(room, config));
}

std::vector<MesoPattern> meso_patterns(const Room& room, const SpatialClassification& spatial) {
  std::vector<MesoPattern> out;

  std::vector<std::vector<Position>> regions;
  flood_labels(room, [&](int x, int y) { return spatial.at(x, y) == SpatialLabel::Chamber; }, &regions);
  for (auto& region : regions) {
    int treasures = 0;
    int enemies = 0;
    for (const auto& p : region) {
      treasures += room.at(p.x, p.y) == TileKind::Treasure;
      enemies += room.at(p.x, p.y) == TileKind::Enemy;
    }
    if (treasures >= 2) out.push_back({MesoKind::TreasureRoom, region});
    if (treasures >= 1 && enemies >= 1) out.push_back({MesoKind::GuardRoom, region});
  }

  const auto doors = room.door_positions();
  for (int y = 0; y < room.height(); ++y) {
    for (int x = 0; x < room.width(); ++x) {
      if (room.at(x, y) != TileKind::Enemy) continue;
      const bool near_door = std::any_of(doors.begin(), doors.end(), [&](const Position& d) {
        return std::max(std::abs(d.x - x), std::abs(d.y - y)) <= 1;
      });
      if (near_door) out.push_back({MesoKind::Ambush, {{x, y}}});
    }
  }

  for (int y = 0; y < room.height(); ++y) {
    for (int x = 0; x < room.width(); ++x) {
      if (spatial.at(x, y) != SpatialLabel::Corridor || walkable_degree(room, x, y) != 1) continue;
      bool by_door = room.is_door_tile(x, y);
      for (const auto& [dx, dy] : kNeighbors) by_door = by_door || room.is_door_tile(x + dx, y + dy);
      if (!by_door) out.push_back({MesoKind::DeadEnd, {{x, y}}});
    }
  }
  return out;
}

RoomAnalysis analyze_room(const Room& room, const PatternConfig& config) {
  RoomAnalysis a;
  const auto r = reachability(room);
  a.feasible = r.feasible;
  a.infeasibility = r.fitness;
  for (auto t : room.tiles()) {
    a.walkable += walkable(t);
    a.enemies += t == TileKind::Enemy;
  }
  a.spatial = spatial_patterns(room, config);
  a.meso = meso_patterns(room, a.spatial);
  return a;
}

double objective_from(const RoomAnalysis& analysis, const PatternConfig& config) {
  const double chamber_share =
      analysis.walkable == 0 ? 0.0
                             : static_cast<double>(analysis.spatial.count(SpatialLabel::Chamber)) / analysis.walkable;
  const double spatial_score = std::clamp(1.0 - std::abs(config.chamber_target - chamber_share), 0.0, 1.0);

  int rooms = 0;
  int dead_ends = 0;
  for (const auto& m : analysis.meso) {
    rooms += m.kind == MesoKind::TreasureRoom || m.kind == MesoKind::GuardRoom;
    dead_ends += m.kind == MesoKind::DeadEnd;
  }
  const double meso_score = std::clamp((rooms - config.dead_end_penalty * dead_ends) / config.meso_norm, 0.0, 1.0);
  return 0.5 * spatial_score + 0.5 * meso_score;
}

double objective_fitness(const Room& room, const PatternConfig& config) {
  const auto analysis = analyze_room(room, config);
  if (!analysis.feasible) throw Error(ErrorCode::InfeasibleInput, "objective fitness needs a feasible room");
  return objective_from(analysis, config);
}

std::string_view to_string(DimensionKind kind) {
  switch (kind) {
    case DimensionKind::Symmetry: return "symmetry";
    case DimensionKind::Similarity: return "similarity";
    case DimensionKind::Patterns: return "patterns";
    case DimensionKind::Linearity: return "linearity";
    case DimensionKind::Leniency: return "leniency";
  }
  return "?";
}

std::optional<DimensionKind> dimension_from_string(std::string_view name) {
  for (int k = 0; k < kDimensionKindCount; ++k) {
    const auto kind = static_cast<DimensionKind>(k);
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

double symmetry(const TileGrid& tiles, int width, int height) {
  const auto wall = [&](int x, int y) { return tiles[static_cast<std::size_t>(y) * width + x] == TileKind::Wall; };
  int horizontal = 0;
  int vertical = 0;
  int rotation = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool w = wall(x, y);
      horizontal += w == wall(width - 1 - x, y);
      vertical += w == wall(x, height - 1 - y);
      rotation += w == wall(width - 1 - x, height - 1 - y);
    }
  }
  const double area = static_cast<double>(width) * height;
  return std::max({horizontal, vertical, rotation}) / area;
}

double similarity(const TileGrid& a, const TileGrid& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "similarity needs equally sized rooms");
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differing += a[i] != b[i];
  return 1.0 - static_cast<double>(differing) / static_cast<double>(a.size());
}

double dimension_from(const Room& room, const RoomAnalysis& analysis, DimensionKind kind, const Room* target,
                      const PatternConfig& config) {
  switch (kind) {
    case DimensionKind::Symmetry:
      return symmetry(room.tiles(), room.width(), room.height());
    case DimensionKind::Similarity:
      if (!target) throw Error(ErrorCode::MissingTarget, "SIMILARITY needs a target room");
      return similarity(room.tiles(), target->tiles());
    case DimensionKind::Patterns:
      return std::min(1.0, static_cast<double>(analysis.meso.size()) / config.patterns_cap);
    case DimensionKind::Linearity:
      return analysis.walkable == 0
                 ? 1.0
                 : 1.0 - static_cast<double>(analysis.spatial.count(SpatialLabel::Connector)) / analysis.walkable;
    case DimensionKind::Leniency: {
      // Guard against 0.1*area landing a hair above an integer.
      const double cap = std::ceil(config.leniency_enemy_share * static_cast<double>(room.area()) - 1e-9);
      return 1.0 - std::min(1.0, analysis.enemies / std::max(cap, 1.0));
    }
  }
  return 0.0;
}

double dimension_value(const Room& room, DimensionKind kind, const Room* target, const PatternConfig& config) {
  return dimension_from(room, analyze_room(room, config), kind, target, config);
}

BehaviorDescriptor describe(const Room& room, DimensionPair dims, const Room* target, const PatternConfig& config) {
  if (dims[0] == dims[1]) throw Error(ErrorCode::DuplicateDimension, "dimension pair repeats " + std::string(to_string(dims[0])));
  const auto analysis = analyze_room(room, config);
  return {dims,
          {std::clamp(dimension_from(room, analysis, dims[0], target, config), 0.0, 1.0),
           std::clamp(dimension_from(room, analysis, dims[1], target, config), 0.0, 1.0)}};
}

}  // namespace qdpref
