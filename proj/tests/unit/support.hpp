#pragma once
// Independent reference implementations used as test oracles. They share no
// code with the library: plain loops over the tile array, written for clarity.

#include <array>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qdpref/error.hpp"
#include "qdpref/level.hpp"

namespace oracle {

using qdpref::Room;
using qdpref::TileKind;

inline bool walk(const Room& r, int x, int y) { return r.in_bounds(x, y) && r.at(x, y) != TileKind::Wall; }

// Recursive-free flood fill with an explicit stack; returns a label per tile (-1 for walls).
inline std::vector<int> flood_labels(const Room& r) {
  const int w = r.width(), h = r.height();
  std::vector<int> label(static_cast<std::size_t>(w * h), -1);
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!walk(r, x, y) || label[y * w + x] >= 0) continue;
      std::vector<std::pair<int, int>> stack{{x, y}};
      label[y * w + x] = next;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k], ny = cy + dy[k];
          if (walk(r, nx, ny) && label[ny * w + nx] < 0) {
            label[ny * w + nx] = next;
            stack.push_back({nx, ny});
          }
        }
      }
      ++next;
    }
  }
  return label;
}

inline int degree(const Room& r, int x, int y) {
  return walk(r, x + 1, y) + walk(r, x - 1, y) + walk(r, x, y + 1) + walk(r, x, y - 1);
}

// Enumerate every side x side window; mark tiles of all-walkable windows.
inline std::vector<bool> square_cover(const Room& r, int side = 3) {
  const int w = r.width(), h = r.height();
  std::vector<bool> covered(static_cast<std::size_t>(w * h), false);
  for (int y0 = 0; y0 + side <= h; ++y0) {
    for (int x0 = 0; x0 + side <= w; ++x0) {
      bool all = true;
      for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) all = all && walk(r, x, y);
      if (!all) continue;
      for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) covered[y * w + x] = true;
    }
  }
  return covered;
}

// Door pairs in one component and reachable entities, straight from the definition.
inline double infeasibility(const Room& r) {
  const auto label = flood_labels(r);
  const auto doors = r.door_positions();
  int pairs = 0, connected = 0;
  for (std::size_t a = 0; a < doors.size(); ++a) {
    for (std::size_t b = a + 1; b < doors.size(); ++b) {
      ++pairs;
      const int la = label[doors[a].y * r.width() + doors[a].x];
      const int lb = label[doors[b].y * r.width() + doors[b].x];
      connected += (la >= 0 && la == lb);
    }
  }
  std::set<int> door_components;
  for (const auto& d : doors) door_components.insert(label[d.y * r.width() + d.x]);
  int entities = 0, reached = 0;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      const auto t = r.at(x, y);
      if (t != TileKind::Treasure && t != TileKind::Enemy) continue;
      ++entities;
      reached += door_components.count(label[y * r.width() + x]) > 0;
    }
  }
  const double dp = pairs == 0 ? 1.0 : static_cast<double>(connected) / pairs;
  const double ep = entities == 0 ? 1.0 : static_cast<double>(reached) / entities;
  return 0.5 * dp + 0.5 * ep;
}

// Random valid room: door tiles forced to FLOOR, tile kinds drawn with the given wall share.
inline Room random_room(std::mt19937_64& rng, int w, int h, const std::vector<qdpref::Door>& doors, double wall_share = 0.35,
                        double entity_share = 0.08) {
  auto room = Room::create(w, h, doors);
  qdpref::TileGrid tiles(room.area());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& t : tiles) {
    const double v = u(rng);
    t = v < wall_share ? TileKind::Wall
        : v < wall_share + entity_share / 2 ? TileKind::Treasure
        : v < wall_share + entity_share ? TileKind::Enemy
                                        : TileKind::Floor;
  }
  for (const auto& p : room.door_positions()) tiles[room.index(p.x, p.y)] = TileKind::Floor;
  return room.with_tiles(tiles);
}

inline Room from_rows(const std::vector<std::string>& rows, const std::vector<qdpref::Door>& doors) {
  std::string flat;
  for (const auto& r : rows) flat += r;
  return Room::create(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), doors)
      .with_tiles(qdpref::tiles_from_string(flat));
}

}  // namespace oracle

#define CHECK_CODE(expr, ecode)                         \
  do {                                                  \
    bool thrown_ = false;                               \
    try {                                               \
      (void)(expr);                                     \
    } catch (const qdpref::Error& e_) {                 \
      thrown_ = true;                                   \
      CHECK(e_.code() == qdpref::ErrorCode::ecode);     \
    }                                                   \
    CHECK_MESSAGE(thrown_, "expected " #ecode);         \
  } while (0)
