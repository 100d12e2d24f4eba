#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qdpref/level.hpp"
#include "qdpref/patterns.hpp"

namespace qdpref {

struct GridShape {
  int rows = 5;  // bins along the first dimension
  int cols = 5;  // bins along the second dimension
  int cells() const { return rows * cols; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct CellIndex {
  int i = 0;
  int j = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct PopulationCaps {
  int feasible = 25;
  int infeasible = 25;
};

struct Individual {
  TileGrid genotype;
  bool feasible = false;
  BehaviorDescriptor descriptor;
  double objective = 0.0;  // objective fitness if feasible, infeasibility fitness otherwise
  double combined = 0.0;   // preference-blended score; equals objective for infeasibles
  std::uint64_t serial = 0;  // insertion order, larger is more recent
};

/// Strict total order used for elites and eviction: combined, then objective, then recency.
bool ranks_above(const Individual& a, const Individual& b);

CellIndex cell_index(const BehaviorDescriptor& descriptor, GridShape shape);

struct Cell {
  std::vector<Individual> feasible;
  std::vector<Individual> infeasible;
  std::optional<std::size_t> elite;  // index into `feasible`

  const Individual* elite_individual() const { return elite ? &feasible[*elite] : nullptr; }
  bool empty() const { return feasible.empty() && infeasible.empty(); }
  void refresh_elite();
};

struct InsertReport {
  CellIndex cell;
  bool kept = true;          // false if the newcomer was evicted straight away
  bool became_elite = false;
};

class EliteGrid {
 public:
  EliteGrid(GridShape shape, PopulationCaps caps, DimensionPair dims, int room_width, int room_height);

  GridShape shape() const { return shape_; }
  PopulationCaps caps() const { return caps_; }
  DimensionPair dims() const { return dims_; }
  int room_width() const { return room_width_; }
  int room_height() const { return room_height_; }

  std::uint64_t generation() const { return generation_; }
  void advance_generation() { ++generation_; }

  /// Throws ShapeMismatch on a genotype of the wrong size. Stamps a serial if the individual has none.
  InsertReport insert(Individual individual);

  const Cell& cell(CellIndex idx) const { return cells_[flat(idx)]; }
  const std::vector<Cell>& cells() const { return cells_; }
  CellIndex index_of(std::size_t flat_index) const {
    return {static_cast<int>(flat_index) / shape_.cols, static_cast<int>(flat_index) % shape_.cols};
  }

  std::size_t population() const;
  std::size_t feasible_population() const;
  bool empty() const { return population() == 0; }

  /// Removes and returns every individual, cells in row-major order, feasible before infeasible, oldest first.
  std::vector<Individual> drain();
  /// Re-derives every cell's elite; needed after scores change in place.
  void refresh_elites();
  template <class F>
  void for_each_individual(F&& f) {
    for (auto& c : cells_) {
      for (auto& ind : c.feasible) f(ind);
      for (auto& ind : c.infeasible) f(ind);
    }
  }

  void set_dims(DimensionPair dims) { dims_ = dims; }
  void set_room_shape(int width, int height);

 private:
  std::size_t flat(CellIndex idx) const { return static_cast<std::size_t>(idx.i) * shape_.cols + idx.j; }

  GridShape shape_;
  PopulationCaps caps_;
  DimensionPair dims_;
  int room_width_;
  int room_height_;
  std::vector<Cell> cells_;
  std::uint64_t generation_ = 0;
  std::uint64_t next_serial_ = 1;
};

struct EliteEntry {
  Room room;
  BehaviorDescriptor descriptor;
  double objective = 0.0;
  double combined = 0.0;
};

// Immutable published view: one optional elite per cell, row-major.
struct EliteSnapshot {
  GridShape shape;
  DimensionPair dims{};
  std::uint64_t generation = 0;
  std::vector<std::optional<EliteEntry>> cells;

  const std::optional<EliteEntry>& at(CellIndex idx) const {
    return cells[static_cast<std::size_t>(idx.i) * shape.cols + idx.j];
  }
  CellIndex index_of(std::size_t flat_index) const {
    return {static_cast<int>(flat_index) / shape.cols, static_cast<int>(flat_index) % shape.cols};
  }
  std::size_t elite_count() const;
};

// Feasible genotypes per cell (elites included) at one generation boundary.
struct PopulationSnapshot {
  GridShape shape;
  std::vector<std::vector<TileGrid>> feasible;  // row-major cells
};

PopulationSnapshot population_snapshot(const EliteGrid& grid);

}  // namespace qdpref
