#include "qdpref/grid.hpp"

#include <algorithm>
#include <cmath>

#include "qdpref/error.hpp"

namespace qdpref {

bool ranks_above(const Individual& a, const Individual& b) {
  if (a.combined != b.combined) return a.combined > b.combined;
  if (a.objective != b.objective) return a.objective > b.objective;
  return a.serial > b.serial;
}

CellIndex cell_index(const BehaviorDescriptor& descriptor, GridShape shape) {
  const auto bin = [](double v, int bins) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return std::min(static_cast<int>(std::floor(clamped * bins)), bins - 1);
  };
  return {bin(descriptor.values[0], shape.rows), bin(descriptor.values[1], shape.cols)};
}

void Cell::refresh_elite() {
  elite.reset();
  for (std::size_t k = 0; k < feasible.size(); ++k) {
    if (!elite || ranks_above(feasible[k], feasible[*elite])) elite = k;
  }
}

EliteGrid::EliteGrid(GridShape shape, PopulationCaps caps, DimensionPair dims, int room_width, int room_height)
    : shape_(shape), caps_(caps), dims_(dims), room_width_(room_width), room_height_(room_height) {
  if (shape.rows < 1 || shape.cols < 1) throw Error(ErrorCode::ConfigError, "grid needs at least one cell");
  if (caps.feasible < 1 || caps.infeasible < 1) throw Error(ErrorCode::ConfigError, "population caps must be positive");
  cells_.resize(static_cast<std::size_t>(shape.cells()));
}

void EliteGrid::set_room_shape(int width, int height) {
  if (!empty()) throw Error(ErrorCode::ShapeMismatch, "cannot reshape a populated grid");
  room_width_ = width;
  room_height_ = height;
}

InsertReport EliteGrid::insert(Individual individual) {
  if (individual.genotype.size() != static_cast<std::size_t>(room_width_) * room_height_) {
    throw Error(ErrorCode::ShapeMismatch, "genotype has " + std::to_string(individual.genotype.size()) +
                                              " tiles, grid expects " + std::to_string(room_width_ * room_height_));
  }
  if (individual.serial == 0) individual.serial = next_serial_++;
  else next_serial_ = std::max(next_serial_, individual.serial + 1);

  InsertReport report;
  report.cell = cell_index(individual.descriptor, shape_);
  Cell& cell = cells_[flat(report.cell)];
  const std::uint64_t serial = individual.serial;

  const auto* previous = cell.elite_individual();
  const std::uint64_t before_serial = previous ? previous->serial : 0;
  auto& pool = individual.feasible ? cell.feasible : cell.infeasible;
  const auto cap = static_cast<std::size_t>(individual.feasible ? caps_.feasible : caps_.infeasible);
  pool.push_back(std::move(individual));
  if (pool.size() > cap) {
    auto worst = pool.begin();
    for (auto it = pool.begin(); it != pool.end(); ++it) {
      if (ranks_above(*worst, *it)) worst = it;
    }
    report.kept = worst->serial != serial;
    pool.erase(worst);
  }

  if (&pool == &cell.feasible) {
    cell.refresh_elite();
    report.became_elite = report.kept && cell.elite_individual()->serial == serial && before_serial != serial;
  }
  return report;
}

std::size_t EliteGrid::population() const {
  std::size_t n = 0;
  for (const auto& c : cells_) n += c.feasible.size() + c.infeasible.size();
  return n;
}

std::size_t EliteGrid::feasible_population() const {
  std::size_t n = 0;
  for (const auto& c : cells_) n += c.feasible.size();
  return n;
}

std::vector<Individual> EliteGrid::drain() {
  std::vector<Individual> out;
  out.reserve(population());
  for (auto& c : cells_) {
    auto by_age = [](const Individual& a, const Individual& b) { return a.serial < b.serial; };
    std::sort(c.feasible.begin(), c.feasible.end(), by_age);
    std::sort(c.infeasible.begin(), c.infeasible.end(), by_age);
    for (auto& ind : c.feasible) out.push_back(std::move(ind));
    for (auto& ind : c.infeasible) out.push_back(std::move(ind));
    c = Cell{};
  }
  return out;
}

void EliteGrid::refresh_elites() {
  for (auto& c : cells_) c.refresh_elite();
}

std::size_t EliteSnapshot::elite_count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.has_value(); }));
}

PopulationSnapshot population_snapshot(const EliteGrid& grid) {
  PopulationSnapshot snap;
  snap.shape = grid.shape();
  snap.feasible.reserve(grid.cells().size());
  for (const auto& c : grid.cells()) {
    std::vector<TileGrid> genotypes;
    genotypes.reserve(c.feasible.size());
    for (const auto& ind : c.feasible) genotypes.push_back(ind.genotype);
    snap.feasible.push_back(std::move(genotypes));
  }
  return snap;
}

}  // namespace qdpref
