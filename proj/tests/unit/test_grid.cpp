#include <doctest.h>

#include "qdpref/grid.hpp"
#include "support.hpp"

using namespace qdpref;

namespace {

Individual make(double v0, double v1, double combined, double objective, bool feasible = true, std::size_t area = 9) {
  Individual ind;
  ind.genotype.assign(area, TileKind::Floor);
  ind.feasible = feasible;
  ind.descriptor.values = {v0, v1};
  ind.combined = combined;
  ind.objective = objective;
  return ind;
}

}  // namespace

TEST_CASE("cell_index bins") {
  const GridShape s{5, 5};
  CHECK(cell_index({{}, {0.0, 0.0}}, s) == CellIndex{0, 0});
  CHECK(cell_index({{}, {1.0, 1.0}}, s) == CellIndex{4, 4});
  CHECK(cell_index({{}, {0.39, 0.80}}, s) == CellIndex{1, 4});
  // exhaustive against the bin arithmetic on a fine lattice
  for (int a = 0; a <= 1000; ++a) {
    const double v = a / 1000.0;
    const int want = std::min(static_cast<int>(std::floor(v * 5)), 4);
    REQUIRE(cell_index({{}, {v, 1.0 - v}}, s).i == want);
  }
}

TEST_CASE("insert: elite, caps, ties") {
  EliteGrid g({5, 5}, {25, 25}, {DimensionKind::Symmetry, DimensionKind::Similarity}, 3, 3);
  auto r = g.insert(make(0.1, 0.1, 0.5, 0.5));
  CHECK(r.became_elite);
  CHECK(r.cell == CellIndex{0, 0});

  for (int k = 0; k < 24; ++k) g.insert(make(0.1, 0.1, 0.6, 0.6));
  CHECK(g.cell({0, 0}).feasible.size() == 25);
  const auto elite_serial = g.cell({0, 0}).elite_individual()->serial;

  r = g.insert(make(0.1, 0.1, 0.1, 0.9));
  CHECK_FALSE(r.kept);
  CHECK(g.cell({0, 0}).feasible.size() == 25);
  CHECK(g.cell({0, 0}).elite_individual()->serial == elite_serial);

  // equal combined, higher objective wins the elite slot
  r = g.insert(make(0.1, 0.1, 0.6, 0.7));
  CHECK(r.became_elite);
  CHECK(g.cell({0, 0}).feasible.size() == 25);

  // equal on both scores: the newer one takes over
  r = g.insert(make(0.1, 0.1, 0.6, 0.7));
  CHECK(r.became_elite);

  for (int k = 0; k < 40; ++k) g.insert(make(0.9, 0.9, 0.3, 0.3, false));
  CHECK(g.cell({4, 4}).infeasible.size() == 25);
  CHECK_FALSE(g.cell({4, 4}).elite.has_value());

  CHECK_CODE(g.insert(make(0.1, 0.1, 0.5, 0.5, true, 10)), ShapeMismatch);
}

TEST_CASE("drain order and population snapshot") {
  EliteGrid g({2, 2}, {3, 3}, {DimensionKind::Symmetry, DimensionKind::Leniency}, 3, 3);
  g.insert(make(0.9, 0.9, 0.1, 0.1));
  g.insert(make(0.1, 0.1, 0.2, 0.2, false));
  g.insert(make(0.1, 0.1, 0.3, 0.3));
  const auto pop = population_snapshot(g);
  CHECK(pop.feasible[0].size() == 1);
  CHECK(pop.feasible[3].size() == 1);
  const auto all = g.drain();
  REQUIRE(all.size() == 3);
  CHECK(all[0].feasible);
  CHECK_FALSE(all[1].feasible);
  CHECK(all[2].descriptor.values[0] == 0.9);
  CHECK(g.empty());
}
