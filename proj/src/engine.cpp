#include "qdpref/engine.hpp"

#include <utility>

#include "qdpref/error.hpp"

namespace qdpref {

namespace {

void check_dims(DimensionPair dims) {
  if (dims[0] == dims[1]) {
    throw Error(ErrorCode::DuplicateDimension, "dimension pair repeats " + std::string(to_string(dims[0])));
  }
}

}  // namespace

Evolver::Evolver(EngineConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      grid_(config_.grid, config_.caps, config_.dims, Room::kDefaultWidth, Room::kDefaultHeight),
      rng_(seed) {
  check_dims(config_.dims);
  if (config_.offspring_per_generation < 1) throw Error(ErrorCode::ConfigError, "offspring_per_generation must be positive");
}

double Evolver::blend_score(const TileGrid& genotype, double objective) const {
  const bool cold = !model_ || model_->last_test_accuracy == 0.0;
  if (cold && config_.weighted_sum == WeightedSumForm::Convex) return objective;
  if (!model_) return combined_fitness(objective, 0.0, {}, config_.weighted_sum);
  return blend(*model_, genotype, objective, config_.weighted_sum).combined;
}

Individual Evolver::evaluate(TileGrid genotype) const {
  if (!target_) throw Error(ErrorCode::NoPopulation, "no target room to evaluate against");
  const Room room = target_->with_tiles(std::move(genotype));
  const auto analysis = analyze_room(room, config_.patterns);

  Individual ind;
  ind.feasible = analysis.feasible;
  ind.descriptor.dims = grid_.dims();
  for (int k = 0; k < 2; ++k) {
    ind.descriptor.values[k] =
        std::clamp(dimension_from(room, analysis, grid_.dims()[k], &*target_, config_.patterns), 0.0, 1.0);
  }
  ind.objective = analysis.feasible ? objective_from(analysis, config_.patterns) : analysis.infeasibility;
  ind.genotype = room.tiles();
  ind.combined = ind.feasible ? blend_score(ind.genotype, ind.objective) : ind.objective;
  return ind;
}

void Evolver::repair(TileGrid& genotype) const {
  const auto& locks = target_->locks();
  const auto& doors = target_->door_mask();
  const auto& tiles = target_->tiles();
  for (std::size_t i = 0; i < genotype.size(); ++i) {
    if (locks[i]) genotype[i] = tiles[i];
    if (doors[i]) genotype[i] = TileKind::Floor;
  }
}

TileGrid Evolver::mutated(TileGrid genotype, double rate) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> kind(0, kTileKindCount - 1);
  for (auto& tile : genotype) {
    if (coin(rng_) < rate) tile = static_cast<TileKind>(kind(rng_));
  }
  repair(genotype);
  return genotype;
}

void Evolver::seed_from_target() {
  for (int k = 0; k < config_.seed_count; ++k) {
    grid_.insert(evaluate(mutated(target_->tiles(), config_.seed_mutation_rate)));
  }
}

void Evolver::step() {
  if (grid_.empty()) {
    if (!target_) throw Error(ErrorCode::NoPopulation, "grid is empty and there is no target room to seed from");
    seed_from_target();
  }

  std::vector<std::size_t> occupied;
  for (std::size_t c = 0; c < grid_.cells().size(); ++c) {
    if (!grid_.cells()[c].empty()) occupied.push_back(c);
  }

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_cell(0, occupied.size() - 1);
  std::vector<TileGrid> children;
  children.reserve(static_cast<std::size_t>(config_.offspring_per_generation));
  for (int b = 0; b < config_.offspring_per_generation; ++b) {
    const Cell& cell = grid_.cells()[occupied[pick_cell(rng_)]];
    const auto& pool = cell.feasible.empty() ? cell.infeasible : cell.feasible;
    std::uniform_int_distribution<std::size_t> pick_parent(0, pool.size() - 1);
    const auto& first = pool[pick_parent(rng_)].genotype;
    const auto& second = pool[pick_parent(rng_)].genotype;
    TileGrid child(first.size());
    for (std::size_t t = 0; t < child.size(); ++t) child[t] = coin(rng_) < config_.crossover_rate ? second[t] : first[t];
    children.push_back(mutated(std::move(child), config_.mutation_rate));
  }

  // Evaluation is independent per child; insertion follows offspring order.
  std::vector<Individual> evaluated;
  evaluated.reserve(children.size());
  for (auto& child : children) evaluated.push_back(evaluate(std::move(child)));
  for (auto& ind : evaluated) grid_.insert(std::move(ind));
  grid_.advance_generation();
}

void Evolver::reinsert_all() {
  auto everyone = grid_.drain();
  for (auto& ind : everyone) {
    const auto serial = ind.serial;
    auto fresh = evaluate(std::move(ind.genotype));
    fresh.serial = serial;
    grid_.insert(std::move(fresh));
  }
}

TargetChange Evolver::set_target_room(const Room& room) {
  if (target_ && *target_ == room) return TargetChange::Unchanged;
  const bool same_shape = target_ && target_->width() == room.width() && target_->height() == room.height();
  target_ = room;
  if (!same_shape) {
    grid_.drain();
    grid_.set_room_shape(room.width(), room.height());
    seed_from_target();
    return TargetChange::Reseeded;
  }
  auto everyone = grid_.drain();
  for (auto& ind : everyone) {
    repair(ind.genotype);
    const auto serial = ind.serial;
    auto fresh = evaluate(std::move(ind.genotype));
    fresh.serial = serial;
    grid_.insert(std::move(fresh));
  }
  seed_from_target();
  return TargetChange::Repaired;
}

void Evolver::set_dimensions(DimensionPair dims) {
  check_dims(dims);
  if (dims == grid_.dims()) return;
  grid_.set_dims(dims);
  if (target_) reinsert_all();
}

void Evolver::set_locks(const LockMask& locks) {
  if (!target_) throw Error(ErrorCode::NoPopulation, "no target room to lock");
  set_target_room(target_->with_locks(locks));
}

void Evolver::set_model(std::shared_ptr<const PreferenceModel> model) {
  model_ = std::move(model);
  if (model_ && target_ && model_->net.input_size() != static_cast<int>(target_->area())) {
    throw Error(ErrorCode::ShapeMismatch, "model input size does not match the target room");
  }
  grid_.for_each_individual([&](Individual& ind) {
    if (ind.feasible) ind.combined = blend_score(ind.genotype, ind.objective);
  });
  grid_.refresh_elites();
}

AppliedSuggestion Evolver::apply_suggestion(CellIndex cell) {
  const auto shape = grid_.shape();
  if (cell.i < 0 || cell.j < 0 || cell.i >= shape.rows || cell.j >= shape.cols) {
    throw Error(ErrorCode::OutOfRange, "cell (" + std::to_string(cell.i) + "," + std::to_string(cell.j) + ") outside the grid");
  }
  const auto* elite = grid_.cell(cell).elite_individual();
  if (!elite) throw Error(ErrorCode::EmptyCell, "cell (" + std::to_string(cell.i) + "," + std::to_string(cell.j) + ") has no elite");
  AppliedSuggestion applied{cell, target_->with_tiles(elite->genotype), population_snapshot(grid_)};
  set_target_room(applied.room);
  return applied;
}

std::optional<AppliedSuggestion> Evolver::apply(const EngineCommand& command) {
  return std::visit(
      [&](const auto& cmd) -> std::optional<AppliedSuggestion> {
        using T = std::decay_t<decltype(cmd)>;
        if constexpr (std::is_same_v<T, SetDimensions>) {
          set_dimensions(cmd.dims);
        } else if constexpr (std::is_same_v<T, SetTargetRoom>) {
          set_target_room(cmd.room);
        } else if constexpr (std::is_same_v<T, ApplySuggestion>) {
          return apply_suggestion(cmd.cell);
        } else if constexpr (std::is_same_v<T, SetLocks>) {
          set_locks(cmd.locks);
        } else if constexpr (std::is_same_v<T, Pause>) {
          paused_ = true;
        } else if constexpr (std::is_same_v<T, Resume>) {
          paused_ = false;
        } else if constexpr (std::is_same_v<T, SwapModel>) {
          set_model(cmd.model);
        }
        return std::nullopt;
      },
      command);
}

EliteSnapshot Evolver::publish() const {
  EliteSnapshot snap;
  snap.shape = grid_.shape();
  snap.dims = grid_.dims();
  snap.generation = grid_.generation();
  snap.cells.reserve(grid_.cells().size());
  for (const auto& cell : grid_.cells()) {
    const auto* elite = cell.elite_individual();
    if (!elite) {
      snap.cells.emplace_back(std::nullopt);
      continue;
    }
    snap.cells.emplace_back(EliteEntry{target_->with_tiles(elite->genotype), elite->descriptor, elite->objective, elite->combined});
  }
  return snap;
}

}  // namespace qdpref
