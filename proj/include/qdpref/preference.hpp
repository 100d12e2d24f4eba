#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qdpref/grid.hpp"
#include "qdpref/level.hpp"
#include "qdpref/network.hpp"

namespace qdpref {

// ---------------------------------------------------------------------------
// Preference classes: six discrete values 0.0, 0.2, ..., 1.0.

inline constexpr int kPreferenceClasses = 6;

constexpr double class_value(int class_index) { return 0.2 * class_index; }
/// Nearest class index for a value in [0,1]; OutOfRange otherwise.
int class_of(double value);

// ---------------------------------------------------------------------------
// Ad-hoc label matrix built around the applied suggestion.

enum class StepMetric { Chebyshev, Manhattan };

struct AdHocMatrix {
  GridShape shape;
  CellIndex origin;
  std::vector<double> values;  // row-major preference value per cell
  std::vector<int> classes;    // matching class index per cell

  double value(CellIndex idx) const { return values[static_cast<std::size_t>(idx.i) * shape.cols + idx.j]; }
  int class_at(CellIndex idx) const { return classes[static_cast<std::size_t>(idx.i) * shape.cols + idx.j]; }
};

/// Origin gets 1.0; every step away costs 0.2, floored at 0.0. Throws OutOfRange.
AdHocMatrix build_adhoc_matrix(CellIndex selected, GridShape shape, StepMetric metric = StepMetric::Chebyshev);

// ---------------------------------------------------------------------------
// Datasets

/// Row-major, FLOOR 0, WALL 1/3, TREASURE 2/3, ENEMY 1.
std::vector<double> encode_room(const TileGrid& genotype);
/// Same, checking the genotype against the network input size. Throws ShapeMismatch.
std::vector<double> encode_room(const TileGrid& genotype, int expected_inputs);

struct LabeledSample {
  std::vector<double> input;
  int label = 0;       // class index
  CellIndex cell;      // grid cell the sample came from
};

struct PreferenceDataset {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;

  std::size_t size() const { return train.size() + test.size(); }
  std::array<int, kPreferenceClasses> train_histogram() const;
  std::array<int, kPreferenceClasses> test_histogram() const;
};

/// Test-split size per class: the 10% share of each class, rounded so the
/// total is round(10% of all samples), largest remainders first.
std::array<int, kPreferenceClasses> stratified_test_counts(const std::array<int, kPreferenceClasses>& class_counts,
                                                           double test_fraction = 0.1);

/// One sample per feasible individual labelled with its cell's matrix value, shuffled,
/// then split 90/10 per class. Throws EmptyGrid / ShapeMismatch.
PreferenceDataset build_dataset(const PopulationSnapshot& population, const AdHocMatrix& matrix, std::mt19937_64& rng,
                                double test_fraction = 0.1);

// ---------------------------------------------------------------------------
// Model

struct TrainingConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 0.05;
  std::vector<int> hidden{100, 50};
};

struct PreferenceModel {
  FeedForwardNet net;
  double last_test_accuracy = 0.0;
  int episodes_trained = 0;

  /// Cold-start model: random hidden layers, zero output layer (uniform predictions).
  static PreferenceModel create(int inputs, const TrainingConfig& config, std::mt19937_64& rng);

  friend bool operator==(const PreferenceModel&, const PreferenceModel&) = default;
};

std::array<double, kPreferenceClasses> predict(const PreferenceModel& model, const TileGrid& genotype);

struct EpisodeResult {
  double test_accuracy = 0.0;
  std::vector<double> epoch_losses;  // mean training loss per epoch
};

/// Trains in place from the current weights. Throws EmptyDataset.
EpisodeResult train_episode(PreferenceModel& model, const PreferenceDataset& dataset, const TrainingConfig& config,
                            std::mt19937_64& rng);

double accuracy(const FeedForwardNet& net, std::span<const LabeledSample> samples);

double confidence(std::span<const double> probabilities);
double predicted_preference(std::span<const double> probabilities);

struct BlendWeights {
  double w0 = 1.0;
  double w1 = 0.0;
};

/// w1 = min(conf * testAcc, 0.5), w0 = 1 - w1. Throws DomainError outside [0,1].
BlendWeights compute_weights(double conf, double test_accuracy);

enum class WeightedSumForm {
  Convex,   // w0 * objective + w1 * pref
  Literal,  // w0 * objective + w0 * pref
};

double combined_fitness(double objective, double predicted_pref, BlendWeights weights,
                        WeightedSumForm form = WeightedSumForm::Convex);

struct Blend {
  double confidence = 0.0;
  double predicted = 0.0;
  BlendWeights weights;
  double combined = 0.0;
};

/// Full per-individual blend against one model.
Blend blend(const PreferenceModel& model, const TileGrid& genotype, double objective,
            WeightedSumForm form = WeightedSumForm::Convex);

// ---------------------------------------------------------------------------
// Checkpoints: text, hex-float weights, bit-exact round trip.

inline constexpr int kCheckpointVersion = 1;

void save_model(const PreferenceModel& model, std::ostream& out);
PreferenceModel load_model(std::istream& in);
std::string model_to_string(const PreferenceModel& model);
PreferenceModel model_from_string(const std::string& text);

}  // namespace qdpref
