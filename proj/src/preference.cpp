#include "qdpref/preference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qdpref/error.hpp"

namespace qdpref {

int class_of(double value) {
  if (!(value >= -1e-9 && value <= 1.0 + 1e-9)) throw Error(ErrorCode::OutOfRange, "preference value outside [0,1]");
  return std::clamp(static_cast<int>(std::lround(value / 0.2)), 0, kPreferenceClasses - 1);
}

AdHocMatrix build_adhoc_matrix(CellIndex selected, GridShape shape, StepMetric metric) {
  if (selected.i < 0 || selected.j < 0 || selected.i >= shape.rows || selected.j >= shape.cols) {
    throw Error(ErrorCode::OutOfRange, "selected cell (" + std::to_string(selected.i) + "," +
                                           std::to_string(selected.j) + ") outside the grid");
  }
  AdHocMatrix m;
  m.shape = shape;
  m.origin = selected;
  m.values.resize(static_cast<std::size_t>(shape.cells()));
  m.classes.resize(m.values.size());
  for (int i = 0; i < shape.rows; ++i) {
    for (int j = 0; j < shape.cols; ++j) {
      const int di = std::abs(i - selected.i);
      const int dj = std::abs(j - selected.j);
      const int steps = metric == StepMetric::Chebyshev ? std::max(di, dj) : di + dj;
      const auto flat = static_cast<std::size_t>(i) * shape.cols + j;
      m.values[flat] = std::max(0.0, 1.0 - 0.2 * steps);
      m.classes[flat] = std::max(0, kPreferenceClasses - 1 - steps);
    }
  }
  return m;
}

std::vector<double> encode_room(const TileGrid& genotype) {
  std::vector<double> out(genotype.size());
  for (std::size_t i = 0; i < genotype.size(); ++i) out[i] = static_cast<double>(static_cast<int>(genotype[i])) / 3.0;
  return out;
}

std::vector<double> encode_room(const TileGrid& genotype, int expected_inputs) {
  if (static_cast<int>(genotype.size()) != expected_inputs) {
    throw Error(ErrorCode::ShapeMismatch, "room has " + std::to_string(genotype.size()) + " tiles, model expects " +
                                              std::to_string(expected_inputs));
  }
  return encode_room(genotype);
}

namespace {

std::array<int, kPreferenceClasses> histogram(const std::vector<LabeledSample>& samples) {
  std::array<int, kPreferenceClasses> h{};
  for (const auto& s : samples) ++h[static_cast<std::size_t>(s.label)];
  return h;
}

}  // namespace

std::array<int, kPreferenceClasses> PreferenceDataset::train_histogram() const { return histogram(train); }
std::array<int, kPreferenceClasses> PreferenceDataset::test_histogram() const { return histogram(test); }

std::array<int, kPreferenceClasses> stratified_test_counts(const std::array<int, kPreferenceClasses>& class_counts,
                                                           double test_fraction) {
  std::array<int, kPreferenceClasses> counts{};
  std::array<double, kPreferenceClasses> remainder{};
  int total = 0;
  int assigned = 0;
  for (int c = 0; c < kPreferenceClasses; ++c) {
    const double share = class_counts[c] * test_fraction;
    counts[c] = static_cast<int>(std::floor(share + 1e-9));
    remainder[c] = share - counts[c];
    total += class_counts[c];
    assigned += counts[c];
  }
  const int target = static_cast<int>(std::floor(total * test_fraction + 0.5 + 1e-9));
  std::array<int, kPreferenceClasses> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int k = 0; k < kPreferenceClasses && assigned < target; ++k) {
    const int c = order[k];
    if (remainder[c] <= 1e-9) break;
    ++counts[c];
    ++assigned;
  }
  return counts;
}

PreferenceDataset build_dataset(const PopulationSnapshot& population, const AdHocMatrix& matrix, std::mt19937_64& rng,
                                double test_fraction) {
  if (!(population.shape == matrix.shape)) throw Error(ErrorCode::ShapeMismatch, "ad-hoc matrix shape differs from the grid");
  std::vector<LabeledSample> samples;
  for (std::size_t flat = 0; flat < population.feasible.size(); ++flat) {
    const CellIndex idx{static_cast<int>(flat) / population.shape.cols, static_cast<int>(flat) % population.shape.cols};
    for (const auto& genotype : population.feasible[flat]) {
      samples.push_back({encode_room(genotype), matrix.class_at(idx), idx});
    }
  }
  if (samples.empty()) throw Error(ErrorCode::EmptyGrid, "no feasible individuals to label");

  std::shuffle(samples.begin(), samples.end(), rng);

  std::array<int, kPreferenceClasses> class_counts{};
  for (const auto& s : samples) ++class_counts[static_cast<std::size_t>(s.label)];
  auto wanted = stratified_test_counts(class_counts, test_fraction);

  PreferenceDataset ds;
  for (auto& s : samples) {
    auto& quota = wanted[static_cast<std::size_t>(s.label)];
    if (quota > 0) {
      --quota;
      ds.test.push_back(std::move(s));
    } else {
      ds.train.push_back(std::move(s));
    }
  }
  return ds;
}

PreferenceModel PreferenceModel::create(int inputs, const TrainingConfig& config, std::mt19937_64& rng) {
  std::vector<int> sizes{inputs};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(kPreferenceClasses);
  return {FeedForwardNet::initialized(std::move(sizes), rng, true), 0.0, 0};
}

std::array<double, kPreferenceClasses> predict(const PreferenceModel& model, const TileGrid& genotype) {
  const auto probs = model.net.predict(encode_room(genotype, model.net.input_size()));
  std::array<double, kPreferenceClasses> out{};
  std::copy_n(probs.begin(), kPreferenceClasses, out.begin());
  return out;
}

double accuracy(const FeedForwardNet& net, std::span<const LabeledSample> samples) {
  if (samples.empty()) return 0.0;
  int correct = 0;
  for (const auto& s : samples) {
    const auto probs = net.predict(s.input);
    const auto best = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    correct += best == s.label;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

EpisodeResult train_episode(PreferenceModel& model, const PreferenceDataset& dataset, const TrainingConfig& config,
                            std::mt19937_64& rng) {
  if (dataset.size() == 0) throw Error(ErrorCode::EmptyDataset, "training needs at least one sample");
  for (const auto* split : {&dataset.train, &dataset.test}) {
    for (const auto& s : *split) {
      if (static_cast<int>(s.input.size()) != model.net.input_size()) {
        throw Error(ErrorCode::ShapeMismatch, "dataset inputs do not match the model");
      }
    }
  }

  EpisodeResult result;
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const std::vector<double>*> batch_inputs;
  std::vector<int> batch_labels;
  std::vector<double> scratch;
  const auto batch_size = static_cast<std::size_t>(std::max(1, config.batch_size));

  for (int epoch = 0; epoch < config.epochs && !order.empty(); ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      batch_inputs.clear();
      batch_labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_inputs.push_back(&dataset.train[order[k]].input);
        batch_labels.push_back(dataset.train[order[k]].label);
      }
      const double batch_loss = model.net.train_batch(batch_inputs, batch_labels, config.learning_rate, scratch);
      loss_sum += batch_loss * static_cast<double>(end - start);
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
  }

  result.test_accuracy = accuracy(model.net, dataset.test);
  model.last_test_accuracy = result.test_accuracy;
  ++model.episodes_trained;
  return result;
}

double confidence(std::span<const double> probabilities) {
  return *std::max_element(probabilities.begin(), probabilities.end());
}

double predicted_preference(std::span<const double> probabilities) {
  double expected = 0.0;
  for (std::size_t c = 0; c < probabilities.size(); ++c) expected += probabilities[c] * class_value(static_cast<int>(c));
  return expected;
}

BlendWeights compute_weights(double conf, double test_accuracy) {
  if (!(conf >= 0.0 && conf <= 1.0) || !(test_accuracy >= 0.0 && test_accuracy <= 1.0)) {
    throw Error(ErrorCode::DomainError, "confidence and test accuracy must lie in [0,1]");
  }
  const double w1 = std::min(conf * test_accuracy, 0.5);
  return {1.0 - w1, w1};
}

double combined_fitness(double objective, double predicted_pref, BlendWeights weights, WeightedSumForm form) {
  if (form == WeightedSumForm::Literal) return weights.w0 * objective + weights.w0 * predicted_pref;
  return weights.w0 * objective + weights.w1 * predicted_pref;
}

Blend blend(const PreferenceModel& model, const TileGrid& genotype, double objective, WeightedSumForm form) {
  const auto probs = predict(model, genotype);
  Blend b;
  b.confidence = confidence(probs);
  b.predicted = predicted_preference(probs);
  b.weights = compute_weights(std::min(b.confidence, 1.0), model.last_test_accuracy);
  b.combined = combined_fitness(objective, b.predicted, b.weights, form);
  return b;
}

// ---------------------------------------------------------------------------

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw Error(ErrorCode::MalformedInput, "bad number '" + token + "' in checkpoint");
  return v;
}

template <class T>
T read_token(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw Error(ErrorCode::MalformedInput, std::string("checkpoint truncated while reading ") + what);
  return v;
}

void expect_word(std::istream& in, const std::string& word) {
  const auto got = read_token<std::string>(in, word.c_str());
  if (got != word) throw Error(ErrorCode::MalformedInput, "expected '" + word + "' in checkpoint, got '" + got + "'");
}

}  // namespace

void save_model(const PreferenceModel& model, std::ostream& out) {
  out << "qdpref-model " << kCheckpointVersion << '\n';
  out << "layers " << model.net.layer_sizes().size();
  for (auto s : model.net.layer_sizes()) out << ' ' << s;
  out << '\n';
  out << "test_accuracy " << hex(model.last_test_accuracy) << '\n';
  out << "episodes " << model.episodes_trained << '\n';
  for (const auto& layer : model.net.layers()) {
    out << "weights";
    for (auto w : layer.weights) out << ' ' << hex(w);
    out << "\nbias";
    for (auto b : layer.bias) out << ' ' << hex(b);
    out << '\n';
  }
}

PreferenceModel load_model(std::istream& in) {
  expect_word(in, "qdpref-model");
  const int version = read_token<int>(in, "version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + " is not supported");
  }
  expect_word(in, "layers");
  const int count = read_token<int>(in, "layer count");
  if (count < 2 || count > 64) throw Error(ErrorCode::MalformedInput, "implausible layer count");
  std::vector<int> sizes;
  for (int k = 0; k < count; ++k) sizes.push_back(read_token<int>(in, "layer size"));
  PreferenceModel model{FeedForwardNet(sizes), 0.0, 0};
  expect_word(in, "test_accuracy");
  model.last_test_accuracy = parse_hex(read_token<std::string>(in, "test accuracy"));
  expect_word(in, "episodes");
  model.episodes_trained = read_token<int>(in, "episodes");
  for (auto& layer : model.net.layers()) {
    expect_word(in, "weights");
    for (auto& w : layer.weights) w = parse_hex(read_token<std::string>(in, "weight"));
    expect_word(in, "bias");
    for (auto& b : layer.bias) b = parse_hex(read_token<std::string>(in, "bias"));
  }
  return model;
}

std::string model_to_string(const PreferenceModel& model) {
  std::ostringstream out;
  save_model(model, out);
  return out.str();
}

PreferenceModel model_from_string(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

}  // namespace qdpref
