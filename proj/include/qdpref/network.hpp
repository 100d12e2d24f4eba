#pragma once

#include <random>
#include <span>
#include <vector>

namespace qdpref {

// Fully connected classifier: rectifier hidden layers, softmax output, cross-entropy loss.
class FeedForwardNet {
 public:
  struct Layer {
    int inputs = 0;
    int outputs = 0;
    std::vector<double> weights;  // outputs x inputs, row-major
    std::vector<double> bias;
    friend bool operator==(const Layer&, const Layer&) = default;
  };

  FeedForwardNet() = default;
  /// All parameters zero.
  explicit FeedForwardNet(std::vector<int> layer_sizes);

  /// Fan-in scaled uniform init, U(-sqrt(6/(in+out)), +sqrt(6/(in+out))), biases zero.
  /// With `zero_output_layer` the network starts out predicting the uniform distribution.
  static FeedForwardNet initialized(std::vector<int> layer_sizes, std::mt19937_64& rng, bool zero_output_layer);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const;

  /// Flattened parameters: per layer, weights then biases.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  std::vector<double> predict(std::span<const double> input) const;

  /// Cross-entropy of one sample; adds d(loss)/d(params) into `gradient` (parameters() layout).
  double accumulate_gradient(std::span<const double> input, int label, std::span<double> gradient) const;

  /// One plain gradient-descent step on the mean gradient of a batch; returns the mean batch loss.
  double train_batch(std::span<const std::vector<double>* const> inputs, std::span<const int> labels,
                     double learning_rate, std::vector<double>& scratch);

  friend bool operator==(const FeedForwardNet&, const FeedForwardNet&) = default;

 private:
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

double cross_entropy(std::span<const double> probabilities, int label);

}  // namespace qdpref
