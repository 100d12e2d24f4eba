#include "qdpref/network.hpp"

#include <algorithm>
#include <cmath>

#include "qdpref/error.hpp"

namespace qdpref {

namespace {

void softmax_in_place(std::vector<double>& z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

// Pre-activations per layer plus the activations feeding each layer.
struct Trace {
  std::vector<std::vector<double>> activations;  // activations[0] = input, activations[L] = softmax output
  std::vector<std::vector<double>> pre;          // pre[l] = z of layer l
};

Trace run_forward(const std::vector<FeedForwardNet::Layer>& layers, std::span<const double> input) {
  Trace t;
  t.activations.reserve(layers.size() + 1);
  t.pre.reserve(layers.size());
  t.activations.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& a = t.activations.back();
    std::vector<double> z(layer.bias);
    for (int o = 0; o < layer.outputs; ++o) {
      const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
      double acc = 0.0;
      for (int i = 0; i < layer.inputs; ++i) acc += row[i] * a[i];
      z[o] += acc;
    }
    t.pre.push_back(z);
    if (l + 1 == layers.size()) {
      softmax_in_place(z);
    } else {
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
    }
    t.activations.push_back(std::move(z));
  }
  return t;
}

}  // namespace

double cross_entropy(std::span<const double> probabilities, int label) {
  return -std::log(std::max(probabilities[static_cast<std::size_t>(label)], 1e-300));
}

FeedForwardNet::FeedForwardNet(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorCode::ConfigError, "network needs an input and an output layer");
  for (auto s : sizes_) {
    if (s < 1) throw Error(ErrorCode::ConfigError, "layer sizes must be positive");
  }
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    Layer layer;
    layer.inputs = sizes_[l - 1];
    layer.outputs = sizes_[l];
    layer.weights.assign(static_cast<std::size_t>(layer.inputs) * layer.outputs, 0.0);
    layer.bias.assign(static_cast<std::size_t>(layer.outputs), 0.0);
    layers_.push_back(std::move(layer));
  }
}

FeedForwardNet FeedForwardNet::initialized(std::vector<int> layer_sizes, std::mt19937_64& rng, bool zero_output_layer) {
  FeedForwardNet net(std::move(layer_sizes));
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    if (zero_output_layer && l + 1 == net.layers_.size()) break;
    auto& layer = net.layers_[l];
    const double limit = std::sqrt(6.0 / (layer.inputs + layer.outputs));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : layer.weights) w = dist(rng);
  }
  return net;
}

std::size_t FeedForwardNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> FeedForwardNet::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void FeedForwardNet::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw Error(ErrorCode::ShapeMismatch, "parameter vector has the wrong length");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (auto& w : l.weights) w = values[k++];
    for (auto& b : l.bias) b = values[k++];
  }
}

std::vector<double> FeedForwardNet::predict(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size()) {
    throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(input_size()) + " inputs, got " +
                                              std::to_string(input.size()));
  }
  return run_forward(layers_, input).activations.back();
}

double FeedForwardNet::accumulate_gradient(std::span<const double> input, int label, std::span<double> gradient) const {
  if (static_cast<int>(input.size()) != input_size()) throw Error(ErrorCode::ShapeMismatch, "input size mismatch");
  if (label < 0 || label >= output_size()) throw Error(ErrorCode::OutOfRange, "label outside output classes");

  const Trace t = run_forward(layers_, input);
  const auto& probs = t.activations.back();

  // Offsets of each layer's block inside the flattened gradient.
  std::vector<std::size_t> offsets(layers_.size());
  std::size_t k = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offsets[l] = k;
    k += layers_[l].weights.size() + layers_[l].bias.size();
  }

  // Softmax + cross-entropy: dL/dz = p - onehot.
  std::vector<double> delta(probs);
  delta[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& a = t.activations[l];
    double* gw = gradient.data() + offsets[l];
    double* gb = gw + layer.weights.size();
    for (int o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = gw + static_cast<std::size_t>(o) * layer.inputs;
      for (int i = 0; i < layer.inputs; ++i) row[i] += d * a[i];
    }
    if (l == 0) break;
    std::vector<double> below(static_cast<std::size_t>(layer.inputs), 0.0);
    for (int o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
      for (int i = 0; i < layer.inputs; ++i) below[i] += row[i] * d;
    }
    const auto& z = t.pre[l - 1];
    for (int i = 0; i < layer.inputs; ++i) {
      if (z[i] <= 0.0) below[i] = 0.0;
    }
    delta = std::move(below);
  }
  return cross_entropy(probs, label);
}

double FeedForwardNet::train_batch(std::span<const std::vector<double>* const> inputs, std::span<const int> labels,
                                   double learning_rate, std::vector<double>& scratch) {
  if (inputs.empty()) return 0.0;
  scratch.assign(parameter_count(), 0.0);
  double loss = 0.0;
  for (std::size_t s = 0; s < inputs.size(); ++s) loss += accumulate_gradient(*inputs[s], labels[s], scratch);
  const double scale = learning_rate / static_cast<double>(inputs.size());
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (auto& w : l.weights) w -= scale * scratch[k++];
    for (auto& b : l.bias) b -= scale * scratch[k++];
  }
  return loss / static_cast<double>(inputs.size());
}

}  // namespace qdpref
