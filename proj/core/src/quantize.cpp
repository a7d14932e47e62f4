#include "edgeav/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "edgeav/errors.hpp"

namespace edgeav::nn {

namespace {

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return sigmoid(z);
    case Activation::Linear: return z;
  }
  return z;
}

}  // namespace

QuantizedLayer quantize_int8(const DenseLayer& layer) {
  QuantizedLayer q;
  q.rows = layer.W.rows();
  q.cols = layer.W.cols();
  q.b = layer.b;
  q.activation = layer.activation;

  double max_abs = 0.0;
  for (double w : layer.W.data()) {
    if (!std::isfinite(w)) throw DomainError("quantize_int8: non-finite weight");
    max_abs = std::max(max_abs, std::abs(w));
  }
  q.scale = max_abs > 0.0 ? max_abs / 127.0 : 1.0;

  q.weights.resize(layer.W.size());
  for (std::size_t i = 0; i < layer.W.size(); ++i) {
    const double r = std::round(layer.W.data()[i] / q.scale);
    q.weights[i] = static_cast<std::int8_t>(std::clamp(r, -127.0, 127.0));
  }
  return q;
}

DenseLayer dequantize(const QuantizedLayer& layer) {
  DenseLayer d;
  d.W = Matrix(layer.rows, layer.cols);
  for (std::size_t i = 0; i < layer.weights.size(); ++i) d.W.data()[i] = layer.dequantized(i);
  d.b = layer.b;
  d.activation = layer.activation;
  return d;
}

Vector quantized_forward(const QuantizedLayer& layer, std::span<const double> x) {
  if (x.size() != layer.cols) {
    throw ShapeError("quantized_forward: input has " + std::to_string(x.size()) +
                     " entries, layer expects " + std::to_string(layer.cols));
  }
  Vector out(layer.rows);
  for (std::size_t r = 0; r < layer.rows; ++r) {
    double acc = layer.b[r];
    const std::int8_t* row = layer.weights.data() + r * layer.cols;
    for (std::size_t c = 0; c < layer.cols; ++c) acc += static_cast<double>(row[c]) * layer.scale * x[c];
    out[r] = apply_activation(layer.activation, acc);
  }
  return out;
}

Vector QuantizedMlp::forward(std::span<const double> x) const {
  if (layers.empty()) throw ShapeError("QuantizedMlp: no layers");
  Vector current(x.begin(), x.end());
  for (const QuantizedLayer& layer : layers) current = quantized_forward(layer, current);
  return current;
}

QuantizedMlp quantize_model(const Mlp& model) {
  QuantizedMlp q;
  q.layers.reserve(model.layers.size());
  for (const DenseLayer& layer : model.layers) q.layers.push_back(quantize_int8(layer));
  return q;
}

PruneResult prune_by_magnitude(const Mlp& model, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw DomainError("prune_by_magnitude: fraction must be in [0, 1), got " + std::to_string(fraction));
  }
  PruneResult result;
  result.model = model;
  result.total = model.num_weights();
  if (result.total == 0) return result;

  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(result.total)));
  if (k > 0) {
    struct Ref {
      std::size_t layer;
      std::size_t index;
      double magnitude;
    };
    std::vector<Ref> refs;
    refs.reserve(result.total);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const auto& w = model.layers[l].W.data();
      for (std::size_t i = 0; i < w.size(); ++i) refs.push_back({l, i, std::abs(w[i])});
    }
    // stable_sort keeps position order among equal magnitudes.
    std::stable_sort(refs.begin(), refs.end(),
                     [](const Ref& a, const Ref& b) { return a.magnitude < b.magnitude; });
    for (std::size_t j = 0; j < k; ++j) {
      DenseLayer& layer = result.model.layers[refs[j].layer];
      if (layer.mask.empty()) layer.mask.assign(layer.W.size(), 1);
      layer.W.data()[refs[j].index] = 0.0;
      layer.mask[refs[j].index] = 0;
    }
  }
  for (const DenseLayer& layer : result.model.layers) {
    result.pruned += static_cast<std::size_t>(std::count(layer.mask.begin(), layer.mask.end(), 0));
  }
  result.mac_reduction = static_cast<double>(result.pruned) / static_cast<double>(result.total);
  return result;
}

std::size_t count_nonzero_weights(const Mlp& model) {
  std::size_t n = 0;
  for (const DenseLayer& layer : model.layers) {
    n += static_cast<std::size_t>(
        std::count_if(layer.W.data().begin(), layer.W.data().end(), [](double w) { return w != 0.0; }));
  }
  return n;
}

}  // namespace edgeav::nn
