#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgeav/nn.hpp"

namespace edgeav::nn {

/// Symmetric per-tensor int8 layer. Biases stay in double precision.
struct QuantizedLayer {
  std::vector<std::int8_t> weights;  // row-major, out x in, each in [-127, 127]
  std::size_t rows = 0;
  std::size_t cols = 0;
  double scale = 1.0;
  int zero_point = 0;
  Vector b;
  Activation activation = Activation::Linear;

  double dequantized(std::size_t flat_index) const noexcept {
    return static_cast<double>(weights[flat_index]) * scale;
  }
};

/// scale = max|W| / 127 (1 for an all-zero tensor), q = clamp(round(W / scale)).
QuantizedLayer quantize_int8(const DenseLayer& layer);
DenseLayer dequantize(const QuantizedLayer& layer);

/// Same contract as dense_forward, dequantizing each weight on the fly.
Vector quantized_forward(const QuantizedLayer& layer, std::span<const double> x);

struct QuantizedMlp {
  std::vector<QuantizedLayer> layers;

  std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().cols; }
  std::size_t output_dim() const noexcept { return layers.empty() ? 0 : layers.back().rows; }
  Vector forward(std::span<const double> x) const;
};

QuantizedMlp quantize_model(const Mlp& model);

struct PruneResult {
  Mlp model;
  /// Fraction of weights (not biases) that are zero and masked.
  double mac_reduction = 0.0;
  std::size_t pruned = 0;
  std::size_t total = 0;
};

/// Zeroes the globally smallest-|w| `fraction` of the weights (count rounded
/// to nearest, ties broken by position) and masks them out of later SGD.
/// Throws DomainError unless 0 <= fraction < 1.
PruneResult prune_by_magnitude(const Mlp& model, double fraction);

/// Multiply-accumulates that remain after skipping zero weights.
std::size_t count_nonzero_weights(const Mlp& model);

}  // namespace edgeav::nn
