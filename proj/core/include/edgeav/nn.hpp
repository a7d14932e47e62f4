#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeav/rng.hpp"

namespace edgeav::nn {

using Vector = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation : int { ReLU = 0, Sigmoid = 1, Linear = 2 };

std::string_view to_string(Activation activation);
std::optional<Activation> parse_activation(std::string_view name);

double sigmoid(double z) noexcept;

struct DenseLayer {
  Matrix W;  // out x in
  Vector b;  // out
  Activation activation = Activation::Linear;
  /// Per-weight trainability, same layout as W. Empty means every weight is
  /// live; 0 marks a pruned weight that stays at zero.
  std::vector<std::uint8_t> mask;

  std::size_t in_dim() const noexcept { return W.cols(); }
  std::size_t out_dim() const noexcept { return W.rows(); }
  bool is_live(std::size_t flat_index) const noexcept {
    return mask.empty() || mask[flat_index] != 0;
  }

  /// Throws ShapeError on inconsistent sizes, DomainError on non-finite entries.
  void validate() const;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// activation(W x + b).
Vector dense_forward(const DenseLayer& layer, std::span<const double> x);

struct Mlp {
  std::vector<DenseLayer> layers;

  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  /// `sizes` has one more entry than `activations`.
  static Mlp create(std::span<const std::size_t> sizes, std::span<const Activation> activations,
                    Rng& rng);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_weights() const;
  std::size_t num_parameters() const;
  void validate() const;

  Vector forward(std::span<const double> x) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Activations recorded by a forward pass, consumed by backward().
struct MlpCache {
  std::vector<Vector> inputs;       // input of each layer
  std::vector<Vector> activations;  // output of each layer
};

Vector mlp_forward(const Mlp& model, std::span<const double> x, MlpCache* cache = nullptr);

struct MlpGradients {
  std::vector<Matrix> dW;
  std::vector<Vector> db;

  static MlpGradients zeros_like(const Mlp& model);
  bool all_zero() const;
  void scale(double factor);
  double squared_norm() const;
};

/// Reverse-mode pass. `loss_grad` is dL/d(output); parameter gradients are
/// added into `grads`. Returns dL/d(input). Throws UsageError when the
/// cache does not come from a forward pass of this model's shape.
Vector backward(const Mlp& model, const MlpCache& cache, std::span<const double> loss_grad,
                MlpGradients& grads);
MlpGradients backward(const Mlp& model, const MlpCache& cache, std::span<const double> loss_grad);

/// Plain SGD; masked (pruned) weights are left untouched.
void sgd_step(Mlp& model, const MlpGradients& grads, double learning_rate);

/// Single-gate recurrence h_t = sigmoid(W_h h_{t-1} + W_x x_t + b_h).
struct RecurrentCell {
  Matrix W_h;  // hidden x hidden
  Matrix W_x;  // hidden x input
  Vector b_h;
  std::size_t hidden_dim = 0;

  static RecurrentCell create(std::size_t hidden_dim, std::size_t input_dim, Rng& rng);
  static RecurrentCell zeros(std::size_t hidden_dim, std::size_t input_dim);
  std::size_t input_dim() const noexcept { return W_x.cols(); }
  void validate() const;

  friend bool operator==(const RecurrentCell&, const RecurrentCell&) = default;
};

Vector rnn_step(const RecurrentCell& cell, std::span<const double> h_prev, std::span<const double> x);

struct RnnCache {
  std::vector<Vector> hidden;  // h_0 .. h_T
  std::vector<Vector> inputs;  // x_1 .. x_T
};

/// Runs the cell over `inputs` from h0 and returns h_1 .. h_T.
std::vector<Vector> rnn_unroll(const RecurrentCell& cell, std::span<const double> h0,
                               std::span<const Vector> inputs, RnnCache* cache = nullptr);

struct RnnGradients {
  Matrix dW_h;
  Matrix dW_x;
  Vector db_h;
  Vector dh0;

  bool all_zero() const;
};

/// Backpropagation through time. `loss_grads[t]` is dL/dh_{t+1}.
RnnGradients rnn_backward(const RecurrentCell& cell, const RnnCache& cache,
                          std::span<const Vector> loss_grads);

void sgd_step(RecurrentCell& cell, const RnnGradients& grads, double learning_rate);

/// sum_i (y_i - t_i)^2 and its gradient 2 (y - t).
double squared_error(std::span<const double> y, std::span<const double> target);
Vector squared_error_grad(std::span<const double> y, std::span<const double> target);

struct GradCheckOptions {
  double eps = 1e-5;
  /// Added to the first analytic gradient entry; used to exercise failure paths.
  double inject_fault = 0.0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t parameters_checked = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor).
double relative_error(double analytic, double numeric) noexcept;
inline constexpr double kGradCheckFloor = 1e-8;

/// Squared-error loss against `target`, every weight and bias perturbed by
/// central differences.
GradCheckResult gradient_check(const Mlp& model, std::span<const double> x,
                               std::span<const double> target, const GradCheckOptions& options = {});

/// Q-network loss (Q(s)[action] - target)^2; only the chosen output carries gradient.
GradCheckResult gradient_check_q(const Mlp& qnet, std::span<const double> state, int action,
                                 double target, const GradCheckOptions& options = {});

/// Loss sum_t |h_t - target_t|^2 over an unrolled window.
GradCheckResult gradient_check_rnn(const RecurrentCell& cell, std::span<const double> h0,
                                   std::span<const Vector> inputs, std::span<const Vector> targets,
                                   const GradCheckOptions& options = {});

/// Smallest |pre-activation| feeding a ReLU for input x; +inf without ReLUs.
double relu_margin(const Mlp& model, std::span<const double> x);

}  // namespace edgeav::nn
