#include "edgeav/nn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "edgeav/errors.hpp"

namespace edgeav::nn {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "unknown";
}

std::optional<Activation> parse_activation(std::string_view name) {
  for (Activation a : {Activation::ReLU, Activation::Sigmoid, Activation::Linear}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return sigmoid(z);
    case Activation::Linear: return z;
  }
  return z;
}

// Derivative expressed through the activation output y (and input z for ReLU).
double activation_slope(Activation a, double z, double y) noexcept {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Linear: return 1.0;
  }
  return 1.0;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void affine(const Matrix& W, std::span<const double> x, std::span<const double> b, Vector& out) {
  out.resize(W.rows());
  for (std::size_t r = 0; r < W.rows(); ++r) {
    const auto row = W.row(r);
    double acc = b[r];
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

}  // namespace

void DenseLayer::validate() const {
  if (b.size() != W.rows()) throw ShapeError("DenseLayer: bias size differs from output dim");
  if (!mask.empty() && mask.size() != W.size()) throw ShapeError("DenseLayer: mask shape mismatch");
  if (!all_finite(W.data()) || !all_finite(b)) throw DomainError("DenseLayer: non-finite parameter");
}

Vector dense_forward(const DenseLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in_dim()) {
    throw ShapeError("dense_forward: input has " + std::to_string(x.size()) + " entries, layer expects " +
                     std::to_string(layer.in_dim()));
  }
  Vector out;
  affine(layer.W, x, layer.b, out);
  for (double& v : out) v = activate(layer.activation, v);
  return out;
}

Mlp Mlp::create(std::span<const std::size_t> sizes, std::span<const Activation> activations,
                Rng& rng) {
  if (sizes.size() < 2 || activations.size() + 1 != sizes.size()) {
    throw ShapeError("Mlp::create: need one activation per layer");
  }
  Mlp model;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    const std::size_t fan_in = sizes[l];
    const std::size_t fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    layer.W = Matrix(fan_out, fan_in);
    for (double& w : layer.W.data()) w = rng.uniform(-limit, limit);
    layer.b.assign(fan_out, 0.0);
    layer.activation = activations[l];
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::size_t Mlp::input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
std::size_t Mlp::output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

std::size_t Mlp::num_weights() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.W.size();
  return n;
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.W.size() + l.b.size();
  return n;
}

void Mlp::validate() const {
  if (layers.empty()) throw ShapeError("Mlp: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && layers[l].in_dim() != layers[l - 1].out_dim()) {
      throw ShapeError("Mlp: layer " + std::to_string(l) + " input does not chain");
    }
  }
}

Vector Mlp::forward(std::span<const double> x) const { return mlp_forward(*this, x); }

Vector mlp_forward(const Mlp& model, std::span<const double> x, MlpCache* cache) {
  if (model.layers.empty()) throw ShapeError("mlp_forward: empty model");
  if (x.size() != model.input_dim()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(x.size()) + " entries, model expects " +
                     std::to_string(model.input_dim()));
  }
  if (cache != nullptr) {
    cache->inputs.resize(model.layers.size());
    cache->activations.resize(model.layers.size());
  }
  Vector current(x.begin(), x.end());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Vector next = dense_forward(model.layers[l], current);
    if (cache != nullptr) {
      cache->inputs[l] = std::move(current);
      cache->activations[l] = next;
    }
    current = std::move(next);
  }
  return current;
}

MlpGradients MlpGradients::zeros_like(const Mlp& model) {
  MlpGradients g;
  for (const DenseLayer& l : model.layers) {
    g.dW.emplace_back(l.W.rows(), l.W.cols());
    g.db.emplace_back(l.b.size(), 0.0);
  }
  return g;
}

bool MlpGradients::all_zero() const {
  auto zero = [](double v) { return v == 0.0; };
  for (const Matrix& m : dW) {
    if (!std::all_of(m.data().begin(), m.data().end(), zero)) return false;
  }
  for (const Vector& v : db) {
    if (!std::all_of(v.begin(), v.end(), zero)) return false;
  }
  return true;
}

void MlpGradients::scale(double factor) {
  for (Matrix& m : dW) {
    for (double& v : m.data()) v *= factor;
  }
  for (Vector& v : db) {
    for (double& x : v) x *= factor;
  }
}

double MlpGradients::squared_norm() const {
  double s = 0.0;
  for (const Matrix& m : dW) {
    for (double v : m.data()) s += v * v;
  }
  for (const Vector& v : db) {
    for (double x : v) s += x * x;
  }
  return s;
}

Vector backward(const Mlp& model, const MlpCache& cache, std::span<const double> loss_grad,
                MlpGradients& grads) {
  const std::size_t L = model.layers.size();
  if (cache.inputs.size() != L || cache.activations.size() != L) {
    throw UsageError("backward: cache does not match the model depth");
  }
  if (grads.dW.size() != L || grads.db.size() != L) {
    throw UsageError("backward: gradient buffers do not match the model");
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (cache.inputs[l].size() != model.layers[l].in_dim() ||
        cache.activations[l].size() != model.layers[l].out_dim()) {
      throw UsageError("backward: stale cache for layer " + std::to_string(l));
    }
  }
  if (loss_grad.size() != model.output_dim()) throw ShapeError("backward: loss gradient size mismatch");

  Vector delta(loss_grad.begin(), loss_grad.end());
  for (std::size_t li = L; li-- > 0;) {
    const DenseLayer& layer = model.layers[li];
    const Vector& in = cache.inputs[li];
    const Vector& out = cache.activations[li];

    // dL/dz = dL/dy * f'(z); for ReLU z > 0 exactly when y > 0.
    for (std::size_t r = 0; r < delta.size(); ++r) {
      delta[r] *= activation_slope(layer.activation, out[r], out[r]);
    }
    Matrix& dW = grads.dW[li];
    Vector& db = grads.db[li];
    Vector dx(layer.in_dim(), 0.0);
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      db[r] += d;
      auto grad_row = dW.row(r);
      const auto w_row = layer.W.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) {
        grad_row[c] += d * in[c];
        dx[c] += d * w_row[c];
      }
    }
    delta = std::move(dx);
  }
  return delta;
}

MlpGradients backward(const Mlp& model, const MlpCache& cache, std::span<const double> loss_grad) {
  MlpGradients grads = MlpGradients::zeros_like(model);
  backward(model, cache, loss_grad, grads);
  return grads;
}

void sgd_step(Mlp& model, const MlpGradients& grads, double learning_rate) {
  if (grads.dW.size() != model.layers.size()) throw ShapeError("sgd_step: gradient shape mismatch");
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    DenseLayer& layer = model.layers[l];
    auto& w = layer.W.data();
    const auto& g = grads.dW[l].data();
    if (g.size() != w.size() || grads.db[l].size() != layer.b.size()) {
      throw ShapeError("sgd_step: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (layer.is_live(i)) w[i] -= learning_rate * g[i];
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= learning_rate * grads.db[l][i];
  }
}

RecurrentCell RecurrentCell::zeros(std::size_t hidden_dim, std::size_t input_dim) {
  RecurrentCell cell;
  cell.hidden_dim = hidden_dim;
  cell.W_h = Matrix(hidden_dim, hidden_dim);
  cell.W_x = Matrix(hidden_dim, input_dim);
  cell.b_h.assign(hidden_dim, 0.0);
  return cell;
}

RecurrentCell RecurrentCell::create(std::size_t hidden_dim, std::size_t input_dim, Rng& rng) {
  RecurrentCell cell = zeros(hidden_dim, input_dim);
  const double lh = std::sqrt(6.0 / static_cast<double>(2 * hidden_dim));
  const double lx = std::sqrt(6.0 / static_cast<double>(hidden_dim + input_dim));
  for (double& w : cell.W_h.data()) w = rng.uniform(-lh, lh);
  for (double& w : cell.W_x.data()) w = rng.uniform(-lx, lx);
  return cell;
}

void RecurrentCell::validate() const {
  if (W_h.rows() != hidden_dim || W_h.cols() != hidden_dim) throw ShapeError("RecurrentCell: W_h must be square");
  if (W_x.rows() != hidden_dim || b_h.size() != hidden_dim) throw ShapeError("RecurrentCell: shape mismatch");
  if (!all_finite(W_h.data()) || !all_finite(W_x.data()) || !all_finite(b_h)) {
    throw DomainError("RecurrentCell: non-finite parameter");
  }
}

Vector rnn_step(const RecurrentCell& cell, std::span<const double> h_prev, std::span<const double> x) {
  if (h_prev.size() != cell.hidden_dim || x.size() != cell.input_dim()) {
    throw ShapeError("rnn_step: expected hidden " + std::to_string(cell.hidden_dim) + " and input " +
                     std::to_string(cell.input_dim()));
  }
  Vector h;
  affine(cell.W_h, h_prev, cell.b_h, h);
  for (std::size_t r = 0; r < cell.hidden_dim; ++r) {
    const auto row = cell.W_x.row(r);
    double acc = h[r];
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    h[r] = sigmoid(acc);
  }
  return h;
}

std::vector<Vector> rnn_unroll(const RecurrentCell& cell, std::span<const double> h0,
                               std::span<const Vector> inputs, RnnCache* cache) {
  std::vector<Vector> out;
  out.reserve(inputs.size());
  Vector h(h0.begin(), h0.end());
  if (cache != nullptr) {
    cache->hidden.assign(1, h);
    cache->inputs.assign(inputs.begin(), inputs.end());
  }
  for (const Vector& x : inputs) {
    h = rnn_step(cell, h, x);
    out.push_back(h);
    if (cache != nullptr) cache->hidden.push_back(h);
  }
  return out;
}

bool RnnGradients::all_zero() const {
  auto zero = [](double v) { return v == 0.0; };
  return std::all_of(dW_h.data().begin(), dW_h.data().end(), zero) &&
         std::all_of(dW_x.data().begin(), dW_x.data().end(), zero) &&
         std::all_of(db_h.begin(), db_h.end(), zero) && std::all_of(dh0.begin(), dh0.end(), zero);
}

RnnGradients rnn_backward(const RecurrentCell& cell, const RnnCache& cache,
                          std::span<const Vector> loss_grads) {
  const std::size_t T = cache.inputs.size();
  if (cache.hidden.size() != T + 1 || loss_grads.size() != T) {
    throw UsageError("rnn_backward: cache and loss gradients describe different windows");
  }
  const std::size_t H = cell.hidden_dim;
  for (std::size_t t = 0; t <= T; ++t) {
    if (cache.hidden[t].size() != H) throw UsageError("rnn_backward: stale cache hidden size");
  }

  RnnGradients g;
  g.dW_h = Matrix(H, H);
  g.dW_x = Matrix(H, cell.input_dim());
  g.db_h.assign(H, 0.0);

  Vector carry(H, 0.0);  // dL/dh_t flowing from later steps
  for (std::size_t t = T; t-- > 0;) {
    const Vector& h = cache.hidden[t + 1];
    const Vector& h_prev = cache.hidden[t];
    const Vector& x = cache.inputs[t];
    if (loss_grads[t].size() != H || x.size() != cell.input_dim()) {
      throw ShapeError("rnn_backward: per-step size mismatch");
    }
    Vector dz(H);
    for (std::size_t r = 0; r < H; ++r) dz[r] = (loss_grads[t][r] + carry[r]) * h[r] * (1.0 - h[r]);

    Vector next_carry(H, 0.0);
    for (std::size_t r = 0; r < H; ++r) {
      const double d = dz[r];
      g.db_h[r] += d;
      for (std::size_t c = 0; c < H; ++c) {
        g.dW_h(r, c) += d * h_prev[c];
        next_carry[c] += d * cell.W_h(r, c);
      }
      for (std::size_t c = 0; c < x.size(); ++c) g.dW_x(r, c) += d * x[c];
    }
    carry = std::move(next_carry);
  }
  g.dh0 = std::move(carry);
  return g;
}

void sgd_step(RecurrentCell& cell, const RnnGradients& grads, double learning_rate) {
  for (std::size_t i = 0; i < cell.W_h.size(); ++i) cell.W_h.data()[i] -= learning_rate * grads.dW_h.data()[i];
  for (std::size_t i = 0; i < cell.W_x.size(); ++i) cell.W_x.data()[i] -= learning_rate * grads.dW_x.data()[i];
  for (std::size_t i = 0; i < cell.b_h.size(); ++i) cell.b_h[i] -= learning_rate * grads.db_h[i];
}

double squared_error(std::span<const double> y, std::span<const double> target) {
  if (y.size() != target.size()) throw ShapeError("squared_error: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - target[i]) * (y[i] - target[i]);
  return s;
}

Vector squared_error_grad(std::span<const double> y, std::span<const double> target) {
  if (y.size() != target.size()) throw ShapeError("squared_error_grad: size mismatch");
  Vector g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = 2.0 * (y[i] - target[i]);
  return g;
}

double relative_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

// Reference losses are evaluated in extended precision so that the central
// difference is limited by truncation, not by cancellation in up - down.
using Wide = long double;

Wide wide_activate(Activation a, Wide z) {
  switch (a) {
    case Activation::ReLU: return z > 0 ? z : Wide{0};
    case Activation::Sigmoid: return z >= 0 ? 1 / (1 + std::exp(-z)) : std::exp(z) / (1 + std::exp(z));
    case Activation::Linear: return z;
  }
  return z;
}

std::vector<Wide> wide_forward(const Mlp& model, std::span<const double> x) {
  std::vector<Wide> current(x.begin(), x.end());
  for (const DenseLayer& layer : model.layers) {
    std::vector<Wide> next(layer.out_dim());
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      const auto row = layer.W.row(r);
      Wide acc = layer.b[r];
      for (std::size_t c = 0; c < row.size(); ++c) acc += static_cast<Wide>(row[c]) * current[c];
      next[r] = wide_activate(layer.activation, acc);
    }
    current = std::move(next);
  }
  return current;
}

Wide wide_squared_error(const std::vector<Wide>& y, std::span<const double> target) {
  Wide s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - target[i]) * (y[i] - target[i]);
  return s;
}

// Walks every scalar parameter of a model through a uniform accessor.
struct ParamRef {
  double* value;
  double analytic;
  std::string name;
};

GradCheckResult compare(std::vector<ParamRef>& params, const std::function<Wide()>& loss,
                        const GradCheckOptions& options) {
  GradCheckResult result;
  if (!params.empty()) params.front().analytic += options.inject_fault;
  for (ParamRef& p : params) {
    const double saved = *p.value;
    const double hi = saved + options.eps;
    const double lo = saved - options.eps;
    *p.value = hi;
    const Wide up = loss();
    *p.value = lo;
    const Wide down = loss();
    *p.value = saved;
    const auto numeric = static_cast<double>((up - down) / (static_cast<Wide>(hi) - static_cast<Wide>(lo)));
    const double err = relative_error(p.analytic, numeric);
    if (err > result.max_relative_error || result.worst_parameter.empty()) {
      if (err >= result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
      }
    }
    ++result.parameters_checked;
  }
  return result;
}

std::vector<ParamRef> mlp_params(Mlp& model, const MlpGradients& grads) {
  std::vector<ParamRef> params;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    DenseLayer& layer = model.layers[l];
    for (std::size_t i = 0; i < layer.W.size(); ++i) {
      params.push_back({&layer.W.data()[i], grads.dW[l].data()[i],
                        "layer" + std::to_string(l) + ".W[" + std::to_string(i) + "]"});
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
      params.push_back({&layer.b[i], grads.db[l][i],
                        "layer" + std::to_string(l) + ".b[" + std::to_string(i) + "]"});
    }
  }
  return params;
}

}  // namespace

GradCheckResult gradient_check(const Mlp& model, std::span<const double> x,
                               std::span<const double> target, const GradCheckOptions& options) {
  Mlp probe = model;
  MlpCache cache;
  const Vector y = mlp_forward(probe, x, &cache);
  const MlpGradients grads = backward(probe, cache, squared_error_grad(y, target));
  std::vector<ParamRef> params = mlp_params(probe, grads);
  if (target.size() != y.size()) throw ShapeError("gradient_check: target size mismatch");
  return compare(params, [&] { return wide_squared_error(wide_forward(probe, x), target); }, options);
}

GradCheckResult gradient_check_q(const Mlp& qnet, std::span<const double> state, int action,
                                 double target, const GradCheckOptions& options) {
  if (action < 0 || static_cast<std::size_t>(action) >= qnet.output_dim()) {
    throw DomainError("gradient_check_q: action index out of range");
  }
  const auto a = static_cast<std::size_t>(action);
  Mlp probe = qnet;
  MlpCache cache;
  const Vector q = mlp_forward(probe, state, &cache);
  Vector dq(q.size(), 0.0);
  dq[a] = 2.0 * (q[a] - target);
  const MlpGradients grads = backward(probe, cache, dq);
  std::vector<ParamRef> params = mlp_params(probe, grads);
  return compare(params,
                 [&] {
                   const Wide qa = wide_forward(probe, state)[a];
                   return (qa - target) * (qa - target);
                 },
                 options);
}

GradCheckResult gradient_check_rnn(const RecurrentCell& cell, std::span<const double> h0,
                                   std::span<const Vector> inputs, std::span<const Vector> targets,
                                   const GradCheckOptions& options) {
  if (inputs.size() != targets.size()) throw ShapeError("gradient_check_rnn: window size mismatch");
  RecurrentCell probe = cell;
  RnnCache cache;
  const std::vector<Vector> hs = rnn_unroll(probe, h0, inputs, &cache);
  std::vector<Vector> dh;
  for (std::size_t t = 0; t < hs.size(); ++t) dh.push_back(squared_error_grad(hs[t], targets[t]));
  const RnnGradients g = rnn_backward(probe, cache, dh);
  auto loss = [&] {
    std::vector<Wide> h(h0.begin(), h0.end());
    Wide s = 0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      std::vector<Wide> next(probe.hidden_dim);
      for (std::size_t r = 0; r < probe.hidden_dim; ++r) {
        Wide acc = probe.b_h[r];
        for (std::size_t c = 0; c < probe.hidden_dim; ++c) acc += static_cast<Wide>(probe.W_h(r, c)) * h[c];
        for (std::size_t c = 0; c < probe.input_dim(); ++c) acc += static_cast<Wide>(probe.W_x(r, c)) * inputs[t][c];
        next[r] = wide_activate(Activation::Sigmoid, acc);
      }
      h = std::move(next);
      s += wide_squared_error(h, targets[t]);
    }
    return s;
  };

  std::vector<ParamRef> params;
  for (std::size_t i = 0; i < probe.W_h.size(); ++i) {
    params.push_back({&probe.W_h.data()[i], g.dW_h.data()[i], "W_h[" + std::to_string(i) + "]"});
  }
  for (std::size_t i = 0; i < probe.W_x.size(); ++i) {
    params.push_back({&probe.W_x.data()[i], g.dW_x.data()[i], "W_x[" + std::to_string(i) + "]"});
  }
  for (std::size_t i = 0; i < probe.b_h.size(); ++i) {
    params.push_back({&probe.b_h[i], g.db_h[i], "b_h[" + std::to_string(i) + "]"});
  }
  return compare(params, loss, options);
}

double relu_margin(const Mlp& model, std::span<const double> x) {
  double margin = std::numeric_limits<double>::infinity();
  Vector current(x.begin(), x.end());
  Vector z;
  for (const DenseLayer& layer : model.layers) {
    if (current.size() != layer.in_dim()) throw ShapeError("relu_margin: input size mismatch");
    affine(layer.W, current, layer.b, z);
    if (layer.activation == Activation::ReLU) {
      for (double v : z) margin = std::min(margin, std::abs(v));
    }
    for (double& v : z) v = activate(layer.activation, v);
    current = z;
  }
  return margin;
}

}  // namespace edgeav::nn
