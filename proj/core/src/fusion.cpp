#include "edgeav/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edgeav/errors.hpp"

namespace edgeav {

DiscreteBelief DiscreteBelief::uniform(std::vector<std::string> states) {
  DiscreteBelief belief;
  const double p = states.empty() ? 0.0 : 1.0 / static_cast<double>(states.size());
  belief.probs.assign(states.size(), p);
  belief.states = std::move(states);
  return belief;
}

void DiscreteBelief::validate() const {
  if (states.size() != probs.size()) throw DomainError("belief: labels and probs differ in size");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw DomainError("belief: negative or NaN probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DomainError("belief: probabilities do not sum to 1");
}

DiscreteBelief bayes_update(const DiscreteBelief& prior, std::span<const double> likelihood) {
  if (likelihood.size() != prior.probs.size()) {
    throw ShapeError("bayes_update: likelihood has " + std::to_string(likelihood.size()) +
                     " entries, prior has " + std::to_string(prior.probs.size()));
  }
  DiscreteBelief posterior = prior;
  double evidence = 0.0;  // P(O) by marginalization
  for (std::size_t i = 0; i < likelihood.size(); ++i) {
    if (!(likelihood[i] >= 0.0)) throw DomainError("bayes_update: likelihood must be >= 0");
    posterior.probs[i] = likelihood[i] * prior.probs[i];
    evidence += posterior.probs[i];
  }
  if (!(evidence > 0.0)) {
    throw DegenerateEvidenceError("bayes_update: evidence has zero probability under the prior");
  }
  for (double& p : posterior.probs) p /= evidence;
  return posterior;
}

std::vector<double> inverse_variance_weights(std::span<const double> variances) {
  std::vector<double> w(variances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < variances.size(); ++i) {
    if (!(variances[i] > 0.0)) {
      throw DomainError("inverse_variance_weights: variance of sensor " + std::to_string(i) +
                        " must be > 0");
    }
    w[i] = 1.0 / variances[i];
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return w;
}

ScalarEstimate weighted_fuse(std::span<const ScalarEstimate> estimates) {
  if (estimates.empty()) throw UsageError("weighted_fuse: no estimates");
  if (estimates.size() == 1) return estimates.front();

  std::vector<double> variances(estimates.size());
  std::transform(estimates.begin(), estimates.end(), variances.begin(),
                 [](const ScalarEstimate& e) { return e.variance; });
  const std::vector<double> w = inverse_variance_weights(variances);

  ScalarEstimate fused{0.0, 0.0};
  double precision = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    fused.mean += w[i] * estimates[i].mean;
    precision += 1.0 / estimates[i].variance;
  }
  fused.variance = 1.0 / precision;
  return fused;
}

ObservationModel ObservationModel::linear(Eigen::MatrixXd H, Eigen::MatrixXd R) {
  ObservationModel m;
  m.H = std::move(H);
  m.R = std::move(R);
  return m;
}

ObservationModel ObservationModel::nonlinear(Map h, Eigen::MatrixXd R, Jacobian jacobian) {
  ObservationModel m;
  m.h = std::move(h);
  m.R = std::move(R);
  m.jacobian = std::move(jacobian);
  return m;
}

Eigen::VectorXd ObservationModel::predict(const Eigen::VectorXd& x) const {
  if (is_linear()) return H * x;
  return h(x);
}

Eigen::MatrixXd ObservationModel::linearize(const Eigen::VectorXd& x) const {
  if (is_linear()) return H;
  if (jacobian) return jacobian(x);
  return numeric_jacobian(h, x);
}

Eigen::MatrixXd numeric_jacobian(const ObservationModel::Map& h, const Eigen::VectorXd& x) {
  const Eigen::VectorXd h0 = h(x);
  Eigen::MatrixXd J(h0.size(), x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
    probe[j] = x[j] + step;
    const Eigen::VectorXd up = h(probe);
    probe[j] = x[j] - step;
    const Eigen::VectorXd down = h(probe);
    probe[j] = x[j];
    J.col(j) = (up - down) / (2.0 * step);
  }
  return J;
}

namespace {

void check_dims(const GaussianEstimate& est, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                Eigen::Index z_dim) {
  if (est.covariance.rows() != est.dim() || est.covariance.cols() != est.dim()) {
    throw ShapeError("kalman: covariance does not match state dimension");
  }
  if (H.cols() != est.dim() || H.rows() != z_dim || R.rows() != z_dim || R.cols() != z_dim) {
    throw ShapeError("kalman: observation model dimensions are inconsistent");
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& P) { return 0.5 * (P + P.transpose()); }

// Shared by the KF and EKF so that a linear h reproduces the KF exactly.
GaussianEstimate linear_update(const GaussianEstimate& predicted, const Eigen::VectorXd& innovation,
                               const Eigen::MatrixXd& H, const Eigen::MatrixXd& R) {
  const Eigen::MatrixXd K = kalman_gain(predicted.covariance, H, R);
  GaussianEstimate posterior;
  posterior.mean = predicted.mean + K * innovation;

  // Joseph form keeps the covariance PSD under roundoff.
  const Eigen::Index n = predicted.dim();
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - K * H;
  posterior.covariance =
      symmetrized(A * predicted.covariance * A.transpose() + K * R * K.transpose());
  return posterior;
}

}  // namespace

Eigen::MatrixXd kalman_gain(const Eigen::MatrixXd& P_pred, const Eigen::MatrixXd& H,
                            const Eigen::MatrixXd& R) {
  if (P_pred.rows() != P_pred.cols() || H.cols() != P_pred.rows() || R.rows() != H.rows() ||
      R.cols() != H.rows()) {
    throw ShapeError("kalman_gain: inconsistent P, H, R dimensions");
  }
  const Eigen::MatrixXd S = symmetrized(H * P_pred * H.transpose() + R);
  if (!S.allFinite()) throw NumericalError("kalman_gain: non-finite innovation covariance");

  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  const double scale = S.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || scale == 0.0 ||
      ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-14 * scale) {
    throw NumericalError("kalman_gain: innovation covariance is singular");
  }
  // K^T = S^-1 (H P)  since S and P are symmetric.
  return ldlt.solve(H * P_pred).transpose();
}

Eigen::MatrixXd kalman_gain(const Eigen::MatrixXd& P_pred, const ObservationModel& model) {
  if (!model.is_linear()) throw UsageError("kalman_gain: nonlinear model needs ekf_update");
  return kalman_gain(P_pred, model.H, model.R);
}

GaussianEstimate kalman_update(const GaussianEstimate& predicted, const Eigen::VectorXd& z,
                               const ObservationModel& model) {
  if (!model.is_linear()) throw UsageError("kalman_update: nonlinear model needs ekf_update");
  check_dims(predicted, model.H, model.R, z.size());
  return linear_update(predicted, z - model.H * predicted.mean, model.H, model.R);
}

GaussianEstimate kalman_predict(const GaussianEstimate& estimate, const TransitionModel& model) {
  const Eigen::Index n = estimate.dim();
  if (model.F.rows() != n || model.F.cols() != n || model.Q.rows() != n || model.Q.cols() != n) {
    throw ShapeError("kalman_predict: F and Q must be square with the state dimension");
  }
  GaussianEstimate out;
  out.mean = model.F * estimate.mean;
  out.covariance = symmetrized(model.F * estimate.covariance * model.F.transpose() + model.Q);
  return out;
}

GaussianEstimate ekf_update(const GaussianEstimate& predicted, const Eigen::VectorXd& z,
                            const ObservationModel& model) {
  const Eigen::MatrixXd H = model.linearize(predicted.mean);
  if (!H.allFinite()) throw NumericalError("ekf_update: non-finite Jacobian entries");
  check_dims(predicted, H, model.R, z.size());
  const Eigen::VectorXd innovation = z - model.predict(predicted.mean);
  return linear_update(predicted, innovation, H, model.R);
}

}  // namespace edgeav
