#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace edgeav {

/// Categorical belief over labelled states.
struct DiscreteBelief {
  std::vector<std::string> states;
  std::vector<double> probs;

  static DiscreteBelief uniform(std::vector<std::string> states);
  /// Throws DomainError unless probs are >= 0 and sum to 1 within 1e-12.
  void validate() const;
};

struct GaussianEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index dim() const noexcept { return mean.size(); }
};

/// Scalar mean/variance pair used by inverse-variance pooling.
struct ScalarEstimate {
  double mean = 0.0;
  double variance = 1.0;
};

/// Linear (H) or nonlinear (h, optional analytic Jacobian) observation map
/// with measurement noise covariance R.
struct ObservationModel {
  using Map = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using Jacobian = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  Eigen::MatrixXd H;
  Map h;
  Jacobian jacobian;
  Eigen::MatrixXd R;

  static ObservationModel linear(Eigen::MatrixXd H, Eigen::MatrixXd R);
  static ObservationModel nonlinear(Map h, Eigen::MatrixXd R, Jacobian jacobian = {});

  bool is_linear() const noexcept { return !h; }
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
  /// H for linear models; the analytic Jacobian or a central-difference
  /// fallback otherwise.
  Eigen::MatrixXd linearize(const Eigen::VectorXd& x) const;
};

struct TransitionModel {
  Eigen::MatrixXd F;
  Eigen::MatrixXd Q;
};

/// posterior_i = likelihood_i * prior_i / sum_j likelihood_j * prior_j.
/// Throws DegenerateEvidenceError when the normalizer is zero.
DiscreteBelief bayes_update(const DiscreteBelief& prior, std::span<const double> likelihood);

/// w_i = 1 / sigma_i^2 normalized to sum to 1; output order follows input.
/// Throws DomainError naming the index of any non-positive variance.
std::vector<double> inverse_variance_weights(std::span<const double> variances);

/// Convex inverse-variance combination; fused variance 1 / sum(1 / sigma_i^2).
ScalarEstimate weighted_fuse(std::span<const ScalarEstimate> estimates);

/// K = P H^T (H P H^T + R)^-1 via a symmetric solve.
Eigen::MatrixXd kalman_gain(const Eigen::MatrixXd& P_pred, const Eigen::MatrixXd& H,
                            const Eigen::MatrixXd& R);
Eigen::MatrixXd kalman_gain(const Eigen::MatrixXd& P_pred, const ObservationModel& model);

GaussianEstimate kalman_update(const GaussianEstimate& predicted, const Eigen::VectorXd& z,
                               const ObservationModel& model);

GaussianEstimate kalman_predict(const GaussianEstimate& estimate, const TransitionModel& model);

/// Linearize h at the predicted mean, innovation z - h(x), then the linear update.
GaussianEstimate ekf_update(const GaussianEstimate& predicted, const Eigen::VectorXd& z,
                            const ObservationModel& model);

/// Central differences with step 1e-6 * max(1, |x_j|).
Eigen::MatrixXd numeric_jacobian(const ObservationModel::Map& h, const Eigen::VectorXd& x);

}  // namespace edgeav
