#include "edgeav/tracker.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "edgeav/errors.hpp"

namespace edgeav {

using namespace state_index;

void TrackerConfig::validate() const {
  for (std::size_t i = 0; i < process_noise.size(); ++i) {
    if (!(process_noise[i] >= 0.0)) {
      throw ConfigError("fusion.process_noise[" + std::to_string(i) + "]", "must be >= 0");
    }
  }
  if (!(no_target_distance > 0.0)) throw ConfigError("fusion.no_target_distance", "must be > 0");
  if (!(lost_variance > 0.0)) throw ConfigError("fusion.lost_variance", "must be > 0");
  if (!(odometry_variance > 0.0)) throw ConfigError("fusion.odometry_variance", "must be > 0");
}

SensorFrame sense_all(const SensorSuite& sensors, WorldState& world) {
  SensorFrame frame;
  frame.camera = sense(sensors[SensorKind::Camera], world);
  frame.lidar = sense(sensors[SensorKind::Lidar], world);
  frame.radar = sense(sensors[SensorKind::Radar], world);
  frame.odometry_speed = world.ego.v;
  return frame;
}

DrivingStateTracker::DrivingStateTracker(double dt, TrackerConfig config)
    : dt_(dt), config_(config) {
  if (!(dt > 0.0)) throw DomainError("DrivingStateTracker: dt must be > 0");
  config_.validate();
  reset(0.0);
}

void DrivingStateTracker::reset(double ego_speed) {
  estimate_.mean = Eigen::VectorXd::Zero(kDim);
  estimate_.covariance = Eigen::MatrixXd::Zero(kDim, kDim);
  estimate_.mean[kSpeed] = ego_speed;
  estimate_.covariance(kLateral, kLateral) = 1.0;
  estimate_.covariance(kSpeed, kSpeed) = 1.0;
  mark_lost();
}

void DrivingStateTracker::mark_lost() {
  has_target_ = false;
  estimate_.mean[kDistance] = config_.no_target_distance;
  estimate_.mean[kClosing] = 0.0;
  for (Eigen::Index i : {kDistance, kClosing}) {
    estimate_.covariance.row(i).setZero();
    estimate_.covariance.col(i).setZero();
    estimate_.covariance(i, i) = config_.lost_variance;
  }
}

TransitionModel DrivingStateTracker::transition() const {
  TransitionModel model;
  model.F = Eigen::MatrixXd::Identity(kDim, kDim);
  model.F(kDistance, kClosing) = -dt_;
  model.Q = Eigen::MatrixXd::Zero(kDim, kDim);
  for (Eigen::Index i = 0; i < kDim; ++i) {
    model.Q(i, i) = config_.process_noise[static_cast<std::size_t>(i)] * dt_;
  }
  return model;
}

void DrivingStateTracker::predict() { estimate_ = kalman_predict(estimate_, transition()); }

void DrivingStateTracker::apply(const Eigen::VectorXd& z, const ObservationModel& model,
                                bool nonlinear) {
  estimate_ = nonlinear ? ekf_update(estimate_, z, model) : kalman_update(estimate_, z, model);
}

void DrivingStateTracker::update(const SensorFrame& frame) {
  const bool any_target = frame.camera.valid || frame.lidar.valid || frame.radar.valid;
  if (!any_target) {
    mark_lost();
  } else if (!has_target_) {
    // Fresh track: start from an uninformative distance/closing prior.
    for (Eigen::Index i : {kDistance, kClosing}) {
      estimate_.covariance.row(i).setZero();
      estimate_.covariance.col(i).setZero();
      estimate_.covariance(i, i) = config_.lost_variance;
    }
    has_target_ = true;
  }

  // Camera: distance (when it has a return) and lane offset (always).
  {
    const Measurement& m = frame.camera;
    if (m.valid) {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, kDim);
      H(0, kDistance) = 1.0;
      H(1, kLateral) = 1.0;
      const Eigen::MatrixXd R = Eigen::Vector2d(m.variance[0], m.variance[1]).asDiagonal();
      apply(Eigen::Vector2d(m.values[0], m.values[1]), ObservationModel::linear(H, R), false);
    } else {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, kDim);
      H(0, kLateral) = 1.0;
      Eigen::MatrixXd R(1, 1);
      R(0, 0) = m.variance[quantity::kCameraLateral];
      Eigen::VectorXd z(1);
      z[0] = m.values[quantity::kCameraLateral];
      apply(z, ObservationModel::linear(H, R), false);
    }
  }

  // Lidar: range to an obstacle near the lane center.
  if (frame.lidar.valid) {
    Eigen::MatrixXd R(1, 1);
    R(0, 0) = frame.lidar.variance[0];
    Eigen::VectorXd z(1);
    z[0] = frame.lidar.values[0];
    if (config_.lidar_uses_ekf) {
      auto h = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd out(1);
        out[0] = std::hypot(x[kDistance], x[kLateral]);
        return out;
      };
      auto jac = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(1, kDim);
        const double r = std::hypot(x[kDistance], x[kLateral]);
        if (r > 0.0) {
          J(0, kDistance) = x[kDistance] / r;
          J(0, kLateral) = x[kLateral] / r;
        } else {
          J(0, kDistance) = 1.0;
        }
        return J;
      };
      apply(z, ObservationModel::nonlinear(h, R, jac), true);
    } else {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, kDim);
      H(0, kDistance) = 1.0;
      apply(z, ObservationModel::linear(H, R), false);
    }
  }

  // Radar: range and range rate (= -closing).
  if (frame.radar.valid) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, kDim);
    H(0, kDistance) = 1.0;
    H(1, kClosing) = -1.0;
    const Eigen::MatrixXd R =
        Eigen::Vector2d(frame.radar.variance[0], frame.radar.variance[1]).asDiagonal();
    apply(Eigen::Vector2d(frame.radar.values[0], frame.radar.values[1]),
          ObservationModel::linear(H, R), false);
  }

  // Wheel odometry.
  {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, kDim);
    H(0, kSpeed) = 1.0;
    Eigen::MatrixXd R(1, 1);
    R(0, 0) = config_.odometry_variance;
    Eigen::VectorXd z(1);
    z[0] = frame.odometry_speed;
    apply(z, ObservationModel::linear(H, R), false);
  }
}

const GaussianEstimate& DrivingStateTracker::step(const SensorFrame& frame) {
  predict();
  update(frame);
  return estimate_;
}

std::optional<ScalarEstimate> fuse_distance_snapshot(const SensorFrame& frame) {
  std::vector<ScalarEstimate> parts;
  for (const Measurement* m : {&frame.camera, &frame.lidar, &frame.radar}) {
    if (m->valid) parts.push_back({m->values[0], m->variance[0]});
  }
  if (parts.empty()) return std::nullopt;
  return weighted_fuse(parts);
}

std::array<double, 3> distance_weights(const SensorSuite& sensors, const WeatherCondition& weather) {
  const std::array<double, 3> variances{
      noise_variance_for(sensors[SensorKind::Camera], weather, quantity::kDistance),
      noise_variance_for(sensors[SensorKind::Lidar], weather, quantity::kDistance),
      noise_variance_for(sensors[SensorKind::Radar], weather, quantity::kDistance)};
  const std::vector<double> w = inverse_variance_weights(variances);
  return {w[0], w[1], w[2]};
}

}  // namespace edgeav
