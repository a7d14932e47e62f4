#pragma once

#include <array>
#include <optional>

#include "edgeav/fusion.hpp"
#include "edgeav/sensors.hpp"

namespace edgeav {

/// Components of the fused driving state.
namespace state_index {
inline constexpr Eigen::Index kDistance = 0;  // to nearest obstacle ahead (m)
inline constexpr Eigen::Index kClosing = 1;   // closing speed, positive when approaching (m/s)
inline constexpr Eigen::Index kLateral = 2;   // ego lateral offset (m)
inline constexpr Eigen::Index kSpeed = 3;     // ego speed (m/s)
inline constexpr Eigen::Index kDim = 4;
}  // namespace state_index

struct TrackerConfig {
  /// Process noise spectral densities for [distance, closing, lateral, speed].
  std::array<double, 4> process_noise{0.05, 4.0, 0.2, 4.0};
  /// Distance reported while no sensor has a return.
  double no_target_distance = 150.0;
  /// Variance assigned to distance and closing speed when the track is lost.
  double lost_variance = 1e4;
  double odometry_variance = 0.01;
  /// Lidar range is fused through the nonlinear sqrt(d^2 + y^2) model.
  bool lidar_uses_ekf = true;

  void validate() const;
};

/// Measurements gathered for one tick.
struct SensorFrame {
  Measurement camera;
  Measurement lidar;
  Measurement radar;
  double odometry_speed = 0.0;
};

/// Draws one measurement per sensor (camera, lidar, radar order) from the
/// world generator, plus the exact odometry speed.
SensorFrame sense_all(const SensorSuite& sensors, WorldState& world);

/// Kalman tracker for [distance, closing speed, lateral offset, speed].
/// Each tick: predict, then fold in every valid measurement with R taken
/// from the current weather's noise variances. Invalid measurements are
/// skipped; when no sensor sees a target the distance resets to
/// `no_target_distance` with `lost_variance`.
class DrivingStateTracker {
 public:
  DrivingStateTracker(double dt, TrackerConfig config = {});

  void reset(double ego_speed);
  const GaussianEstimate& estimate() const noexcept { return estimate_; }
  bool has_target() const noexcept { return has_target_; }

  void predict();
  void update(const SensorFrame& frame);
  /// predict() then update().
  const GaussianEstimate& step(const SensorFrame& frame);

  TransitionModel transition() const;

 private:
  void apply(const Eigen::VectorXd& z, const ObservationModel& model, bool nonlinear);
  void mark_lost();

  double dt_;
  TrackerConfig config_;
  GaussianEstimate estimate_;
  bool has_target_ = false;
};

/// Static inverse-variance fusion of the distance returns in a frame.
/// nullopt when no sensor has a valid return.
std::optional<ScalarEstimate> fuse_distance_snapshot(const SensorFrame& frame);

/// Normalized distance weights for [camera, lidar, radar] under a weather.
std::array<double, 3> distance_weights(const SensorSuite& sensors, const WeatherCondition& weather);

}  // namespace edgeav
