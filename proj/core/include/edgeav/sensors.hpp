#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "edgeav/grid.hpp"
#include "edgeav/rng.hpp"
#include "edgeav/sim.hpp"

namespace edgeav {

enum class SensorKind : int { Camera = 0, Lidar = 1, Radar = 2 };

inline constexpr std::array<SensorKind, 3> kAllSensors = {SensorKind::Camera, SensorKind::Lidar,
                                                          SensorKind::Radar};

std::string_view to_string(SensorKind kind);
std::optional<SensorKind> parse_sensor(std::string_view name);

/// Index of each measured quantity inside Measurement::values.
///
///   Camera: [distance to nearest obstacle ahead, ego lateral offset, grid cell evidence]
///   Lidar:  [range, bearing, grid cell evidence]
///   Radar:  [range, range rate]
///
/// The grid-evidence variance is not part of Measurement::values; it is used
/// by sense_grid().
namespace quantity {
inline constexpr std::size_t kDistance = 0;
inline constexpr std::size_t kCameraLateral = 1;
inline constexpr std::size_t kCameraGrid = 2;
inline constexpr std::size_t kLidarBearing = 1;
inline constexpr std::size_t kLidarGrid = 2;
inline constexpr std::size_t kRadarRangeRate = 1;
}  // namespace quantity

struct SensorSpec {
  SensorKind kind = SensorKind::Camera;
  std::vector<double> base_variance;
  double max_range = 100.0;
  /// Indexed by WeatherKind. Clear entries are exactly 1.
  std::array<double, 4> variance_multiplier{1.0, 1.0, 1.0, 1.0};
  std::array<double, 4> range_multiplier{1.0, 1.0, 1.0, 1.0};
  /// Slope of the (1 + slope * intensity) variance growth.
  double intensity_slope = 0.5;

  static SensorSpec default_for(SensorKind kind);

  std::size_t num_quantities() const noexcept { return base_variance.size(); }
  bool has_grid() const noexcept { return kind != SensorKind::Radar; }

  void validate(std::string_view scope = "sensors") const;
};

/// One spec per SensorKind, indexed by the enum value.
struct SensorSuite {
  std::array<SensorSpec, 3> specs{SensorSpec::default_for(SensorKind::Camera),
                                  SensorSpec::default_for(SensorKind::Lidar),
                                  SensorSpec::default_for(SensorKind::Radar)};

  const SensorSpec& operator[](SensorKind kind) const { return specs[static_cast<std::size_t>(kind)]; }
  SensorSpec& operator[](SensorKind kind) { return specs[static_cast<std::size_t>(kind)]; }

  void validate() const;
};

struct Measurement {
  SensorKind sensor = SensorKind::Camera;
  std::int64_t tick = 0;
  /// Layout per sensor, see `quantity`. When `valid` is false the target
  /// quantities hold kNoReturn (NaN). The camera lateral offset comes from
  /// lane markings and is always populated.
  std::vector<double> values;
  std::vector<double> variance;
  bool valid = false;
};

/// Sentinel stored in Measurement::values for quantities without a return.
double no_return() noexcept;
bool is_no_return(double value) noexcept;

/// base_variance * multiplier(kind) * (1 + slope * intensity).
double noise_variance_for(const SensorSpec& spec, const WeatherCondition& weather,
                          std::size_t quantity = 0);

/// max_range * range_multiplier(kind).
double degrade_range(const SensorSpec& spec, const WeatherCondition& weather);

/// Noisy measurement of the nearest obstacle ahead. Noise draws come from
/// world.rng and are taken even when the target is out of range, so the
/// number of draws per call is constant.
Measurement sense(const SensorSpec& spec, WorldState& world);

/// Noise-free values in the same layout as sense(); nullopt when no
/// obstacle is ahead.
std::optional<std::vector<double>> true_values(SensorKind kind, const WorldState& world);

/// Occupancy evidence grid for camera or lidar. Cells beyond the degraded
/// range carry noise only. Uses the supplied generator, never world.rng.
OccupancyGrid sense_grid(const SensorSpec& spec, const WorldState& world,
                         const GridGeometry& geometry, Rng& rng);

/// Ground-truth occupancy of the grid cells (1 occupied, 0 free); a cell is
/// occupied when its center lies inside an obstacle footprint.
std::vector<std::uint8_t> truth_occupancy(const WorldState& world, const GridGeometry& geometry);

}  // namespace edgeav
