#include "edgeav/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edgeav/errors.hpp"

namespace edgeav {

std::string_view to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::Camera: return "camera";
    case SensorKind::Lidar: return "lidar";
    case SensorKind::Radar: return "radar";
  }
  return "unknown";
}

std::optional<SensorKind> parse_sensor(std::string_view name) {
  for (SensorKind kind : kAllSensors) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

// Multipliers are ordered {Clear, Fog, Rain, Snow}. Cameras suffer most in
// fog, lidar in precipitation, radar least.
SensorSpec SensorSpec::default_for(SensorKind kind) {
  SensorSpec spec;
  spec.kind = kind;
  switch (kind) {
    case SensorKind::Camera:
      spec.base_variance = {4.0, 0.01, 0.04};
      spec.max_range = 80.0;
      spec.variance_multiplier = {1.0, 4.0, 2.5, 3.0};
      spec.range_multiplier = {1.0, 0.4, 0.7, 0.6};
      break;
    case SensorKind::Lidar:
      spec.base_variance = {0.04, 1e-4, 0.02};
      spec.max_range = 100.0;
      spec.variance_multiplier = {1.0, 2.0, 2.0, 2.5};
      spec.range_multiplier = {1.0, 0.7, 0.5, 0.5};
      break;
    case SensorKind::Radar:
      spec.base_variance = {1.0, 0.04};
      spec.max_range = 150.0;
      spec.variance_multiplier = {1.0, 1.2, 1.1, 1.3};
      spec.range_multiplier = {1.0, 0.9, 0.9, 0.8};
      break;
  }
  return spec;
}

void SensorSpec::validate(std::string_view scope) const {
  const std::string prefix = std::string(scope) + "." + std::string(to_string(kind)) + ".";
  const std::size_t expected = kind == SensorKind::Radar ? 2 : 3;
  if (base_variance.size() != expected) {
    throw ConfigError(prefix + "base_variance",
                      "expected " + std::to_string(expected) + " entries");
  }
  for (double v : base_variance) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError(prefix + "base_variance", "must be >= 0");
  }
  if (!(max_range > 0.0)) throw ConfigError(prefix + "max_range", "must be > 0");
  if (!(intensity_slope >= 0.0)) throw ConfigError(prefix + "intensity_slope", "must be >= 0");
  if (variance_multiplier[0] != 1.0) {
    throw ConfigError(prefix + "variance_multiplier.clear", "must be exactly 1");
  }
  if (range_multiplier[0] != 1.0) {
    throw ConfigError(prefix + "range_multiplier.clear", "must be exactly 1");
  }
  for (WeatherKind w : kAllWeather) {
    const auto i = static_cast<std::size_t>(w);
    if (!(variance_multiplier[i] >= 1.0)) {
      throw ConfigError(prefix + "variance_multiplier." + std::string(to_string(w)), "must be >= 1");
    }
    if (!(range_multiplier[i] > 0.0 && range_multiplier[i] <= 1.0)) {
      throw ConfigError(prefix + "range_multiplier." + std::string(to_string(w)),
                        "must lie in (0, 1]");
    }
  }
}

void SensorSuite::validate() const {
  for (SensorKind kind : kAllSensors) {
    const SensorSpec& spec = (*this)[kind];
    if (spec.kind != kind) {
      throw ConfigError("sensors." + std::string(to_string(kind)), "spec kind mismatch");
    }
    spec.validate();
  }
}

double no_return() noexcept { return std::numeric_limits<double>::quiet_NaN(); }

bool is_no_return(double value) noexcept { return std::isnan(value); }

double noise_variance_for(const SensorSpec& spec, const WeatherCondition& weather,
                          std::size_t quantity) {
  const double base = spec.base_variance.at(quantity);
  if (weather.kind() == WeatherKind::Clear) return base;
  return base * spec.variance_multiplier[static_cast<std::size_t>(weather.index())] *
         (1.0 + spec.intensity_slope * weather.intensity());
}

double degrade_range(const SensorSpec& spec, const WeatherCondition& weather) {
  return spec.max_range * spec.range_multiplier[static_cast<std::size_t>(weather.index())];
}

std::optional<std::vector<double>> true_values(SensorKind kind, const WorldState& world) {
  const Obstacle* obs = nearest_obstacle_ahead(world);
  if (obs == nullptr) return std::nullopt;
  const double dx = obs->x - world.ego.x;
  const double dy = obs->y - world.ego.y;
  switch (kind) {
    case SensorKind::Camera: return std::vector<double>{dx, world.ego.y};
    case SensorKind::Lidar: return std::vector<double>{std::hypot(dx, dy), std::atan2(dy, dx)};
    case SensorKind::Radar: return std::vector<double>{dx, obs->vx - world.ego.v};
  }
  return std::nullopt;
}

Measurement sense(const SensorSpec& spec, WorldState& world) {
  Measurement m;
  m.sensor = spec.kind;
  m.tick = world.tick;

  const std::size_t n = 2;  // measured values; the grid quantity is separate
  m.variance.resize(n);
  std::array<double, 2> noise{};
  for (std::size_t q = 0; q < n; ++q) {
    m.variance[q] = noise_variance_for(spec, world.weather, q);
    noise[q] = std::sqrt(m.variance[q]) * world.rng.standard_normal();
  }

  const auto truth = true_values(spec.kind, world);
  const double range = degrade_range(spec, world.weather);
  m.valid = truth.has_value() && (*truth)[quantity::kDistance] <= range;

  m.values.assign(n, no_return());
  if (m.valid) {
    for (std::size_t q = 0; q < n; ++q) m.values[q] = (*truth)[q] + noise[q];
  }
  if (spec.kind == SensorKind::Camera) {
    m.values[quantity::kCameraLateral] = world.ego.y + noise[quantity::kCameraLateral];
  }
  return m;
}

std::vector<std::uint8_t> truth_occupancy(const WorldState& world, const GridGeometry& geometry) {
  const OccupancyGrid frame = OccupancyGrid::empty(geometry, world.ego.x);
  std::vector<std::uint8_t> labels(geometry.cells(), 0);
  for (int row = 0; row < frame.height; ++row) {
    const double cy = frame.cell_center_y(row);
    for (int col = 0; col < frame.width; ++col) {
      const double cx = frame.cell_center_x(col);
      for (const Obstacle& obs : world.obstacles) {
        if (std::abs(cx - obs.x) <= obs.half_extent && std::abs(cy - obs.y) <= obs.half_extent) {
          labels[static_cast<std::size_t>(row * frame.width + col)] = 1;
          break;
        }
      }
    }
  }
  return labels;
}

OccupancyGrid sense_grid(const SensorSpec& spec, const WorldState& world,
                         const GridGeometry& geometry, Rng& rng) {
  if (!spec.has_grid()) throw UsageError("sense_grid: radar does not produce an occupancy grid");
  const std::size_t grid_quantity = 2;
  const double sigma = std::sqrt(noise_variance_for(spec, world.weather, grid_quantity));
  const double range = degrade_range(spec, world.weather);

  OccupancyGrid grid = OccupancyGrid::empty(geometry, world.ego.x);
  const std::vector<std::uint8_t> truth = truth_occupancy(world, geometry);
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      const auto idx = static_cast<std::size_t>(row * grid.width + col);
      const bool visible = grid.cell_center_x(col) - world.ego.x <= range;
      const double signal = visible ? static_cast<double>(truth[idx]) : 0.0;
      grid.values[idx] = std::clamp(signal + sigma * rng.standard_normal(), 0.0, 1.0);
    }
  }
  return grid;
}

}  // namespace edgeav
