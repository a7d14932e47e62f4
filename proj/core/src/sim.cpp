#include "edgeav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edgeav/errors.hpp"

namespace edgeav {

std::string_view to_string(WeatherKind kind) {
  switch (kind) {
    case WeatherKind::Clear: return "clear";
    case WeatherKind::Fog: return "fog";
    case WeatherKind::Rain: return "rain";
    case WeatherKind::Snow: return "snow";
  }
  return "unknown";
}

std::optional<WeatherKind> parse_weather(std::string_view name) {
  for (WeatherKind kind : kAllWeather) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

WeatherCondition::WeatherCondition(WeatherKind kind, double intensity) : kind_(kind) {
  if (!std::isfinite(intensity) || intensity < 0.0 || intensity > 1.0) {
    throw ConfigError("weather.intensity", "must lie in [0, 1], got " + std::to_string(intensity));
  }
  intensity_ = kind == WeatherKind::Clear ? 0.0 : intensity;
}

std::string_view to_string(Action action) {
  switch (action) {
    case Action::SteerLeft: return "steer_left";
    case Action::SteerRight: return "steer_right";
    case Action::Maintain: return "maintain";
    case Action::Accelerate: return "accelerate";
    case Action::Brake: return "brake";
  }
  return "unknown";
}

bool is_steering(Action action) noexcept {
  return action == Action::SteerLeft || action == Action::SteerRight;
}

namespace {

void require(bool ok, std::string_view scope, const char* field, const char* what) {
  if (!ok) throw ConfigError(std::string(scope) + "." + field, what);
}

}  // namespace

void EpisodeConfig::validate(std::string_view scope) const {
  require(std::isfinite(dt) && dt > 0.0, scope, "dt", "must be > 0");
  require(max_ticks >= 1, scope, "max_ticks", "must be >= 1");
  require(std::isfinite(lane_half_width) && lane_half_width > 0.0, scope, "lane_half_width",
          "must be > 0");
  require(road_length > 0.0, scope, "road_length", "must be > 0");
  require(num_obstacles >= 0, scope, "num_obstacles", "must be >= 0");
  require(spawn_x_min <= spawn_x_max, scope, "spawn_x_min", "must be <= spawn_x_max");
  require(spawn_y_spread >= 0.0, scope, "spawn_y_spread", "must be >= 0");
  require(obstacle_speed_min >= 0.0, scope, "obstacle_speed_min", "must be >= 0");
  require(obstacle_speed_min <= obstacle_speed_max, scope, "obstacle_speed_max",
          "must be >= obstacle_speed_min");
  require(obstacle_half_extent > 0.0, scope, "obstacle_half_extent", "must be > 0");
  require(v_max > 0.0, scope, "v_max", "must be > 0");
  require(ego_speed >= 0.0 && ego_speed <= v_max, scope, "ego_speed", "must lie in [0, v_max]");
  require(ego.half_length > 0.0, scope, "ego_half_length", "must be > 0");
  require(ego.half_width > 0.0, scope, "ego_half_width", "must be > 0");
  require(lateral_rate >= 0.0, scope, "lateral_rate", "must be >= 0");
  require(accel >= 0.0, scope, "accel", "must be >= 0");
  require(brake_decel >= 0.0, scope, "brake_decel", "must be >= 0");
}

bool operator==(const WorldState& a, const WorldState& b) {
  return a.tick == b.tick && a.time_s == b.time_s && a.ego == b.ego && a.obstacles == b.obstacles &&
         a.weather == b.weather && a.lane_half_width == b.lane_half_width && a.rng == b.rng &&
         a.done == b.done;
}

WorldState spawn_scenario(const EpisodeConfig& config, std::uint64_t seed) {
  config.validate();
  WorldState world;
  world.config = config;
  world.weather = config.weather;
  world.lane_half_width = config.lane_half_width;
  world.rng = Rng(seed);
  world.ego = VehicleState{0.0, 0.0, config.ego_speed, 0.0};

  world.obstacles.reserve(static_cast<std::size_t>(config.num_obstacles));
  for (int i = 0; i < config.num_obstacles; ++i) {
    Obstacle obs;
    obs.id = i;
    obs.x = world.rng.uniform(config.spawn_x_min, config.spawn_x_max);
    obs.y = world.rng.uniform(-config.spawn_y_spread, config.spawn_y_spread);
    obs.vx = world.rng.uniform(config.obstacle_speed_min, config.obstacle_speed_max);
    obs.half_extent = config.obstacle_half_extent;
    world.obstacles.push_back(obs);
  }
  return world;
}

double action_acceleration(const EpisodeConfig& config, Action action) noexcept {
  switch (action) {
    case Action::Accelerate: return config.accel;
    case Action::Brake: return -config.brake_decel;
    default: return 0.0;
  }
}

double action_lateral_rate(const EpisodeConfig& config, Action action) noexcept {
  switch (action) {
    case Action::SteerLeft: return config.lateral_rate;
    case Action::SteerRight: return -config.lateral_rate;
    default: return 0.0;
  }
}

StepResult step_world(const WorldState& state, Action action, double dt) {
  if (state.done) throw UsageError("step_world: episode is already done");
  if (!(dt > 0.0)) throw DomainError("step_world: dt must be > 0");

  const EpisodeConfig& cfg = state.config;
  StepResult result{state, {}};
  WorldState& next = result.state;

  VehicleState& ego = next.ego;
  const double lateral = action_lateral_rate(cfg, action);
  ego.v = std::clamp(ego.v + action_acceleration(cfg, action) * dt, 0.0, cfg.v_max);
  ego.x += ego.v * dt;
  ego.y += lateral * dt;
  ego.heading = (lateral == 0.0 && ego.v == 0.0) ? 0.0 : std::atan2(lateral, ego.v);

  for (Obstacle& obs : next.obstacles) obs.x += obs.vx * dt;

  next.tick = state.tick + 1;
  next.time_s = static_cast<double>(next.tick) * dt;

  StepOutcome& out = result.outcome;
  out.progressed_m = ego.v * dt;
  out.collided = detect_collision(ego, next.obstacles, cfg.ego);
  out.lane_departed = detect_lane_departure(ego, next.lane_half_width);
  out.reached_goal = !out.collided && ego.x >= cfg.road_length;
  out.done = out.collided || out.reached_goal || next.tick >= cfg.max_ticks;
  next.done = out.done;
  return result;
}

bool detect_collision(const VehicleState& ego, std::span<const Obstacle> obstacles,
                      const Footprint& footprint) {
  return std::any_of(obstacles.begin(), obstacles.end(), [&](const Obstacle& obs) {
    return std::abs(obs.x - ego.x) <= obs.half_extent + footprint.half_length &&
           std::abs(obs.y - ego.y) <= obs.half_extent + footprint.half_width;
  });
}

bool detect_lane_departure(const VehicleState& ego, double lane_half_width) {
  return std::abs(ego.y) > lane_half_width;
}

const Obstacle* nearest_obstacle_ahead(const WorldState& world) {
  const Obstacle* best = nullptr;
  for (const Obstacle& obs : world.obstacles) {
    const double dx = obs.x - world.ego.x;
    // Still relevant while the bodies can overlap longitudinally.
    if (dx < -(obs.half_extent + world.config.ego.half_length)) continue;
    if (best == nullptr || dx < best->x - world.ego.x) best = &obs;
  }
  return best;
}

}  // namespace edgeav
