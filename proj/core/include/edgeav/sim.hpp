#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "edgeav/rng.hpp"

namespace edgeav {

enum class WeatherKind : int { Clear = 0, Fog = 1, Rain = 2, Snow = 3 };

inline constexpr std::array<WeatherKind, 4> kAllWeather = {
    WeatherKind::Clear, WeatherKind::Fog, WeatherKind::Rain, WeatherKind::Snow};

std::string_view to_string(WeatherKind kind);
std::optional<WeatherKind> parse_weather(std::string_view name);

/// Weather preset with an intensity in [0, 1]. Clear always has intensity 0.
class WeatherCondition {
 public:
  constexpr WeatherCondition() = default;
  /// Throws ConfigError when intensity is outside [0, 1] or not finite.
  WeatherCondition(WeatherKind kind, double intensity);

  static WeatherCondition clear() { return {}; }

  WeatherKind kind() const noexcept { return kind_; }
  double intensity() const noexcept { return intensity_; }
  int index() const noexcept { return static_cast<int>(kind_); }

  friend bool operator==(const WeatherCondition&, const WeatherCondition&) = default;

 private:
  WeatherKind kind_ = WeatherKind::Clear;
  double intensity_ = 0.0;
};

/// Discrete control actions, in the fixed order used by the Q-network.
enum class Action : int { SteerLeft = 0, SteerRight = 1, Maintain = 2, Accelerate = 3, Brake = 4 };

inline constexpr int kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::SteerLeft, Action::SteerRight, Action::Maintain, Action::Accelerate, Action::Brake};

std::string_view to_string(Action action);
bool is_steering(Action action) noexcept;

struct VehicleState {
  double x = 0.0;        // longitudinal position (m)
  double y = 0.0;        // lateral offset from lane center (m), left positive
  double v = 0.0;        // speed (m/s), >= 0
  double heading = 0.0;  // radians, |heading| <= pi

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct Obstacle {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double half_extent = 1.0;

  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

/// Axis-aligned half sizes of the ego body.
struct Footprint {
  double half_length = 2.25;
  double half_width = 0.9;
};

struct EpisodeConfig {
  double dt = 0.1;
  int max_ticks = 600;
  double lane_half_width = 1.75;
  /// Episode ends successfully once the ego passes this longitudinal mark.
  double road_length = 1000.0;

  int num_obstacles = 6;
  double spawn_x_min = 40.0;
  double spawn_x_max = 900.0;
  double spawn_y_spread = 0.3;
  double obstacle_speed_min = 0.0;
  double obstacle_speed_max = 8.0;
  double obstacle_half_extent = 1.0;

  double ego_speed = 15.0;
  double v_max = 25.0;
  Footprint ego;
  double lateral_rate = 1.0;  // m/s while steering
  double accel = 3.0;         // m/s^2
  double brake_decel = 6.0;   // m/s^2

  WeatherCondition weather;

  /// Throws ConfigError naming the offending field (prefixed with `scope`).
  void validate(std::string_view scope = "scenario") const;
};

struct WorldState {
  std::int64_t tick = 0;
  double time_s = 0.0;
  VehicleState ego;
  std::vector<Obstacle> obstacles;
  WeatherCondition weather;
  double lane_half_width = 1.75;
  Rng rng;
  bool done = false;
  EpisodeConfig config;

  friend bool operator==(const WorldState& a, const WorldState& b);
};

struct StepOutcome {
  bool collided = false;
  bool lane_departed = false;
  double progressed_m = 0.0;
  bool done = false;
  /// True when the episode ended by reaching the end of the road.
  bool reached_goal = false;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct StepResult {
  WorldState state;
  StepOutcome outcome;
};

/// Reproducible initial world: identical (config, seed) gives identical state.
WorldState spawn_scenario(const EpisodeConfig& config, std::uint64_t seed);

/// Advance one tick. Throws UsageError if the episode is already done and
/// DomainError if dt <= 0.
StepResult step_world(const WorldState& state, Action action, double dt);

bool detect_collision(const VehicleState& ego, std::span<const Obstacle> obstacles,
                      const Footprint& footprint = {});

/// Departure is strictly outside the lane: |y| > lane_half_width.
bool detect_lane_departure(const VehicleState& ego, double lane_half_width);

/// Nearest obstacle that the ego has not yet passed, if any.
const Obstacle* nearest_obstacle_ahead(const WorldState& world);

double action_acceleration(const EpisodeConfig& config, Action action) noexcept;
double action_lateral_rate(const EpisodeConfig& config, Action action) noexcept;

}  // namespace edgeav
