#pragma once

#include <cstdint>

#include "edgeav/agent.hpp"
#include "edgeav/sensors.hpp"
#include "edgeav/sim.hpp"
#include "edgeav/tracker.hpp"

namespace edgeav {

/// Fused mean (distance, closing, lateral, speed) plus a weather one-hot.
inline constexpr std::size_t kStateDim = 8;

struct EnvConfig {
  EpisodeConfig scenario;
  SensorSuite sensors;
  TrackerConfig tracker;
  RewardWeights reward;

  void validate() const;
};

/// Scaled state vector fed to the Q-network.
nn::Vector encode_state(const GaussianEstimate& estimate, const WeatherCondition& weather,
                        const EpisodeConfig& scenario);

/// Per-tick reward. Collision ticks get the collision penalty instead of
/// the alive bonus; departed ticks get the departure penalty instead.
double step_reward(const StepOutcome& outcome, Action action, const RewardWeights& weights);

/// Simulator, sensors and tracker behind a reset/step interface.
class DrivingEnv {
 public:
  explicit DrivingEnv(EnvConfig config);

  struct Step {
    nn::Vector state;
    double reward = 0.0;
    StepOutcome outcome;
  };

  /// New episode; returns the initial encoded state.
  nn::Vector reset(const WeatherCondition& weather, std::uint64_t seed);
  Step step(Action action);

  const WorldState& world() const noexcept { return world_; }
  const DrivingStateTracker& tracker() const noexcept { return tracker_; }
  const SensorFrame& last_frame() const noexcept { return frame_; }
  const EnvConfig& config() const noexcept { return config_; }

 private:
  nn::Vector observe_after_predict(bool predict);

  EnvConfig config_;
  WorldState world_;
  DrivingStateTracker tracker_;
  SensorFrame frame_;
};

}  // namespace edgeav
