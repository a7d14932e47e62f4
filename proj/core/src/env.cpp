#include "edgeav/env.hpp"

#include <algorithm>

#include "edgeav/errors.hpp"

namespace edgeav {

using namespace state_index;

void EnvConfig::validate() const {
  scenario.validate();
  sensors.validate();
  tracker.validate();
  reward.validate();
}

nn::Vector encode_state(const GaussianEstimate& estimate, const WeatherCondition& weather,
                        const EpisodeConfig& scenario) {
  if (estimate.dim() != kDim) throw ShapeError("encode_state: estimate must have 4 components");
  nn::Vector s(kStateDim, 0.0);
  s[0] = std::clamp(estimate.mean[kDistance], -50.0, 200.0) / 100.0;
  s[1] = std::clamp(estimate.mean[kClosing], -40.0, 40.0) / 20.0;
  s[2] = estimate.mean[kLateral] / scenario.lane_half_width;
  s[3] = estimate.mean[kSpeed] / scenario.v_max;
  s[4 + static_cast<std::size_t>(weather.index())] = 1.0;
  return s;
}

double step_reward(const StepOutcome& outcome, Action action, const RewardWeights& weights) {
  double r = 0.0;
  if (outcome.collided) {
    r += weights.collision;
  } else if (outcome.lane_departed) {
    r += weights.departure;
  } else {
    r += weights.alive;
  }
  if (!outcome.collided) r += weights.progress * outcome.progressed_m;
  if (is_steering(action)) r += weights.steering;
  return r;
}

DrivingEnv::DrivingEnv(EnvConfig config)
    : config_(std::move(config)), tracker_(config_.scenario.dt, config_.tracker) {
  config_.validate();
}

nn::Vector DrivingEnv::observe_after_predict(bool predict) {
  frame_ = sense_all(config_.sensors, world_);
  if (predict) {
    tracker_.step(frame_);
  } else {
    tracker_.update(frame_);
  }
  return encode_state(tracker_.estimate(), world_.weather, config_.scenario);
}

nn::Vector DrivingEnv::reset(const WeatherCondition& weather, std::uint64_t seed) {
  EpisodeConfig cfg = config_.scenario;
  cfg.weather = weather;
  world_ = spawn_scenario(cfg, seed);
  tracker_.reset(world_.ego.v);
  return observe_after_predict(false);
}

DrivingEnv::Step DrivingEnv::step(Action action) {
  StepResult result = step_world(world_, action, config_.scenario.dt);
  world_ = std::move(result.state);
  Step out;
  out.outcome = result.outcome;
  out.reward = step_reward(result.outcome, action, config_.reward);
  out.state = observe_after_predict(true);
  return out;
}

}  // namespace edgeav
