#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "edgeav/agent.hpp"
#include "edgeav/env.hpp"

namespace edgeav {

/// Preset used for training and benchmarking: Clear at intensity 0, the
/// other kinds at `intensity`.
WeatherCondition weather_preset(WeatherKind kind, double intensity);

struct TrainConfig {
  int episodes = 2000;
  double weather_intensity = 1.0;
  /// Kinds drawn uniformly, one per episode.
  std::vector<WeatherKind> weathers{kAllWeather.begin(), kAllWeather.end()};
  /// Discount used when reporting per-episode cumulative reward.
  double curve_discount = 1.0;
  /// Report sum gamma^(i-1) r_i instead of sum gamma^i r_i.
  bool conventional_return = false;
  /// Learning rate at the last episode as a fraction of agent.learning_rate;
  /// the rate falls linearly from the first episode. 1 keeps it constant.
  double final_lr_fraction = 1.0;

  void validate() const;
};

struct CurvePoint {
  int episode = 0;
  double cumulative_reward = 0.0;
  double epsilon = 0.0;  // value at the episode's last tick
  bool collided = false;
  int ticks = 0;
  WeatherKind weather = WeatherKind::Clear;
};

struct TrainResult {
  nn::Mlp qnet;
  std::vector<CurvePoint> curve;
  std::int64_t env_ticks = 0;
  std::int64_t train_steps = 0;
};

/// Called after each episode; used for progress output.
using EpisodeCallback = std::function<void(const CurvePoint&)>;

/// DQN training with replay and a periodically synced target network.
/// Every random draw derives from `seed`, so equal inputs give equal results.
TrainResult train_agent(const EnvConfig& env_config, const AgentConfig& agent, const TrainConfig& train,
                        std::uint64_t seed, const EpisodeCallback& on_episode = {});

/// Non-overlapping block means over the last third of a reward series and
/// whether each block is at least the previous one minus `tolerance_se`
/// standard errors of the difference.
struct TrendCheck {
  std::vector<double> block_means;
  std::vector<double> block_se;
  bool non_decreasing = false;
};

TrendCheck final_third_trend(std::span<const double> rewards, std::size_t blocks = 4,
                             double tolerance_se = 2.0);

}  // namespace edgeav
