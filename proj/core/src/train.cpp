#include "edgeav/train.hpp"

#include <cmath>
#include <numeric>

#include "edgeav/errors.hpp"

namespace edgeav {

WeatherCondition weather_preset(WeatherKind kind, double intensity) {
  return {kind, kind == WeatherKind::Clear ? 0.0 : intensity};
}

void TrainConfig::validate() const {
  if (episodes < 0) throw ConfigError("train.episodes", "must be >= 0");
  if (!(weather_intensity >= 0.0 && weather_intensity <= 1.0)) {
    throw ConfigError("train.weather_intensity", "must be in [0, 1]");
  }
  if (weathers.empty()) throw ConfigError("train.weathers", "must list at least one weather");
  if (!(curve_discount >= 0.0 && curve_discount <= 1.0)) {
    throw ConfigError("train.curve_discount", "must be in [0, 1]");
  }
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    throw ConfigError("train.final_lr_fraction", "must be in (0, 1]");
  }
}

TrainResult train_agent(const EnvConfig& env_config, const AgentConfig& agent, const TrainConfig& train,
                        std::uint64_t seed, const EpisodeCallback& on_episode) {
  agent.validate();
  train.validate();
  DrivingEnv env(env_config);

  Rng init_rng(derive_seed(seed, stream::kModelInit));
  TrainResult result;
  result.qnet = make_qnetwork(kStateDim, kNumActions, agent, init_rng);
  nn::Mlp target = result.qnet;
  ReplayBuffer replay(agent.replay_capacity, derive_seed(seed, stream::kReplay));
  Rng explore(derive_seed(seed, stream::kExploration));
  Rng weather_rng(derive_seed(seed, stream::kWeather));

  std::vector<double> rewards;
  AgentConfig step_config = agent;
  for (int ep = 0; ep < train.episodes; ++ep) {
    const double progress = train.episodes > 1 ? static_cast<double>(ep) / (train.episodes - 1) : 0.0;
    step_config.learning_rate = agent.learning_rate * (1.0 - (1.0 - train.final_lr_fraction) * progress);
    const auto pick = static_cast<std::size_t>(weather_rng.uniform_int(0, static_cast<int>(train.weathers.size()) - 1));
    const WeatherCondition weather = weather_preset(train.weathers[pick], train.weather_intensity);
    nn::Vector state = env.reset(weather, derive_seed(seed, stream::kTrainEpisode, static_cast<std::uint64_t>(ep)));

    rewards.clear();
    CurvePoint point;
    point.episode = ep;
    point.weather = weather.kind();
    bool done = false;
    while (!done) {
      point.epsilon = agent.epsilon.at(result.env_ticks);
      const int a = select_action(result.qnet.forward(state), point.epsilon, explore);
      DrivingEnv::Step step = env.step(static_cast<Action>(a));
      done = step.outcome.done;
      const bool terminal = step.outcome.collided || step.outcome.reached_goal;
      rewards.push_back(step.reward);
      point.collided = point.collided || step.outcome.collided;
      replay.push({state, a, step.reward, step.state, terminal});
      state = std::move(step.state);
      ++result.env_ticks;

      if (replay.size() >= agent.warmup && result.env_ticks % agent.train_every == 0) {
        const std::vector<const Transition*> batch = replay.sample(agent.batch_size);
        const double loss = train_step(result.qnet, target, batch, step_config);
        if (!std::isfinite(loss)) {
          throw NumericalError("training diverged (non-finite loss) in episode " + std::to_string(ep));
        }
        ++result.train_steps;
        if (result.train_steps % agent.target_sync == 0) target = result.qnet;
      }
    }
    point.ticks = static_cast<int>(rewards.size());
    point.cumulative_reward = cumulative_reward(rewards, train.curve_discount, train.conventional_return);
    result.curve.push_back(point);
    if (on_episode) on_episode(point);
  }
  return result;
}

TrendCheck final_third_trend(std::span<const double> rewards, std::size_t blocks, double tolerance_se) {
  if (blocks < 2) throw DomainError("final_third_trend: need at least two blocks");
  const std::size_t start = rewards.size() - rewards.size() / 3;
  const std::size_t len = (rewards.size() - start) / blocks;
  if (len < 2) throw UndefinedMetricError("final_third_trend: series too short for the block count");

  TrendCheck check;
  for (std::size_t b = 0; b < blocks; ++b) {
    // Blocks are aligned to the end of the series.
    const std::size_t first = rewards.size() - (blocks - b) * len;
    const auto block = rewards.subspan(first, len);
    const double mean = std::accumulate(block.begin(), block.end(), 0.0) / static_cast<double>(len);
    double ss = 0.0;
    for (double r : block) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / static_cast<double>(len - 1));
    check.block_means.push_back(mean);
    check.block_se.push_back(sd / std::sqrt(static_cast<double>(len)));
  }
  check.non_decreasing = true;
  for (std::size_t b = 1; b < blocks; ++b) {
    const double se = std::hypot(check.block_se[b], check.block_se[b - 1]);
    if (check.block_means[b] < check.block_means[b - 1] - tolerance_se * se) check.non_decreasing = false;
  }
  return check;
}

}  // namespace edgeav
