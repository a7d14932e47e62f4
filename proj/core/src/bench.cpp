#include "edgeav/bench.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <string>
#include <thread>

#include "edgeav/agent.hpp"
#include "edgeav/errors.hpp"
#include "edgeav/train.hpp"

namespace edgeav {

std::string_view to_string(DeploymentMode mode) {
  switch (mode) {
    case DeploymentMode::Edge: return "edge";
    case DeploymentMode::Cloud: return "cloud";
  }
  return "unknown";
}

std::optional<DeploymentMode> parse_mode(std::string_view name) {
  for (DeploymentMode m : kAllModes) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

LatencyModel LatencyModel::edge_default() { return {}; }

LatencyModel LatencyModel::cloud_default() {
  LatencyModel m;
  m.compute_ms = 40.0;
  m.rtt_ms = 200.0;
  m.weather_penalty_ms = {0.0, 30.0, 50.0, 70.0};
  return m;
}

double LatencyModel::mean_ms(WeatherKind weather) const {
  return compute_ms + rtt_ms + weather_penalty_ms[static_cast<std::size_t>(weather)];
}

void LatencyModel::validate(std::string_view scope) const {
  const std::string s(scope);
  if (!(compute_ms >= 0.0 && std::isfinite(compute_ms))) throw ConfigError(s + ".compute_ms", "must be >= 0");
  if (!(rtt_ms >= 0.0 && std::isfinite(rtt_ms))) throw ConfigError(s + ".rtt_ms", "must be >= 0");
  for (WeatherKind k : kAllWeather) {
    const double p = weather_penalty_ms[static_cast<std::size_t>(k)];
    if (!(p >= 0.0 && std::isfinite(p))) {
      throw ConfigError(s + ".weather_penalty_ms." + std::string(to_string(k)), "must be >= 0");
    }
  }
  if (!(jitter >= 0.0 && jitter <= 1.0)) throw ConfigError(s + ".jitter", "must be in [0, 1]");
}

double sample_latency(const LatencyModel& model, const WeatherCondition& weather, Rng& rng) {
  auto draw = [&](double mean) {
    // Always consume one draw so the stream does not depend on the means.
    const double u = rng.uniform(-1.0, 1.0);
    return std::max(0.0, mean * (1.0 + model.jitter * u));
  };
  const double compute = draw(model.compute_ms);
  const double rtt = draw(model.rtt_ms);
  const double penalty = draw(model.weather_penalty_ms[static_cast<std::size_t>(weather.index())]);
  return compute + rtt + penalty;
}

int delay_ticks(double latency_ms, double dt_s) {
  if (!(dt_s > 0.0)) throw DomainError("delay_ticks: dt must be > 0");
  if (!(latency_ms >= 0.0)) throw DomainError("delay_ticks: latency must be >= 0");
  // The small slack keeps exact multiples such as 300 ms / 100 ms at 3.
  return static_cast<int>(std::ceil(latency_ms / (dt_s * 1000.0) - 1e-9));
}

void ActionQueue::submit(std::int64_t decided_at, int delay, Action action) {
  if (delay < 0) throw DomainError("ActionQueue: negative delay");
  pending_.push_back({decided_at + delay, decided_at, action});
}

Action ActionQueue::at(std::int64_t tick) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (it->effective <= tick) {
      if (it->decided > applied_decided_) {
        applied_decided_ = it->decided;
        applied_ = it->action;
      }
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  return applied_;
}

void PipelineConfig::validate() const {
  env.validate();
  edge.validate("deployment.edge");
  cloud.validate("deployment.cloud");
  if (grid.width <= 0 || grid.height <= 0 || !(grid.cell_size > 0.0)) {
    throw ConfigError("deployment.grid", "width, height and cell_size must be > 0");
  }
  if (!(detection_threshold >= 0.0 && detection_threshold <= 1.0)) {
    throw ConfigError("deployment.detection_threshold", "must be in [0, 1]");
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ConfigError("deployment.iou_threshold", "must be in (0, 1]");
  }
  if (!(weather_intensity >= 0.0 && weather_intensity <= 1.0)) {
    throw ConfigError("deployment.weather_intensity", "must be in [0, 1]");
  }
  if (!(reward_discount >= 0.0 && reward_discount <= 1.0)) {
    throw ConfigError("deployment.reward_discount", "must be in [0, 1]");
  }
}

EpisodeMetrics run_pipeline_episode(const PipelineConfig& config, const Policy& policy,
                                    const PerceptionModels& perception, DeploymentMode mode,
                                    const WeatherCondition& weather, std::uint64_t seed,
                                    const EpisodeOptions& options) {
  DrivingEnv env(config.env);
  Rng latency_rng(derive_seed(seed, stream::kLatency));
  Rng perception_rng(derive_seed(seed, stream::kPerceptionNoise));
  Rng policy_rng(derive_seed(seed, stream::kExploration));
  const LatencyModel& latency_model = config.latency(mode);
  const double dt = config.env.scenario.dt;

  const nn::QuantizedMlp* int8_model =
      (mode == DeploymentMode::Edge && config.edge_uses_quantized) ? perception.quantized : nullptr;
  const nn::Mlp* float_model = int8_model != nullptr ? nullptr : perception.full;
  if (int8_model == nullptr && float_model == nullptr) int8_model = perception.quantized;

  EpisodeMetrics m;
  m.mode = mode;
  m.weather = weather.kind();
  m.seed = seed;

  nn::Vector state = env.reset(weather, derive_seed(seed, stream::kScenario));
  ActionQueue queue;
  std::vector<double> rewards;
  bool done = false;
  while (!done) {
    const WorldState& world = env.world();
    if (float_model != nullptr || int8_model != nullptr) {
      const OccupancyGrid grid = sense_fused_grid(config.env.sensors, world, config.grid, perception_rng);
      const std::vector<double> scores =
          float_model != nullptr ? score_cells(*float_model, grid) : score_cells(*int8_model, grid);
      const std::vector<Label> labels = threshold_scores(scores, config.detection_threshold);
      const MatchResult frame = evaluate_frame(labels, truth_occupancy(world, config.grid), grid,
                                               config.iou_threshold);
      m.counts += frame.counts;
      m.matched += static_cast<std::int64_t>(frame.matches.size());
      m.iou_sum += frame.iou_sum;
    }

    int decision = 0;
    if (policy.qnet != nullptr) {
      decision = argmax(policy.qnet->forward(state));
    } else {
      decision = policy_rng.uniform_int(0, kNumActions - 1);
    }

    Action applied = static_cast<Action>(decision);
    if (!options.direct_control) {
      double latency = 0.0;
      int delay = 0;
      if (options.fixed_delay_ticks) {
        delay = *options.fixed_delay_ticks;
        latency = delay * dt * 1000.0;
      } else {
        latency = sample_latency(latency_model, weather, latency_rng);
        delay = delay_ticks(latency, dt);
      }
      m.latency_sum_ms += latency;
      queue.submit(world.tick, delay, applied);
      applied = queue.at(world.tick);
    }

    const DrivingEnv::Step step = env.step(applied);
    state = step.state;
    rewards.push_back(step.reward);
    ++m.total_ticks;
    if (step.outcome.lane_departed) ++m.lane_departure_ticks;
    m.collided = m.collided || step.outcome.collided;
    m.reached_goal = step.outcome.reached_goal;
    done = step.outcome.done;
  }
  m.mean_latency_ms = m.latency_sum_ms / static_cast<double>(m.total_ticks);
  m.mean_iou = m.matched > 0 ? m.iou_sum / static_cast<double>(m.matched) : 0.0;
  m.cumulative_reward = cumulative_reward(rewards, config.reward_discount);
  return m;
}

std::uint64_t benchmark_episode_seed(std::uint64_t master, WeatherKind weather, int index) {
  return derive_seed(derive_seed(master, stream::kBenchEpisode, static_cast<std::uint64_t>(weather)),
                     stream::kBenchEpisode, static_cast<std::uint64_t>(index));
}

std::vector<EpisodeMetrics> run_benchmark(const PipelineConfig& config, const Policy& policy,
                                          const PerceptionModels& perception, const BenchmarkPlan& plan) {
  config.validate();
  if (plan.episodes < 1) throw ConfigError("benchmark.episodes", "must be >= 1");
  if (plan.modes.empty()) throw ConfigError("benchmark.modes", "must list at least one mode");
  if (plan.weathers.empty()) throw ConfigError("benchmark.weathers", "must list at least one weather");

  struct Task {
    DeploymentMode mode;
    WeatherKind weather;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (DeploymentMode mode : plan.modes) {
    for (WeatherKind w : plan.weathers) {
      for (int e = 0; e < plan.episodes; ++e) tasks.push_back({mode, w, benchmark_episode_seed(plan.seed, w, e)});
    }
  }

  std::vector<EpisodeMetrics> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      results[i] = run_pipeline_episode(config, policy, perception, t.mode,
                                        weather_preset(t.weather, config.weather_intensity), t.seed,
                                        plan.options);
    }
  };
  const int threads = std::max(1, plan.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        try {
          worker();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = tasks.size();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return results;
}

}  // namespace edgeav
