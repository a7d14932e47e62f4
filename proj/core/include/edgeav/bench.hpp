#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "edgeav/env.hpp"
#include "edgeav/perception.hpp"
#include "edgeav/quantize.hpp"

namespace edgeav {

enum class DeploymentMode : int { Edge = 0, Cloud = 1 };

inline constexpr std::array<DeploymentMode, 2> kAllModes = {DeploymentMode::Edge, DeploymentMode::Cloud};

std::string_view to_string(DeploymentMode mode);
std::optional<DeploymentMode> parse_mode(std::string_view name);

/// Per-decision latency: compute + network round trip + weather penalty.
/// Each component is drawn uniformly within +-jitter of its mean and
/// clamped at 0.
struct LatencyModel {
  double compute_ms = 45.0;
  double rtt_ms = 0.0;
  std::array<double, 4> weather_penalty_ms{0.0, 5.0, 7.0, 10.0};  // by WeatherKind
  double jitter = 0.1;  // relative half-width

  static LatencyModel edge_default();
  static LatencyModel cloud_default();

  double mean_ms(WeatherKind weather) const;
  void validate(std::string_view scope) const;
};

double sample_latency(const LatencyModel& model, const WeatherCondition& weather, Rng& rng);

/// Whole ticks before a decision takes effect: ceil(latency / dt).
int delay_ticks(double latency_ms, double dt_s);

/// Decisions waiting to take effect. Until a newer decision lands the last
/// applied action repeats; a decision that lands after a newer one has
/// already been applied is dropped.
class ActionQueue {
 public:
  explicit ActionQueue(Action initial = Action::Maintain) : applied_(initial) {}

  void submit(std::int64_t decided_at, int delay, Action action);
  /// Action in force at `tick`.
  Action at(std::int64_t tick);
  std::size_t pending() const noexcept { return pending_.size(); }

 private:
  struct Entry {
    std::int64_t effective;
    std::int64_t decided;
    Action action;
  };
  std::deque<Entry> pending_;
  Action applied_;
  std::int64_t applied_decided_ = -1;
};

/// Frozen decision maker. A null network means the uniform-random policy.
struct Policy {
  const nn::Mlp* qnet = nullptr;
};

/// Cell classifier used by the perceive stage; either pointer may be null.
struct PerceptionModels {
  const nn::Mlp* full = nullptr;
  const nn::QuantizedMlp* quantized = nullptr;
};

struct PipelineConfig {
  EnvConfig env;
  LatencyModel edge = LatencyModel::edge_default();
  LatencyModel cloud = LatencyModel::cloud_default();
  /// Edge runs the int8 classifier when one is supplied.
  bool edge_uses_quantized = true;
  GridGeometry grid;
  double detection_threshold = 0.5;
  double iou_threshold = 0.5;
  double weather_intensity = 1.0;
  /// Discount used for EpisodeMetrics::cumulative_reward.
  double reward_discount = 1.0;

  const LatencyModel& latency(DeploymentMode mode) const {
    return mode == DeploymentMode::Edge ? edge : cloud;
  }
  void validate() const;
};

struct EpisodeMetrics {
  DeploymentMode mode = DeploymentMode::Edge;
  WeatherKind weather = WeatherKind::Clear;
  std::uint64_t seed = 0;
  bool collided = false;
  bool reached_goal = false;
  std::int64_t lane_departure_ticks = 0;
  std::int64_t total_ticks = 0;
  double latency_sum_ms = 0.0;
  double mean_latency_ms = 0.0;
  DetectionCounts counts;
  std::int64_t matched = 0;
  double iou_sum = 0.0;
  double mean_iou = 0.0;
  double cumulative_reward = 0.0;
};

struct EpisodeOptions {
  /// Replace sampled latency by a fixed action delay; latency is then
  /// reported as delay * dt.
  std::optional<int> fixed_delay_ticks;
  /// Zero latency, no queue: the direct-control reference.
  bool direct_control = false;
};

/// One episode of sense -> fuse -> perceive -> decide -> act. Scenario,
/// latency, perception noise and policy randomness use separate streams of
/// `seed`, so equal seeds give the same scenario in every mode.
EpisodeMetrics run_pipeline_episode(const PipelineConfig& config, const Policy& policy,
                                    const PerceptionModels& perception, DeploymentMode mode,
                                    const WeatherCondition& weather, std::uint64_t seed,
                                    const EpisodeOptions& options = {});

struct BenchmarkPlan {
  std::vector<DeploymentMode> modes{kAllModes.begin(), kAllModes.end()};
  std::vector<WeatherKind> weathers{kAllWeather.begin(), kAllWeather.end()};
  int episodes = 50;
  std::uint64_t seed = 42;
  int threads = 1;
  EpisodeOptions options;
};

/// Seed of episode `index` in a weather cell; independent of the mode.
std::uint64_t benchmark_episode_seed(std::uint64_t master, WeatherKind weather, int index);

/// Every (mode, weather, episode) of the plan, in plan order regardless of
/// the number of threads.
std::vector<EpisodeMetrics> run_benchmark(const PipelineConfig& config, const Policy& policy,
                                          const PerceptionModels& perception, const BenchmarkPlan& plan);

}  // namespace edgeav
