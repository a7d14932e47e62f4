#include <gtest/gtest.h>

#include <cmath>

#include "edgeav/bench.hpp"
#include "edgeav/errors.hpp"
#include "edgeav/train.hpp"

using namespace edgeav;

namespace {

// Linear Q-network that brakes when the estimated centre gap is shorter than
// `headway_s` seconds of closing speed plus a 6 m margin (bodies touch at
// about 3.25 m), and otherwise maintains.
nn::Mlp headway_policy(double headway_s) {
  nn::DenseLayer l;
  l.W = nn::Matrix(kNumActions, kStateDim, 0.0);
  l.b.assign(kNumActions, -1.0);
  l.b[static_cast<std::size_t>(Action::Maintain)] = 0.0;
  const auto brake = static_cast<std::size_t>(Action::Brake);
  // State scales: gap / 100, closing / 20.
  l.W.row(brake)[0] = -100.0;
  l.W.row(brake)[1] = 20.0 * headway_s;
  l.b[brake] = 6.0;
  l.activation = nn::Activation::Linear;
  nn::Mlp m;
  m.layers.push_back(l);
  return m;
}

PipelineConfig no_jitter() {
  PipelineConfig c;
  c.edge.jitter = 0.0;
  c.cloud.jitter = 0.0;
  return c;
}

double collision_rate(const std::vector<EpisodeMetrics>& eps) {
  int n = 0;
  for (const auto& e : eps) n += e.collided ? 1 : 0;
  return 100.0 * n / static_cast<double>(eps.size());
}

}  // namespace

TEST(Latency, TableExamples) {
  Rng rng(1);
  const PipelineConfig c = no_jitter();
  EXPECT_EQ(sample_latency(c.edge, WeatherCondition(), rng), 45.0);
  EXPECT_EQ(sample_latency(c.cloud, WeatherCondition(), rng), 240.0);
  EXPECT_EQ(sample_latency(c.cloud, WeatherCondition(WeatherKind::Snow, 1.0), rng), 310.0);
  EXPECT_EQ(sample_latency(c.edge, WeatherCondition(WeatherKind::Fog, 1.0), rng), 50.0);
}

TEST(Latency, JitterStaysWithinBand) {
  const LatencyModel cloud = LatencyModel::cloud_default();
  Rng rng(2);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_latency(cloud, WeatherCondition(WeatherKind::Rain, 1.0), rng);
    EXPECT_GE(v, 290.0 * 0.9 - 1e-9);
    EXPECT_LE(v, 290.0 * 1.1 + 1e-9);
    sum += v;
  }
  EXPECT_NEAR(sum / n, 290.0, 1.0);
}

TEST(Latency, DefaultRatioAtLeastFour) {
  const PipelineConfig c;
  EXPECT_EQ(c.edge.rtt_ms, 0.0);
  for (WeatherKind w : kAllWeather) EXPECT_GE(c.cloud.mean_ms(w) / c.edge.mean_ms(w), 4.0);
}

TEST(Latency, InvalidModelNamesField) {
  LatencyModel m;
  m.rtt_ms = -1.0;
  try {
    m.validate("deployment.edge");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "deployment.edge.rtt_ms");
  }
}

TEST(DelayTicks, Examples) {
  EXPECT_EQ(delay_ticks(0.0, 0.1), 0);
  EXPECT_EQ(delay_ticks(45.0, 0.1), 1);
  EXPECT_EQ(delay_ticks(240.0, 0.1), 3);
  EXPECT_EQ(delay_ticks(300.0, 0.1), 3);
  EXPECT_EQ(delay_ticks(300.1, 0.1), 4);
  EXPECT_THROW(delay_ticks(-1.0, 0.1), DomainError);
  EXPECT_THROW(delay_ticks(10.0, 0.0), DomainError);
}

TEST(ActionQueue, PreviousActionPersistsUntilLanding) {
  ActionQueue q;
  q.submit(0, 3, Action::Brake);
  EXPECT_EQ(q.at(0), Action::Maintain);
  EXPECT_EQ(q.at(1), Action::Maintain);
  EXPECT_EQ(q.at(2), Action::Maintain);
  EXPECT_EQ(q.at(3), Action::Brake);
  EXPECT_EQ(q.pending(), 0u);
}

TEST(ActionQueue, ZeroDelayAppliesImmediately) {
  ActionQueue q(Action::Accelerate);
  q.submit(5, 0, Action::SteerLeft);
  EXPECT_EQ(q.at(5), Action::SteerLeft);
}

TEST(ActionQueue, StaleDecisionDropped) {
  ActionQueue q;
  q.submit(0, 4, Action::Brake);       // lands at 4
  q.submit(1, 1, Action::SteerLeft);   // lands at 2
  EXPECT_EQ(q.at(2), Action::SteerLeft);
  EXPECT_EQ(q.at(4), Action::SteerLeft);
  EXPECT_EQ(q.pending(), 0u);
}

TEST(Pipeline, ZeroLatencyMatchesDirectControl) {
  PipelineConfig c;
  c.edge.compute_ms = 0.0;
  c.edge.weather_penalty_ms = {0, 0, 0, 0};
  const nn::Mlp net = headway_policy(1.5);
  for (WeatherKind w : kAllWeather) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const WeatherCondition weather = weather_preset(w, 1.0);
      EpisodeOptions direct;
      direct.direct_control = true;
      const EpisodeMetrics a = run_pipeline_episode(c, {&net}, {}, DeploymentMode::Edge, weather, seed);
      const EpisodeMetrics b = run_pipeline_episode(c, {&net}, {}, DeploymentMode::Edge, weather, seed, direct);
      EXPECT_EQ(a.collided, b.collided);
      EXPECT_EQ(a.total_ticks, b.total_ticks);
      EXPECT_EQ(a.lane_departure_ticks, b.lane_departure_ticks);
      EXPECT_EQ(a.cumulative_reward, b.cumulative_reward);
      EXPECT_EQ(a.mean_latency_ms, 0.0);
    }
  }
}

TEST(Pipeline, SameSeedSameScenarioInBothModes) {
  const PipelineConfig c;
  EpisodeOptions o;
  o.fixed_delay_ticks = 0;
  const nn::Mlp net = headway_policy(1.5);
  const WeatherCondition fog(WeatherKind::Fog, 1.0);
  const EpisodeMetrics a = run_pipeline_episode(c, {&net}, {}, DeploymentMode::Edge, fog, 77, o);
  const EpisodeMetrics b = run_pipeline_episode(c, {&net}, {}, DeploymentMode::Cloud, fog, 77, o);
  EXPECT_EQ(a.total_ticks, b.total_ticks);
  EXPECT_EQ(a.cumulative_reward, b.cumulative_reward);
}

TEST(Pipeline, FixedDelayReportsLatency) {
  const PipelineConfig c;
  EpisodeOptions o;
  o.fixed_delay_ticks = 3;
  const EpisodeMetrics m = run_pipeline_episode(c, {}, {}, DeploymentMode::Edge, WeatherCondition(), 5, o);
  EXPECT_NEAR(m.mean_latency_ms, 300.0, 1e-9);
  EXPECT_GE(m.total_ticks, 1);
}

TEST(Pipeline, CloudCollidesWhereEdgeDoesNotOnSomeScenario) {
  const PipelineConfig c;
  const nn::Mlp net = headway_policy(1.0);
  bool found = false;
  for (int i = 0; i < 20 && !found; ++i) {
    const std::uint64_t seed = benchmark_episode_seed(42, WeatherKind::Clear, i);
    const EpisodeMetrics e = run_pipeline_episode(c, {&net}, {}, DeploymentMode::Edge, WeatherCondition(), seed);
    const EpisodeMetrics k = run_pipeline_episode(c, {&net}, {}, DeploymentMode::Cloud, WeatherCondition(), seed);
    found = k.collided && !e.collided;
  }
  EXPECT_TRUE(found);
}

TEST(Pipeline, CollisionRateGrowsWithDelay) {
  const PipelineConfig c;
  const nn::Mlp net = headway_policy(1.0);
  double previous = -1.0;
  for (int delay = 0; delay <= 4; ++delay) {
    BenchmarkPlan plan;
    plan.modes = {DeploymentMode::Edge};
    plan.weathers = {WeatherKind::Clear};
    plan.episodes = 200;
    plan.options.fixed_delay_ticks = delay;
    const double rate = collision_rate(run_benchmark(c, {&net}, {}, plan));
    EXPECT_GE(rate, previous) << "delay " << delay;
    previous = rate;
  }
}

TEST(Benchmark, ThreadCountDoesNotChangeResults) {
  PipelineConfig c;
  c.env.scenario.max_ticks = 80;
  const nn::Mlp net = headway_policy(1.5);
  BenchmarkPlan plan;
  plan.episodes = 3;
  plan.threads = 1;
  const auto serial = run_benchmark(c, {&net}, {}, plan);
  plan.threads = 4;
  const auto parallel = run_benchmark(c, {&net}, {}, plan);
  ASSERT_EQ(serial.size(), 24u);
  ASSERT_EQ(parallel.size(), serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_EQ(serial[i].mode, parallel[i].mode);
    EXPECT_EQ(serial[i].collided, parallel[i].collided);
    EXPECT_EQ(serial[i].cumulative_reward, parallel[i].cumulative_reward);
    EXPECT_EQ(serial[i].latency_sum_ms, parallel[i].latency_sum_ms);
  }
}

TEST(Benchmark, PlanValidation) {
  const PipelineConfig c;
  BenchmarkPlan plan;
  plan.episodes = 0;
  EXPECT_THROW(run_benchmark(c, {}, {}, plan), ConfigError);
  plan = BenchmarkPlan{};
  plan.modes.clear();
  EXPECT_THROW(run_benchmark(c, {}, {}, plan), ConfigError);
}

TEST(Modes, NamesRoundTrip) {
  for (DeploymentMode m : kAllModes) EXPECT_EQ(parse_mode(to_string(m)), m);
  EXPECT_FALSE(parse_mode("fog").has_value());
}
