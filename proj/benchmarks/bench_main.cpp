#include <benchmark/benchmark.h>

#include "edgeav/bench.hpp"
#include "edgeav/fusion.hpp"
#include "edgeav/quantize.hpp"
#include "edgeav/train.hpp"

using namespace edgeav;

namespace {

nn::Mlp qnet() {
  Rng rng(1);
  return make_qnetwork(kStateDim, kNumActions, AgentConfig{}, rng);
}

void BM_KalmanUpdate(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  GaussianEstimate est{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
  const ObservationModel model =
      ObservationModel::linear(Eigen::MatrixXd::Identity(1, n), Eigen::MatrixXd::Constant(1, 1, 0.5));
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(kalman_update(est, z, model));
}
BENCHMARK(BM_KalmanUpdate)->Arg(1)->Arg(4)->Arg(8);

void BM_MlpForward(benchmark::State& state) {
  const nn::Mlp net = qnet();
  const nn::Vector x(kStateDim, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_MlpForward);

void BM_QuantizedForward(benchmark::State& state) {
  const nn::QuantizedMlp net = nn::quantize_model(qnet());
  const nn::Vector x(kStateDim, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_QuantizedForward);

void BM_TrainStep(benchmark::State& state) {
  nn::Mlp net = qnet();
  const nn::Mlp target = net;
  std::vector<Transition> items(64, Transition{nn::Vector(kStateDim, 0.2), 1, 1.0, nn::Vector(kStateDim, 0.1), false});
  std::vector<const Transition*> batch;
  for (const Transition& t : items) batch.push_back(&t);
  const AgentConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(net, target, batch, cfg));
}
BENCHMARK(BM_TrainStep);

void BM_PipelineEpisode(benchmark::State& state) {
  const PipelineConfig config;
  const nn::Mlp net = qnet();
  const auto mode = static_cast<DeploymentMode>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_pipeline_episode(config, {&net}, {}, mode, WeatherCondition(WeatherKind::Fog, 1.0), ++seed));
  }
}
BENCHMARK(BM_PipelineEpisode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
