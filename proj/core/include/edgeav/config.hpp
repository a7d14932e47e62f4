#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "edgeav/agent.hpp"
#include "edgeav/bench.hpp"
#include "edgeav/perception.hpp"
#include "edgeav/train.hpp"

namespace edgeav {

/// Environment variable naming the config file used when none is given.
inline constexpr const char* kConfigEnvVar = "EDGEAV_CONFIG";

struct PerceptionConfig {
  int train_frames = 200;
  int eval_frames = 100;
  ClassifierTraining training;
  double prune_fraction = 0.3;
};

/// One experiment: every section has embedded defaults, so "{}" is a valid
/// configuration.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  int threads = 1;

  /// Scenario, sensors, fusion, latency models and perception thresholds.
  /// pipeline.env.reward mirrors agent.reward after parsing.
  PipelineConfig pipeline;
  AgentConfig agent;
  TrainConfig train;
  PerceptionConfig perception;
  BenchmarkPlan benchmark;
  int evaluate_episodes = 200;

  void validate() const;
};

/// Throws ConfigError naming the dotted path of the first bad or unknown key.
RunConfig parse_run_config(const std::string& json_text);
/// A missing or unreadable file is reported as ConfigError("config", ...).
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved configuration, suitable for parse_run_config.
std::string run_config_to_json(const RunConfig& config);

}  // namespace edgeav
