#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgeav/bench.hpp"
#include "edgeav/train.hpp"

namespace edgeav {

/// (TP + TN) / (TP + TN + FP + FN) * 100. Throws UndefinedMetricError when
/// all counts are zero.
double compute_accuracy(const DetectionCounts& counts);
/// collisions / runs * 100; runs must be >= 1.
double compute_collision_rate(std::int64_t collisions, std::int64_t runs);
/// departure_ticks / total_ticks * 100; total_ticks must be >= 1.
double compute_lane_departure_rate(std::int64_t departure_ticks, std::int64_t total_ticks);

struct CellReport {
  DeploymentMode mode = DeploymentMode::Edge;
  WeatherKind weather = WeatherKind::Clear;
  std::int64_t episodes = 0;
  std::int64_t collisions = 0;
  std::int64_t total_ticks = 0;
  std::int64_t lane_departure_ticks = 0;
  DetectionCounts counts;
  /// Empty when the run had no perception stage.
  std::optional<double> accuracy_pct;
  double mean_latency_ms = 0.0;  // over all decisions in the cell
  double collision_rate_pct = 0.0;
  double lane_departure_rate_pct = 0.0;  // pooled over ticks
  double mean_iou = 0.0;                 // over matched detections
  double mean_cumulative_reward = 0.0;
};

struct BenchmarkReport {
  std::vector<CellReport> cells;
  std::int64_t total_episodes = 0;

  /// Throws MissingCellError when the cell is absent.
  const CellReport& cell(DeploymentMode mode, WeatherKind weather) const;
};

using CellKey = std::pair<DeploymentMode, WeatherKind>;

/// Groups episodes by (mode, weather) and reduces each group in a fixed
/// order, so the report does not depend on the input order. Cells appear in
/// `requested` order; a requested cell without episodes throws
/// MissingCellError. Episodes of unrequested cells are ignored.
BenchmarkReport aggregate_report(std::span<const EpisodeMetrics> episodes, std::span<const CellKey> requested);

/// Provenance recorded next to the metrics. Contains no wall-clock data.
struct ReportMetadata {
  std::uint64_t seed = 0;
  int episodes_per_cell = 0;
  std::string policy;  // "trained" or "random"
  std::string tool_version;
};

std::string report_to_json(const BenchmarkReport& report, const ReportMetadata& metadata);
std::string episodes_to_csv(std::span<const EpisodeMetrics> episodes);
std::string curve_to_csv(std::span<const CurvePoint> curve);

/// Throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace edgeav
