#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "edgeav/grid.hpp"
#include "edgeav/nn.hpp"
#include "edgeav/quantize.hpp"
#include "edgeav/sensors.hpp"

namespace edgeav {

enum class Label : std::uint8_t { Free = 0, Obstacle = 1 };

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
  BoundingBox box;
  double score = 0.0;  // highest cell score inside the component
  Label label = Label::Obstacle;
};

/// Cell plus its 8 neighbours.
inline constexpr std::size_t kPatchSize = 9;

/// Row-major 3x3 neighbourhood of a cell; cells outside the grid read 0.
std::vector<double> cell_patch(const OccupancyGrid& grid, int col, int row);

/// Per-cell classifier outputs in grid order. Throws ShapeError unless the
/// model maps kPatchSize inputs to one output.
std::vector<double> score_cells(const nn::Mlp& model, const OccupancyGrid& grid);
std::vector<double> score_cells(const nn::QuantizedMlp& model, const OccupancyGrid& grid);

/// Obstacle iff score > threshold.
std::vector<Label> threshold_scores(std::span<const double> scores, double threshold);
std::vector<Label> classify_cells(const nn::Mlp& model, const OccupancyGrid& grid, double threshold);

/// 4-connected Obstacle components as tight boxes in world meters, ordered
/// by their first cell in row-major scan.
std::vector<BoundingBox> boxes_from_labels(std::span<const Label> labels, const OccupancyGrid& geometry);

/// Boxes with the best cell score of each component.
std::vector<Detection> detections_from_scores(std::span<const double> scores,
                                              const OccupancyGrid& geometry, double threshold);

/// Area of overlap / area of union. Zero-area boxes score 0 against anything.
double compute_iou(const BoundingBox& a, const BoundingBox& b);

struct DetectionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;  // free cells classified free
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  DetectionCounts& operator+=(const DetectionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const DetectionCounts&, const DetectionCounts&) = default;
};

struct MatchResult {
  DetectionCounts counts;
  /// (detection index, truth index) for each true positive.
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  double iou_sum = 0.0;  // over matched pairs
};

/// Greedy one-to-one matching by descending IoU (ties: lower detection
/// index, then lower truth index). Pairs below `iou_threshold` never match.
/// counts.tn is left at 0; see count_true_negative_cells.
MatchResult match_detections(std::span<const BoundingBox> detections,
                             std::span<const BoundingBox> truths, double iou_threshold = 0.5);

/// Cells that are free in the truth and labelled Free.
std::int64_t count_true_negative_cells(std::span<const Label> predicted,
                                       std::span<const std::uint8_t> truth);

/// Full per-frame scoring: box matching plus cell-level true negatives.
MatchResult evaluate_frame(std::span<const Label> predicted, std::span<const std::uint8_t> truth,
                           const OccupancyGrid& geometry, double iou_threshold = 0.5);

/// Runs the recurrent cell over per-tick score vectors from h0 = 0 and
/// returns the hidden states as smoothed scores.
std::vector<nn::Vector> temporal_smooth(const nn::RecurrentCell& cell,
                                        std::span<const nn::Vector> scores);

/// Per-cell inverse-variance combination of camera and lidar evidence.
OccupancyGrid fuse_grids(const OccupancyGrid& camera, double camera_variance,
                         const OccupancyGrid& lidar, double lidar_variance);

/// Fused grid for the current world from the camera and lidar grid channels.
OccupancyGrid sense_fused_grid(const SensorSuite& sensors, const WorldState& world,
                               const GridGeometry& geometry, Rng& rng);

/// Labelled cell patches for training and evaluating the cell classifier.
struct CellDataset {
  std::vector<std::vector<double>> patches;
  std::vector<double> labels;  // 0 or 1
};

struct DatasetConfig {
  int frames = 200;
  /// Weather intensity used for the non-clear presets.
  double weather_intensity = 1.0;
  GridGeometry grid;
};

/// Frames drawn from random scenarios over all weather presets, ego placed
/// at random points along the road so obstacles fall inside the grid.
CellDataset make_cell_dataset(const EpisodeConfig& scenario, const SensorSuite& sensors,
                              const DatasetConfig& config, std::uint64_t seed);

struct ClassifierTraining {
  std::size_t hidden = 16;
  int epochs = 4;
  double learning_rate = 0.05;
};

/// 9 -> hidden (ReLU) -> 1 (Sigmoid), squared error, per-sample SGD in a
/// seeded shuffled order.
nn::Mlp train_cell_classifier(const CellDataset& data, const ClassifierTraining& config,
                              std::uint64_t seed);

/// Fraction of cells whose thresholded score equals the label.
double cell_accuracy(const nn::Mlp& model, const CellDataset& data, double threshold = 0.5);
double cell_accuracy(const nn::QuantizedMlp& model, const CellDataset& data, double threshold = 0.5);

}  // namespace edgeav
