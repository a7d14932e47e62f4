#include "edgeav/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "edgeav/errors.hpp"
#include "edgeav/fusion.hpp"

namespace edgeav {

std::vector<double> cell_patch(const OccupancyGrid& grid, int col, int row) {
  std::vector<double> patch;
  patch.reserve(kPatchSize);
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      const int c = col + dc;
      const int r = row + dr;
      const bool inside = c >= 0 && c < grid.width && r >= 0 && r < grid.height;
      patch.push_back(inside ? grid.at(c, r) : 0.0);
    }
  }
  return patch;
}

namespace {

void check_classifier(std::size_t in, std::size_t out) {
  if (in != kPatchSize || out != 1) {
    throw ShapeError("classifier must map " + std::to_string(kPatchSize) + " inputs to 1 output, got " +
                     std::to_string(in) + " -> " + std::to_string(out));
  }
}

void check_grid(const OccupancyGrid& grid) {
  if (grid.width <= 0 || grid.height <= 0 ||
      grid.values.size() != static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height)) {
    throw ShapeError("occupancy grid dimensions do not match its values");
  }
}

template <typename Model>
std::vector<double> score_with(const Model& model, const OccupancyGrid& grid) {
  check_classifier(model.input_dim(), model.output_dim());
  check_grid(grid);
  std::vector<double> scores(grid.values.size());
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      scores[static_cast<std::size_t>(row * grid.width + col)] = model.forward(cell_patch(grid, col, row))[0];
    }
  }
  return scores;
}

// 4-connected components; returns per-component cell lists in scan order.
std::vector<std::vector<std::size_t>> components(std::span<const Label> labels, int width, int height) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::uint8_t> seen(labels.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (labels[start] != Label::Obstacle || seen[start]) continue;
    std::vector<std::size_t> cells;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      cells.push_back(idx);
      const int col = static_cast<int>(idx % static_cast<std::size_t>(width));
      const int row = static_cast<int>(idx / static_cast<std::size_t>(width));
      const int nbr[4][2] = {{col - 1, row}, {col + 1, row}, {col, row - 1}, {col, row + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[0] >= width || n[1] < 0 || n[1] >= height) continue;
        const auto j = static_cast<std::size_t>(n[1] * width + n[0]);
        if (labels[j] == Label::Obstacle && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    out.push_back(std::move(cells));
  }
  return out;
}

BoundingBox box_of(const std::vector<std::size_t>& cells, const OccupancyGrid& g) {
  int c0 = g.width, c1 = -1, r0 = g.height, r1 = -1;
  for (std::size_t idx : cells) {
    const int col = static_cast<int>(idx % static_cast<std::size_t>(g.width));
    const int row = static_cast<int>(idx / static_cast<std::size_t>(g.width));
    c0 = std::min(c0, col);
    c1 = std::max(c1, col);
    r0 = std::min(r0, row);
    r1 = std::max(r1, row);
  }
  return {g.origin_x + c0 * g.cell_size, g.origin_y + r0 * g.cell_size, g.origin_x + (c1 + 1) * g.cell_size,
          g.origin_y + (r1 + 1) * g.cell_size};
}

void check_labels(std::size_t n, const OccupancyGrid& g) {
  if (n != static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height)) {
    throw ShapeError("label count does not match the grid");
  }
}

}  // namespace

std::vector<double> score_cells(const nn::Mlp& model, const OccupancyGrid& grid) {
  return score_with(model, grid);
}

std::vector<double> score_cells(const nn::QuantizedMlp& model, const OccupancyGrid& grid) {
  return score_with(model, grid);
}

std::vector<Label> threshold_scores(std::span<const double> scores, double threshold) {
  std::vector<Label> labels(scores.size());
  std::transform(scores.begin(), scores.end(), labels.begin(),
                 [threshold](double s) { return s > threshold ? Label::Obstacle : Label::Free; });
  return labels;
}

std::vector<Label> classify_cells(const nn::Mlp& model, const OccupancyGrid& grid, double threshold) {
  return threshold_scores(score_cells(model, grid), threshold);
}

std::vector<BoundingBox> boxes_from_labels(std::span<const Label> labels, const OccupancyGrid& geometry) {
  check_labels(labels.size(), geometry);
  std::vector<BoundingBox> boxes;
  for (const auto& cells : components(labels, geometry.width, geometry.height)) {
    boxes.push_back(box_of(cells, geometry));
  }
  return boxes;
}

std::vector<Detection> detections_from_scores(std::span<const double> scores,
                                              const OccupancyGrid& geometry, double threshold) {
  check_labels(scores.size(), geometry);
  const std::vector<Label> labels = threshold_scores(scores, threshold);
  std::vector<Detection> dets;
  for (const auto& cells : components(labels, geometry.width, geometry.height)) {
    double best = 0.0;
    for (std::size_t idx : cells) best = std::max(best, scores[idx]);
    dets.push_back({box_of(cells, geometry), std::clamp(best, 0.0, 1.0), Label::Obstacle});
  }
  return dets;
}

double compute_iou(const BoundingBox& a, const BoundingBox& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (!(area_a > 0.0) || !(area_b > 0.0)) return 0.0;
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double overlap = w * h;
  return std::clamp(overlap / (area_a + area_b - overlap), 0.0, 1.0);
}

MatchResult match_detections(std::span<const BoundingBox> detections,
                             std::span<const BoundingBox> truths, double iou_threshold) {
  struct Candidate {
    double iou;
    std::size_t det;
    std::size_t truth;
  };
  std::vector<Candidate> candidates;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    for (std::size_t t = 0; t < truths.size(); ++t) {
      const double iou = compute_iou(detections[d], truths[t]);
      if (iou >= iou_threshold && iou > 0.0) candidates.push_back({iou, d, t});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.det, a.truth) < std::tie(a.iou, b.det, b.truth);
  });

  MatchResult result;
  std::vector<std::uint8_t> det_used(detections.size(), 0);
  std::vector<std::uint8_t> truth_used(truths.size(), 0);
  for (const Candidate& c : candidates) {
    if (det_used[c.det] || truth_used[c.truth]) continue;
    det_used[c.det] = 1;
    truth_used[c.truth] = 1;
    result.matches.emplace_back(c.det, c.truth);
    result.iou_sum += c.iou;
  }
  result.counts.tp = static_cast<std::int64_t>(result.matches.size());
  result.counts.fp = static_cast<std::int64_t>(detections.size()) - result.counts.tp;
  result.counts.fn = static_cast<std::int64_t>(truths.size()) - result.counts.tp;
  return result;
}

std::int64_t count_true_negative_cells(std::span<const Label> predicted,
                                       std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("count_true_negative_cells: size mismatch");
  std::int64_t tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) tn += (truth[i] == 0 && predicted[i] == Label::Free) ? 1 : 0;
  return tn;
}

MatchResult evaluate_frame(std::span<const Label> predicted, std::span<const std::uint8_t> truth,
                           const OccupancyGrid& geometry, double iou_threshold) {
  std::vector<Label> truth_labels(truth.size());
  std::transform(truth.begin(), truth.end(), truth_labels.begin(),
                 [](std::uint8_t t) { return t != 0 ? Label::Obstacle : Label::Free; });
  const auto dets = boxes_from_labels(predicted, geometry);
  const auto truths = boxes_from_labels(truth_labels, geometry);
  MatchResult result = match_detections(dets, truths, iou_threshold);
  result.counts.tn = count_true_negative_cells(predicted, truth);
  return result;
}

std::vector<nn::Vector> temporal_smooth(const nn::RecurrentCell& cell, std::span<const nn::Vector> scores) {
  const nn::Vector h0(cell.hidden_dim, 0.0);
  return nn::rnn_unroll(cell, h0, scores);
}

OccupancyGrid fuse_grids(const OccupancyGrid& camera, double camera_variance, const OccupancyGrid& lidar,
                         double lidar_variance) {
  if (camera.width != lidar.width || camera.height != lidar.height ||
      camera.values.size() != lidar.values.size()) {
    throw ShapeError("fuse_grids: camera and lidar grids differ in shape");
  }
  const double variances[2] = {camera_variance, lidar_variance};
  const std::vector<double> w = inverse_variance_weights(variances);
  OccupancyGrid fused = camera;
  for (std::size_t i = 0; i < fused.values.size(); ++i) {
    fused.values[i] = std::clamp(w[0] * camera.values[i] + w[1] * lidar.values[i], 0.0, 1.0);
  }
  return fused;
}

OccupancyGrid sense_fused_grid(const SensorSuite& sensors, const WorldState& world,
                               const GridGeometry& geometry, Rng& rng) {
  const SensorSpec& cam = sensors[SensorKind::Camera];
  const SensorSpec& lid = sensors[SensorKind::Lidar];
  const OccupancyGrid c = sense_grid(cam, world, geometry, rng);
  const OccupancyGrid l = sense_grid(lid, world, geometry, rng);
  return fuse_grids(c, noise_variance_for(cam, world.weather, quantity::kCameraGrid), l,
                    noise_variance_for(lid, world.weather, quantity::kLidarGrid));
}

CellDataset make_cell_dataset(const EpisodeConfig& scenario, const SensorSuite& sensors,
                              const DatasetConfig& config, std::uint64_t seed) {
  if (config.frames < 0) throw ConfigError("perception.frames", "must be >= 0");
  CellDataset data;
  Rng rng(seed);
  for (int f = 0; f < config.frames; ++f) {
    const WeatherKind kind = kAllWeather[static_cast<std::size_t>(rng.uniform_int(0, 3))];
    EpisodeConfig cfg = scenario;
    cfg.weather = WeatherCondition(kind, kind == WeatherKind::Clear ? 0.0 : config.weather_intensity);
    WorldState world = spawn_scenario(cfg, rng.next_u64());
    if (!world.obstacles.empty()) {
      const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(world.obstacles.size()) - 1));
      const double span = config.grid.width * config.grid.cell_size;
      world.ego.x = world.obstacles[pick].x - rng.uniform(0.0, span);
    }
    world.ego.y = rng.uniform(-scenario.lane_half_width, scenario.lane_half_width);

    const OccupancyGrid grid = sense_fused_grid(sensors, world, config.grid, rng);
    const std::vector<std::uint8_t> truth = truth_occupancy(world, config.grid);
    for (int row = 0; row < grid.height; ++row) {
      for (int col = 0; col < grid.width; ++col) {
        data.patches.push_back(cell_patch(grid, col, row));
        data.labels.push_back(truth[static_cast<std::size_t>(row * grid.width + col)]);
      }
    }
  }
  return data;
}

nn::Mlp train_cell_classifier(const CellDataset& data, const ClassifierTraining& config, std::uint64_t seed) {
  if (config.hidden == 0) throw ConfigError("perception.hidden", "must be > 0");
  if (config.epochs < 0) throw ConfigError("perception.epochs", "must be >= 0");
  if (!(config.learning_rate >= 0.0)) throw ConfigError("perception.learning_rate", "must be >= 0");
  if (data.patches.size() != data.labels.size()) throw ShapeError("cell dataset: patches and labels differ");

  Rng rng(seed);
  const std::size_t sizes[] = {kPatchSize, config.hidden, 1};
  const nn::Activation acts[] = {nn::Activation::ReLU, nn::Activation::Sigmoid};
  nn::Mlp model = nn::Mlp::create(sizes, acts, rng);

  std::vector<std::size_t> order(data.patches.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::MlpCache cache;
  nn::MlpGradients grads = nn::MlpGradients::zeros_like(model);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with our own generator keeps the order portable.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
      const nn::Vector y = nn::mlp_forward(model, data.patches[idx], &cache);
      const double target = data.labels[idx];
      const double g = 2.0 * (y[0] - target);
      grads = nn::MlpGradients::zeros_like(model);
      nn::backward(model, cache, std::span<const double>(&g, 1), grads);
      nn::sgd_step(model, grads, config.learning_rate);
    }
  }
  return model;
}

namespace {

template <typename Model>
double accuracy_with(const Model& model, const CellDataset& data, double threshold) {
  if (data.patches.empty()) throw UndefinedMetricError("cell_accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.patches.size(); ++i) {
    const bool predicted = model.forward(data.patches[i])[0] > threshold;
    correct += (predicted == (data.labels[i] > 0.5)) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.patches.size());
}

}  // namespace

double cell_accuracy(const nn::Mlp& model, const CellDataset& data, double threshold) {
  check_classifier(model.input_dim(), model.output_dim());
  return accuracy_with(model, data, threshold);
}

double cell_accuracy(const nn::QuantizedMlp& model, const CellDataset& data, double threshold) {
  check_classifier(model.input_dim(), model.output_dim());
  return accuracy_with(model, data, threshold);
}

}  // namespace edgeav
