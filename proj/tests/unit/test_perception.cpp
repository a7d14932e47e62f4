#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edgeav/errors.hpp"
#include "edgeav/perception.hpp"

using namespace edgeav;
using namespace edgeav::nn;

namespace {

OccupancyGrid grid(int w, int h, double cell = 1.0) {
  return OccupancyGrid::empty({w, h, cell}, 0.0);
}

Mlp constant_scorer(double bias) {
  DenseLayer l;
  l.W = Matrix(1, kPatchSize, 0.0);
  l.b = {bias};
  l.activation = Activation::Sigmoid;
  Mlp m;
  m.layers.push_back(l);
  return m;
}

// Brute-force IoU over a fine lattice of exact rational boxes: integer
// coordinates make overlap and union integer counts of unit squares.
double lattice_iou(int ax0, int ay0, int ax1, int ay1, int bx0, int by0, int bx1, int by1) {
  long inter = 0, uni = 0;
  for (int x = std::min(ax0, bx0); x < std::max(ax1, bx1); ++x) {
    for (int y = std::min(ay0, by0); y < std::max(ay1, by1); ++y) {
      const bool in_a = x >= ax0 && x < ax1 && y >= ay0 && y < ay1;
      const bool in_b = x >= bx0 && x < bx1 && y >= by0 && y < by1;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

TEST(Patch, ZeroPaddedNeighbourhood) {
  OccupancyGrid g = grid(3, 3);
  std::iota(g.values.begin(), g.values.end(), 1.0);
  EXPECT_EQ(cell_patch(g, 1, 1), (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(cell_patch(g, 0, 0), (std::vector<double>{0, 0, 0, 0, 1, 2, 0, 4, 5}));
}

TEST(Classify, NegativeBiasGivesAllFree) {
  const auto labels = classify_cells(constant_scorer(-20.0), grid(6, 4), 0.5);
  EXPECT_TRUE(std::all_of(labels.begin(), labels.end(), [](Label l) { return l == Label::Free; }));
}

TEST(Classify, ZeroThresholdWithPositiveScoresGivesAllObstacle) {
  const auto labels = classify_cells(constant_scorer(-5.0), grid(6, 4), 0.0);
  EXPECT_TRUE(std::all_of(labels.begin(), labels.end(), [](Label l) { return l == Label::Obstacle; }));
}

TEST(Classify, ScoreEqualToThresholdIsFree) {
  const double s[] = {0.5, 0.5000001};
  EXPECT_EQ(threshold_scores(s, 0.5), (std::vector<Label>{Label::Free, Label::Obstacle}));
}

TEST(Classify, ModelShapeChecked) {
  Rng rng(1);
  const std::size_t sizes[] = {4, 1};
  const Activation acts[] = {Activation::Sigmoid};
  EXPECT_THROW(classify_cells(Mlp::create(sizes, acts, rng), grid(3, 3), 0.5), ShapeError);
}

TEST(Classify, TrainedOnSeparableSetReachesNinetyFivePercent) {
  Rng rng(5);
  auto make = [&](int n) {
    CellDataset d;
    for (int i = 0; i < n; ++i) {
      const bool occ = rng.uniform01() < 0.3;
      std::vector<double> p(kPatchSize);
      for (double& v : p) v = std::clamp(rng.normal(0.15, 0.1), 0.0, 1.0);
      p[4] = std::clamp(rng.normal(occ ? 0.85 : 0.15, 0.1), 0.0, 1.0);
      d.patches.push_back(p);
      d.labels.push_back(occ ? 1.0 : 0.0);
    }
    return d;
  };
  const CellDataset train = make(4000);
  const CellDataset held = make(2000);
  const Mlp m = train_cell_classifier(train, ClassifierTraining{}, 17);
  EXPECT_GE(cell_accuracy(m, held), 0.95);
  EXPECT_EQ(m, train_cell_classifier(train, ClassifierTraining{}, 17));
}

TEST(Boxes, NoObstacleCells) {
  const OccupancyGrid g = grid(4, 3);
  const std::vector<Label> labels(12, Label::Free);
  EXPECT_TRUE(boxes_from_labels(labels, g).empty());
}

TEST(Boxes, SingleCellFootprint) {
  OccupancyGrid g = grid(4, 3, 0.5);
  g.origin_x = 10.0;
  g.origin_y = -0.75;
  std::vector<Label> labels(12, Label::Free);
  labels[1 * 4 + 2] = Label::Obstacle;  // col 2, row 1
  const auto boxes = boxes_from_labels(labels, g);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0], (BoundingBox{11.0, -0.25, 11.5, 0.25}));
}

TEST(Boxes, LShapeIsOneTightBox) {
  const OccupancyGrid g = grid(4, 4);
  std::vector<Label> labels(16, Label::Free);
  labels[0 * 4 + 1] = Label::Obstacle;
  labels[1 * 4 + 1] = Label::Obstacle;
  labels[1 * 4 + 2] = Label::Obstacle;
  const auto boxes = boxes_from_labels(labels, g);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0], (BoundingBox{1.0, g.origin_y, 3.0, g.origin_y + 2.0}));
}

TEST(Boxes, DiagonalCellsAreSeparate) {
  const OccupancyGrid g = grid(3, 3);
  std::vector<Label> labels(9, Label::Free);
  labels[0] = Label::Obstacle;
  labels[4] = Label::Obstacle;
  EXPECT_EQ(boxes_from_labels(labels, g).size(), 2u);
}

TEST(Detections, ScoreIsComponentMax) {
  const OccupancyGrid g = grid(3, 1);
  const double scores[] = {0.7, 0.9, 0.1};
  const auto dets = detections_from_scores(scores, g, 0.5);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].score, 0.9);
  EXPECT_EQ(dets[0].label, Label::Obstacle);
}

TEST(Iou, Examples) {
  const BoundingBox a{0, 0, 2, 2};
  EXPECT_EQ(compute_iou(a, a), 1.0);
  EXPECT_EQ(compute_iou(a, {5, 5, 6, 6}), 0.0);
  EXPECT_DOUBLE_EQ(compute_iou(a, {1, 1, 3, 3}), 1.0 / 7.0);
  EXPECT_EQ(compute_iou({1, 1, 1, 3}, {1, 1, 1, 3}), 0.0);
  EXPECT_EQ(compute_iou({0, 0, 2, 2}, {2, 0, 4, 2}), 0.0);
}

TEST(Iou, MatchesLatticeOracleExactly) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    int c[8];
    for (int i = 0; i < 8; i += 2) {
      const int lo = rng.uniform_int(0, 8);
      c[i] = lo;
      c[i + 1] = lo + rng.uniform_int(1, 5);
    }
    const BoundingBox a{double(c[0]), double(c[2]), double(c[1]), double(c[3])};
    const BoundingBox b{double(c[4]), double(c[6]), double(c[5]), double(c[7])};
    const double oracle = lattice_iou(c[0], c[2], c[1], c[3], c[4], c[6], c[5], c[7]);
    ASSERT_EQ(compute_iou(a, b), oracle);
    ASSERT_EQ(compute_iou(a, b), compute_iou(b, a));
  }
}

TEST(Iou, BoundedAndSymmetricForReals) {
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const double ax = rng.uniform(-5, 5), ay = rng.uniform(-5, 5);
    const double bx = rng.uniform(-5, 5), by = rng.uniform(-5, 5);
    const BoundingBox a{ax, ay, ax + rng.uniform(0.01, 4), ay + rng.uniform(0.01, 4)};
    const BoundingBox b{bx, by, bx + rng.uniform(0.01, 4), by + rng.uniform(0.01, 4)};
    const double v = compute_iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_EQ(v, compute_iou(b, a));
    EXPECT_NEAR(compute_iou(a, a), 1.0, 1e-15);
  }
}

TEST(Match, ExactDetections) {
  const std::vector<BoundingBox> truths{{0, 0, 1, 1}, {3, 3, 5, 4}};
  const MatchResult r = match_detections(truths, truths);
  EXPECT_EQ(r.counts.tp, 2);
  EXPECT_EQ(r.counts.fp, 0);
  EXPECT_EQ(r.counts.fn, 0);
  EXPECT_DOUBLE_EQ(r.iou_sum, 2.0);
}

TEST(Match, NoDetections) {
  const std::vector<BoundingBox> truths{{0, 0, 1, 1}, {2, 2, 3, 3}, {4, 4, 5, 5}};
  const MatchResult r = match_detections({}, truths);
  EXPECT_EQ(r.counts.fn, 3);
  EXPECT_EQ(r.counts.tp, 0);
}

TEST(Match, TwoDetectionsOnOneTruth) {
  const std::vector<BoundingBox> truths{{0, 0, 2, 2}};
  const std::vector<BoundingBox> dets{{0, 0, 2, 1.8}, {0, 0, 2, 2}};
  const MatchResult r = match_detections(dets, truths);
  EXPECT_EQ(r.counts.tp, 1);
  EXPECT_EQ(r.counts.fp, 1);
  EXPECT_EQ(r.counts.fn, 0);
  ASSERT_EQ(r.matches.size(), 1u);
  EXPECT_EQ(r.matches[0], (std::pair<std::size_t, std::size_t>{1, 0}));
}

TEST(Match, ConservationOnRandomScenes) {
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    std::vector<BoundingBox> d, g;
    const int nd = rng.uniform_int(0, 5), ng = rng.uniform_int(0, 5);
    for (int i = 0; i < nd; ++i) {
      const double x = rng.uniform_int(0, 6), y = rng.uniform_int(0, 6);
      d.push_back({x, y, x + rng.uniform_int(1, 3), y + rng.uniform_int(1, 3)});
    }
    for (int i = 0; i < ng; ++i) {
      const double x = rng.uniform_int(0, 6), y = rng.uniform_int(0, 6);
      g.push_back({x, y, x + rng.uniform_int(1, 3), y + rng.uniform_int(1, 3)});
    }
    const MatchResult r = match_detections(d, g);
    ASSERT_EQ(r.counts.tp + r.counts.fn, ng);
    ASSERT_EQ(r.counts.tp + r.counts.fp, nd);
    for (const auto& [di, ti] : r.matches) ASSERT_GE(compute_iou(d[di], g[ti]), 0.5);
  }
}

TEST(Frame, TrueNegativesAtCellLevel) {
  const OccupancyGrid g = grid(4, 2);
  const std::vector<std::uint8_t> truth{0, 1, 0, 0, 0, 1, 0, 0};
  std::vector<Label> pred(8, Label::Free);
  pred[1] = pred[5] = Label::Obstacle;
  pred[3] = Label::Obstacle;
  const MatchResult r = evaluate_frame(pred, truth, g);
  EXPECT_EQ(r.counts.tp, 1);
  EXPECT_EQ(r.counts.fp, 1);
  EXPECT_EQ(r.counts.fn, 0);
  EXPECT_EQ(r.counts.tn, 5);
  EXPECT_EQ(count_true_negative_cells(pred, truth), 5);
}

TEST(Smooth, ZeroCellIsHalf) {
  const RecurrentCell c = RecurrentCell::zeros(3, 3);
  const std::vector<Vector> seq(4, Vector{0.1, 0.9, 0.4});
  for (const Vector& h : temporal_smooth(c, seq)) {
    for (double v : h) EXPECT_EQ(v, 0.5);
  }
}

TEST(Smooth, ConstantInputConverges) {
  RecurrentCell c = RecurrentCell::zeros(2, 2);
  c.W_h(0, 0) = 1.5;
  c.W_h(1, 1) = -2.0;
  c.W_h(0, 1) = 0.5;
  c.W_x(0, 0) = 2.0;
  c.W_x(1, 1) = 2.0;
  const std::vector<Vector> seq(200, Vector{0.7, 0.2});
  const auto out = temporal_smooth(c, seq);
  double diff = 0.0;
  for (std::size_t i = 0; i < 2; ++i) diff += std::pow(out[199][i] - out[198][i], 2);
  EXPECT_LT(std::sqrt(diff), 1e-6);
}

TEST(Smooth, FlickerPeakIsDamped) {
  RecurrentCell c = RecurrentCell::zeros(1, 1);
  c.W_h(0, 0) = 3.0;
  c.W_x(0, 0) = 3.0;
  c.b_h[0] = -3.0;
  const std::vector<Vector> seq{{0.0}, {0.0}, {1.0}, {0.0}, {0.0}};
  const auto out = temporal_smooth(c, seq);
  double peak = 0.0;
  for (const Vector& h : out) peak = std::max(peak, h[0]);
  EXPECT_LT(peak, 1.0);
}

TEST(Smooth, ShapeMismatch) {
  const RecurrentCell c = RecurrentCell::zeros(2, 2);
  const std::vector<Vector> seq{{0.1, 0.2, 0.3}};
  EXPECT_THROW(temporal_smooth(c, seq), ShapeError);
}

TEST(FuseGrids, InverseVarianceCellwise) {
  OccupancyGrid a = grid(2, 1), b = grid(2, 1);
  a.values = {1.0, 0.0};
  b.values = {0.0, 0.5};
  const OccupancyGrid f = fuse_grids(a, 1.0, b, 3.0);
  EXPECT_DOUBLE_EQ(f.values[0], 0.75);
  EXPECT_DOUBLE_EQ(f.values[1], 0.125);
}

TEST(Dataset, DeterministicAndBalancedEnough) {
  const EpisodeConfig sc;
  const SensorSuite ss;
  DatasetConfig dc;
  dc.frames = 20;
  const CellDataset a = make_cell_dataset(sc, ss, dc, 3);
  const CellDataset b = make_cell_dataset(sc, ss, dc, 3);
  EXPECT_EQ(a.patches, b.patches);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.labels.size(), 20u * dc.grid.cells());
  const double occupied = std::accumulate(a.labels.begin(), a.labels.end(), 0.0);
  EXPECT_GT(occupied, 0.0);
}

TEST(Classify, DeterministicDetections) {
  const CellDataset data = make_cell_dataset(EpisodeConfig{}, SensorSuite{}, DatasetConfig{50, 1.0, {}}, 8);
  const Mlp m = train_cell_classifier(data, ClassifierTraining{}, 2);
  WorldState w = spawn_scenario(EpisodeConfig{}, 4);
  Rng r1(6), r2(6);
  const OccupancyGrid g1 = sense_fused_grid(SensorSuite{}, w, GridGeometry{}, r1);
  const OccupancyGrid g2 = sense_fused_grid(SensorSuite{}, w, GridGeometry{}, r2);
  EXPECT_EQ(classify_cells(m, g1, 0.5), classify_cells(m, g2, 0.5));
  const QuantizedMlp q = quantize_model(m);
  EXPECT_EQ(score_cells(q, g1).size(), g1.values.size());
}
