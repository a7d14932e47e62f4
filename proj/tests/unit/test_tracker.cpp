#include <gtest/gtest.h>

#include <cmath>

#include "edgeav/errors.hpp"
#include "edgeav/tracker.hpp"

using namespace edgeav;
using namespace edgeav::state_index;

namespace {

WorldState world_with_obstacle(double dx, double vx, WeatherCondition weather = {}) {
  EpisodeConfig c;
  c.num_obstacles = 0;
  c.weather = weather;
  WorldState w = spawn_scenario(c, 9);
  w.obstacles.push_back({0, w.ego.x + dx, 0.0, vx, 1.0});
  return w;
}

}  // namespace

TEST(Tracker, TransitionIsConstantClosingSpeed) {
  const DrivingStateTracker t(0.1);
  const TransitionModel m = t.transition();
  EXPECT_EQ(m.F(kDistance, kClosing), -0.1);
  EXPECT_EQ(m.F(kDistance, kDistance), 1.0);
  EXPECT_EQ(m.F(kClosing, kClosing), 1.0);
  for (Eigen::Index i = 0; i < kDim; ++i) EXPECT_GE(m.Q(i, i), 0.0);
}

TEST(Tracker, StartsLost) {
  const TrackerConfig cfg;
  DrivingStateTracker t(0.1, cfg);
  t.reset(15.0);
  EXPECT_FALSE(t.has_target());
  EXPECT_EQ(t.estimate().mean[kDistance], cfg.no_target_distance);
  EXPECT_EQ(t.estimate().mean[kSpeed], 15.0);
  EXPECT_EQ(t.estimate().covariance(kDistance, kDistance), cfg.lost_variance);
}

TEST(Tracker, EmptyRoadStaysLost) {
  EpisodeConfig c;
  c.num_obstacles = 0;
  WorldState w = spawn_scenario(c, 2);
  DrivingStateTracker t(c.dt);
  t.reset(w.ego.v);
  const SensorSuite suite;
  for (int i = 0; i < 20; ++i) t.step(sense_all(suite, w));
  EXPECT_FALSE(t.has_target());
  EXPECT_EQ(t.estimate().mean[kDistance], TrackerConfig{}.no_target_distance);
}

TEST(Tracker, NoiselessSensorsConvergeToTruth) {
  SensorSuite suite;
  for (SensorSpec& s : suite.specs) s.base_variance.assign(s.base_variance.size(), 1e-10);
  WorldState w = world_with_obstacle(40.0, 5.0);
  DrivingStateTracker t(w.config.dt);
  t.reset(w.ego.v);
  for (int i = 0; i < 30; ++i) {
    t.step(sense_all(suite, w));
    w = step_world(w, Action::Maintain, w.config.dt).state;
  }
  t.step(sense_all(suite, w));
  const double truth_d = w.obstacles[0].x - w.ego.x;
  EXPECT_TRUE(t.has_target());
  EXPECT_NEAR(t.estimate().mean[kDistance], truth_d, 1e-3);
  EXPECT_NEAR(t.estimate().mean[kClosing], w.ego.v - 5.0, 1e-2);
  EXPECT_NEAR(t.estimate().mean[kSpeed], w.ego.v, 1e-6);
}

TEST(Tracker, CovarianceHealthyOverEpisodes) {
  const SensorSuite suite;
  for (WeatherKind k : kAllWeather) {
    EpisodeConfig c;
    c.weather = {k, 1.0};
    WorldState w = spawn_scenario(c, 100 + static_cast<std::uint64_t>(k));
    DrivingStateTracker t(c.dt);
    t.reset(w.ego.v);
    while (!w.done) {
      const GaussianEstimate& e = t.step(sense_all(suite, w));
      ASSERT_LE((e.covariance - e.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.covariance);
      ASSERT_GE(es.eigenvalues().minCoeff(), -1e-10);
      ASSERT_TRUE(e.mean.allFinite());
      w = step_world(w, Action::Maintain, c.dt).state;
    }
  }
}

TEST(Tracker, InvalidConfigRejected) {
  TrackerConfig cfg;
  cfg.lost_variance = 0.0;
  EXPECT_THROW(DrivingStateTracker(0.1, cfg), ConfigError);
  EXPECT_THROW(DrivingStateTracker(0.0), DomainError);
}

TEST(Snapshot, FusesValidDistanceReturns) {
  WorldState w = world_with_obstacle(30.0, 0.0);
  const SensorFrame f = sense_all(SensorSuite{}, w);
  const auto fused = fuse_distance_snapshot(f);
  ASSERT_TRUE(fused.has_value());
  const double wc = 1.0 / f.camera.variance[0], wl = 1.0 / f.lidar.variance[0], wr = 1.0 / f.radar.variance[0];
  EXPECT_NEAR(fused->mean, (wc * f.camera.values[0] + wl * f.lidar.values[0] + wr * f.radar.values[0]) / (wc + wl + wr),
              1e-12);
  EXPECT_NEAR(fused->variance, 1.0 / (wc + wl + wr), 1e-15);
}

TEST(Snapshot, NothingValidGivesNullopt) {
  WorldState w = world_with_obstacle(1000.0, 0.0);
  EXPECT_FALSE(fuse_distance_snapshot(sense_all(SensorSuite{}, w)).has_value());
}

TEST(Weights, FogShiftsRelianceAwayFromCamera) {
  const SensorSuite suite;
  const auto clear = distance_weights(suite, WeatherCondition::clear());
  const auto fog = distance_weights(suite, {WeatherKind::Fog, 1.0});
  EXPECT_LT(fog[0], clear[0]);
  EXPECT_NEAR(clear[0] + clear[1] + clear[2], 1.0, 1e-15);
  EXPECT_NEAR(fog[0] + fog[1] + fog[2], 1.0, 1e-15);
}
