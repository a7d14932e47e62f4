#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgeav/nn.hpp"
#include "edgeav/rng.hpp"

namespace edgeav {

struct Transition {
  nn::Vector s;
  int a = 0;
  double r = 0.0;
  nn::Vector s_next;
  /// True terminal (collision or goal). Time-limit cut-offs keep bootstrapping.
  bool done = false;
};

/// Fixed-capacity ring of transitions with a seeded sampler.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void push(Transition t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  /// `n` distinct stored indices, uniformly at random (Floyd's algorithm).
  /// Throws UsageError when n is 0 or exceeds size().
  std::vector<std::size_t> sample_indices(std::size_t n);
  std::vector<const Transition*> sample(std::size_t n);

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
  Rng rng_;
};

/// Linear decay from `start` to `end` over `decay_ticks`, then flat.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::int64_t decay_ticks = 50000;

  double at(std::int64_t tick) const noexcept;
  void validate() const;
};

struct RewardWeights {
  double alive = 1.0;        // per tick alive and inside the lane
  double departure = -0.5;   // per tick outside the lane
  double collision = -100.0; // terminal
  double steering = -0.05;   // per steering action
  /// Per metre travelled; 0 reproduces the base reward exactly.
  double progress = 0.6;

  void validate() const;
};

struct AgentConfig {
  double learning_rate = 1e-3;
  double gamma = 0.99;
  EpsilonSchedule epsilon;
  std::size_t batch_size = 64;
  std::int64_t target_sync = 250;  // train steps between target copies
  std::size_t replay_capacity = 50000;
  std::size_t warmup = 1000;       // transitions stored before training starts
  int train_every = 4;             // env ticks per train step
  std::vector<std::size_t> hidden{64, 64};
  /// Global L2 gradient-norm cap per train step; 0 disables.
  double max_grad_norm = 100.0;
  RewardWeights reward;

  void validate() const;
};

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

/// Epsilon-greedy: with probability 1 - epsilon the argmax, otherwise a
/// uniform action. One uniform draw always, a second only when exploring.
int select_action(std::span<const double> q_values, double epsilon, Rng& rng);

/// r + gamma * max(q_next); just r when the transition is terminal.
double q_target(const Transition& t, double gamma, std::span<const double> q_next);

/// One SGD step on mean (Q(s,a) - target)^2 over the batch, gradient only
/// through the chosen actions. Targets come from `target_net`. Returns the
/// pre-update mean squared TD error.
double train_step(nn::Mlp& qnet, const nn::Mlp& target_net, std::span<const Transition* const> batch,
                  const AgentConfig& config);

/// Q-network with ReLU hidden layers and a linear output per action.
nn::Mlp make_qnetwork(std::size_t state_dim, std::size_t num_actions, const AgentConfig& config, Rng& rng);

struct QTable {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> values;  // row-major [state][action]

  QTable(std::size_t states, std::size_t actions, double init = 0.0)
      : num_states(states), num_actions(actions), values(states * actions, init) {}

  double& at(std::size_t s, std::size_t a) { return values[s * num_actions + a]; }
  double at(std::size_t s, std::size_t a) const { return values[s * num_actions + a]; }
  double max(std::size_t s) const;
};

/// Q(s,a) += alpha [r + gamma max_a' Q(s',a') - Q(s,a)]; the bootstrap term
/// is dropped when `terminal`. Throws DomainError on unknown indices.
void tabular_q_update(QTable& table, std::size_t s, std::size_t a, double r, std::size_t s_next,
                      double alpha, double gamma, bool terminal = false);

/// sum_{i=1..T} gamma^i r_i. With `conventional`, the first reward is
/// undiscounted: sum gamma^(i-1) r_i.
double cumulative_reward(std::span<const double> rewards, double gamma, bool conventional = false);

}  // namespace edgeav
