#include "edgeav/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "edgeav/errors.hpp"

namespace edgeav {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw ConfigError("agent.replay_capacity", "must be > 0");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (t.a < 0) throw DomainError("ReplayBuffer: negative action index");
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n) {
  if (n == 0 || n > items_.size()) {
    throw UsageError("ReplayBuffer: cannot sample " + std::to_string(n) + " of " +
                     std::to_string(items_.size()) + " transitions");
  }
  const auto size = static_cast<int>(items_.size());
  std::vector<std::size_t> out;
  out.reserve(n);
  std::unordered_set<int> chosen;
  for (int j = size - static_cast<int>(n); j < size; ++j) {
    const int t = rng_.uniform_int(0, j);
    const int pick = chosen.count(t) ? j : t;
    chosen.insert(pick);
    out.push_back(static_cast<std::size_t>(pick));
  }
  return out;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n) {
  std::vector<const Transition*> out;
  for (std::size_t i : sample_indices(n)) out.push_back(&items_[i]);
  return out;
}

double EpsilonSchedule::at(std::int64_t tick) const noexcept {
  if (decay_ticks <= 0 || tick >= decay_ticks) return end;
  if (tick <= 0) return start;
  const double f = static_cast<double>(tick) / static_cast<double>(decay_ticks);
  return std::max(end, start + (end - start) * f);
}

void EpsilonSchedule::validate() const {
  if (!(start >= 0.0 && start <= 1.0)) throw ConfigError("agent.epsilon.start", "must be in [0, 1]");
  if (!(end >= 0.0 && end <= 1.0)) throw ConfigError("agent.epsilon.end", "must be in [0, 1]");
  if (end > start) throw ConfigError("agent.epsilon.end", "must not exceed epsilon.start");
  if (decay_ticks < 0) throw ConfigError("agent.epsilon.decay_ticks", "must be >= 0");
}

void RewardWeights::validate() const {
  const std::pair<const char*, double> fields[] = {{"alive", alive},         {"departure", departure},
                                                   {"collision", collision}, {"steering", steering},
                                                   {"progress", progress}};
  for (const auto& [name, v] : fields) {
    if (!std::isfinite(v)) throw ConfigError(std::string("agent.reward.") + name, "must be finite");
  }
}

void AgentConfig::validate() const {
  if (!(learning_rate >= 0.0 && std::isfinite(learning_rate))) {
    throw ConfigError("agent.learning_rate", "must be finite and >= 0");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma", "must be in [0, 1)");
  epsilon.validate();
  if (batch_size == 0) throw ConfigError("agent.batch_size", "must be > 0");
  if (target_sync <= 0) throw ConfigError("agent.target_sync", "must be > 0");
  if (replay_capacity < batch_size) throw ConfigError("agent.replay_capacity", "must be >= batch_size");
  if (warmup < batch_size) throw ConfigError("agent.warmup", "must be >= batch_size");
  if (train_every <= 0) throw ConfigError("agent.train_every", "must be > 0");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("agent.hidden", "layer sizes must be > 0");
  }
  if (!(max_grad_norm >= 0.0)) throw ConfigError("agent.max_grad_norm", "must be >= 0");
  reward.validate();
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw UsageError("argmax: empty action set");
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int select_action(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (q_values.empty()) throw UsageError("select_action: empty action set");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("select_action: epsilon must be in [0, 1]");
  const double u = rng.uniform01();
  if (u < epsilon) return rng.uniform_int(0, static_cast<int>(q_values.size()) - 1);
  return argmax(q_values);
}

double q_target(const Transition& t, double gamma, std::span<const double> q_next) {
  if (t.done) return t.r;
  if (q_next.empty()) throw UsageError("q_target: empty next-state values");
  return t.r + gamma * *std::max_element(q_next.begin(), q_next.end());
}

double train_step(nn::Mlp& qnet, const nn::Mlp& target_net, std::span<const Transition* const> batch,
                  const AgentConfig& config) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  const std::size_t n_actions = qnet.output_dim();
  if (target_net.output_dim() != n_actions || target_net.input_dim() != qnet.input_dim()) {
    throw UsageError("train_step: target network shape differs from the online network");
  }

  nn::MlpGradients grads = nn::MlpGradients::zeros_like(qnet);
  nn::MlpCache cache;
  nn::Vector dq(n_actions, 0.0);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Transition* t : batch) {
    if (t->s.size() != qnet.input_dim() || t->s_next.size() != qnet.input_dim()) {
      throw UsageError("train_step: transition state size does not match the network");
    }
    if (t->a < 0 || static_cast<std::size_t>(t->a) >= n_actions) {
      throw UsageError("train_step: action index out of range");
    }
    const double target =
        t->done ? t->r : q_target(*t, config.gamma, target_net.forward(t->s_next));
    const nn::Vector q = nn::mlp_forward(qnet, t->s, &cache);
    const double err = q[static_cast<std::size_t>(t->a)] - target;
    loss += err * err * inv_n;
    std::fill(dq.begin(), dq.end(), 0.0);
    dq[static_cast<std::size_t>(t->a)] = 2.0 * err * inv_n;
    nn::backward(qnet, cache, dq, grads);
  }
  if (config.max_grad_norm > 0.0) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > config.max_grad_norm) grads.scale(config.max_grad_norm / norm);
  }
  if (config.learning_rate != 0.0) nn::sgd_step(qnet, grads, config.learning_rate);
  return loss;
}

nn::Mlp make_qnetwork(std::size_t state_dim, std::size_t num_actions, const AgentConfig& config, Rng& rng) {
  std::vector<std::size_t> sizes{state_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(num_actions);
  std::vector<nn::Activation> acts(config.hidden.size(), nn::Activation::ReLU);
  acts.push_back(nn::Activation::Linear);
  return nn::Mlp::create(sizes, acts, rng);
}

double QTable::max(std::size_t s) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < num_actions; ++a) best = std::max(best, at(s, a));
  return best;
}

void tabular_q_update(QTable& table, std::size_t s, std::size_t a, double r, std::size_t s_next,
                      double alpha, double gamma, bool terminal) {
  if (s >= table.num_states || s_next >= table.num_states) {
    throw DomainError("tabular_q_update: unknown state index");
  }
  if (a >= table.num_actions) throw DomainError("tabular_q_update: unknown action index");
  const double bootstrap = terminal ? 0.0 : gamma * table.max(s_next);
  double& q = table.at(s, a);
  q = q + alpha * (r + bootstrap - q);
}

double cumulative_reward(std::span<const double> rewards, double gamma, bool conventional) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("cumulative_reward: gamma must be in [0, 1]");
  double total = 0.0;
  double discount = conventional ? 1.0 : gamma;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

}  // namespace edgeav
