#pragma once

#include <deque>
#include <string>
#include <vector>

#include "converse/mdp.hpp"
#include "converse/scoring.hpp"

namespace converse {

struct QTransition {
  Vector x;  // features of (h, a)
  double r = 0.0;
  std::size_t next_record = 0;
  bool done = false;
};

/// FIFO experience memory with a hard capacity.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000);
  void push(QTransition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t max_size_seen() const { return max_seen_; }
  /// Uniform draws with replacement.
  std::vector<const QTransition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<QTransition> items_;
  std::size_t max_seen_ = 0;
};

struct QLearningConfig {
  double gamma = 0.2;
  double epsilon = 0.1;
  std::size_t buffer_capacity = 1000;
  std::size_t minibatch = 32;
  std::size_t warmup = 100;  // transitions before updates start
  std::size_t episodes_per_phase = 100;
  std::size_t train_episodes = 500;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static QLearningConfig from_json(const nlohmann::json& j, QLearningConfig base);
};

struct QPhaseLog {
  std::string phase;  // "train" or "eval"
  std::size_t episodes = 0;
  double avg_return = 0.0;
  double avg_reward_per_step = 0.0;
  double avg_length = 0.0;
};

struct QLearningResult {
  ScoringNet net;  // parameters of the best evaluation phase
  double best_eval_return = 0.0;
  std::vector<QPhaseLog> log;
  std::size_t max_buffer_size = 0;
  std::size_t updates = 0;
};

/// One squared-error step of Q(x) towards fixed targets on the masked blocks.
void q_update(ScoringNet& net, Adam& adam, const std::vector<Vector>& xs, const std::vector<double>& targets,
              const ParamMask& mask);

/// Alternates epsilon-greedy training phases on `train` with greedy
/// evaluation phases on `eval`; only the output head and skip weights move.
QLearningResult qlearning_train(const ScoringNet& initial, const MDP& train, const MDP& eval,
                                const QLearningConfig& config);

std::string phase_log_tsv(const std::vector<QPhaseLog>& log);

}  // namespace converse
