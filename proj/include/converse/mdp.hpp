#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/ensemble.hpp"
#include "converse/features.hpp"
#include "converse/mlp.hpp"
#include "converse/nlu.hpp"
#include "converse/policy.hpp"
#include "converse/scoring.hpp"

namespace converse {

// ---------------------------------------------------------------------------
// History store.

struct HistoryRecord {
  std::string id;  // "<dialogue id>#<prefix length>"
  Dialogue history;
  AbstractState z;
  std::vector<CandidateResponse> candidates;
  Matrix features;  // one scoring-feature column per candidate
  bool initial = false;  // history holds exactly one user turn
};

enum class Fallback { None, Sentiment, Generic, Uniform };
std::string to_string(Fallback f);

struct SampledHistory {
  std::size_t record = 0;
  Fallback fallback = Fallback::None;
};

class HistoryStore {
 public:
  HistoryStore() = default;
  explicit HistoryStore(std::vector<HistoryRecord> records);

  const std::vector<HistoryRecord>& records() const { return records_; }
  const HistoryRecord& at(std::size_t i) const { return records_.at(i); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  /// Record ids per state index; states without records are absent.
  const std::map<std::size_t, std::vector<std::size_t>>& index() const { return index_; }
  const std::vector<std::size_t>& initial_records() const { return initial_; }

  /// Re-derives every z from its history and compares.
  bool consistent(const Nlu& nlu) const;

  /// Directory with records.jsonl, features.bin and index.json.
  void save(const std::filesystem::path& dir) const;
  static HistoryStore load(const std::filesystem::path& dir);

 private:
  std::vector<HistoryRecord> records_;
  std::map<std::size_t, std::vector<std::size_t>> index_;
  std::vector<std::size_t> initial_;
};

/// One record per user-terminated prefix; candidates generated by the ensemble
/// on per-record RNG streams and cached with their features.
HistoryStore build_history_store(const std::vector<Dialogue>& logs, const ResponseEnsemble& ensemble,
                                 const FeatureExtractor& extractor, std::uint64_t seed);

/// Uniform over records with state z, relaxing sentiment, then the generic
/// flag, then the state altogether when no record matches.
SampledHistory sample_history(const HistoryStore& store, const AbstractState& z, Rng& rng);

// ---------------------------------------------------------------------------
// Rewards and transitions.

inline constexpr std::array<double, 5> kClassRewards = {-2, -1, 0, 1, 2};

/// Dot product of class probabilities with the class rewards.
double expected_reward(const Vector& class_probs);

/// P(y | h, a) used for the reward and the sampled appropriateness label.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;
  virtual Vector class_probs(const HistoryRecord& record, std::size_t action) const = 0;
};

class ScoringNetOutcome : public OutcomeModel {
 public:
  explicit ScoringNetOutcome(std::shared_ptr<const ScoringNet> net) : net_(std::move(net)) {}
  Vector class_probs(const HistoryRecord& r, std::size_t a) const override;

 private:
  std::shared_ptr<const ScoringNet> net_;
};

struct TransitionProbs {
  Vector act;        // 10
  Vector sentiment;  // 3
  Vector generic;    // 2: [specific, generic]
};

struct TransitionQuery {
  const HistoryRecord& record;
  std::size_t action;
  int y;  // sampled class 0..4
};

class TransitionDistribution {
 public:
  virtual ~TransitionDistribution() = default;
  virtual TransitionProbs probs(const TransitionQuery& q) const = 0;
};

/// Samples each head independently.
AbstractState sample_state(const TransitionProbs& p, Rng& rng);
/// Product of the three head probabilities at z.
double state_probability(const TransitionProbs& p, const AbstractState& z);

/// Network input: scoring features, one-hot y, one-hot act, sentiment one-hot,
/// generic bit, wh bit.
inline constexpr std::size_t kTransitionExtraDim = 5 + kNumDialogueActs + kNumSentiments + 2;
Vector transition_input(const Vector& scoring_features, int y, const AbstractState& z, bool has_wh);

/// Three independent softmax heads over a shared input.
class TransitionModel : public TransitionDistribution {
 public:
  TransitionModel() = default;
  TransitionModel(SoftmaxMlp act, SoftmaxMlp sentiment, SoftmaxMlp generic);
  /// Heads with zero output layers: exactly uniform.
  static TransitionModel uniform(std::size_t scoring_dim, std::size_t h1 = 16, std::size_t h2 = 8);

  std::size_t input_dim() const { return act_.input_dim(); }
  TransitionProbs probs_for_input(const Vector& input) const;
  TransitionProbs probs(const TransitionQuery& q) const override;

  nlohmann::json to_json() const;
  static TransitionModel from_json(const nlohmann::json& j);

  SoftmaxMlp& head(std::size_t i) { return i == 0 ? act_ : (i == 1 ? sentiment_ : generic_); }
  const SoftmaxMlp& head(std::size_t i) const {
    return i == 0 ? act_ : (i == 1 ? sentiment_ : generic_);
  }

 private:
  SoftmaxMlp act_, sentiment_, generic_;
};

struct TransitionExample {
  Vector input;
  AbstractState next;
};

/// Transitions observed in logs: each policy turn followed by a user reply.
/// y is sampled from the outcome model with `seed`.
std::vector<TransitionExample> extract_transitions(const std::vector<Dialogue>& logs,
                                                   const FeatureExtractor& extractor,
                                                   const ScoringNet& scorer, std::uint64_t seed);

/// exp of the mean joint negative log-likelihood.
double joint_perplexity(const TransitionModel& model, const std::vector<TransitionExample>& data);

/// Marginal head frequencies (add-one smoothed) from training transitions.
class ClassFrequencyBaseline {
 public:
  explicit ClassFrequencyBaseline(const std::vector<TransitionExample>& train);
  TransitionProbs probs() const { return p_; }
  double perplexity(const std::vector<TransitionExample>& data) const;

 private:
  TransitionProbs p_;
};

struct TransitionTrainConfig {
  std::size_t h1 = 64, h2 = 32;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static TransitionTrainConfig from_json(const nlohmann::json& j, TransitionTrainConfig base);
};

struct TransitionReport {
  TransitionModel model;
  double holdout_perplexity = 0.0;
  double baseline_perplexity = 0.0;
  double uniform_perplexity = 0.0;
  std::size_t train_size = 0, holdout_size = 0, epochs = 0;
};

/// 70/30 split, Adam on cross-entropy per head, early stopping on hold-out.
TransitionReport train_transition_model(const std::vector<TransitionExample>& data,
                                        const TransitionTrainConfig& config);

// ---------------------------------------------------------------------------
// Simulation.

struct MDPConfig {
  std::size_t t_max = 50;
  std::vector<std::string> precedence = {"Storybot", "Evibot", "Initiatorbot", "Alicebot"};

  nlohmann::json to_json() const;
  static MDPConfig from_json(const nlohmann::json& j, MDPConfig base);
};

struct StepResult {
  std::size_t record = 0;
  AbstractState z;
  std::size_t action = 0;
  bool priority = false;
  int y = 0;
  double r = 0.0;
  std::size_t next_record = 0;
  AbstractState z_next;
  Fallback fallback = Fallback::None;  // for reaching next_record
  bool done = false;
};

struct MDP {
  const HistoryStore& store;
  const OutcomeModel& outcome;
  const TransitionDistribution& transition;
  MDPConfig config;

  /// Start state: z of a uniformly chosen initial record, then a uniform record with that z.
  SampledHistory reset(Rng& rng) const;
  /// `t` is the 0-based step index within the episode.
  StepResult step(std::size_t record, std::size_t t, const Policy& policy, Rng& rng) const;
  /// Same as step with an externally chosen non-priority action.
  StepResult step_with_action(std::size_t record, std::size_t t, std::size_t action, Rng& rng) const;
  /// Priority override index for the record, if any.
  std::optional<std::size_t> priority_action(std::size_t record) const;
};

struct EpisodeTrace {
  std::vector<StepResult> steps;
  double ret = 0.0;
};

EpisodeTrace run_episode(const MDP& mdp, const Policy& policy, Rng& rng);

struct SimulationReport {
  std::size_t episodes = 0;
  double avg_return = 0.0, sd_return = 0.0;
  double avg_reward_per_step = 0.0, sd_reward_per_step = 0.0;
  double avg_length = 0.0, sd_length = 0.0;
  std::map<std::string, std::size_t> selection_counts;  // non-priority steps per model
  std::size_t total_steps = 0, priority_steps = 0;
  std::vector<double> returns, rewards_per_step, lengths;

  double se_reward_per_step() const;
};

/// Episode e uses derive_rng(seed, e); results are independent of `threads`.
SimulationReport simulate(const MDP& mdp, const Policy& policy, std::size_t n_episodes,
                          std::uint64_t seed, std::size_t threads = 1);

struct Contingency {
  std::vector<std::string> models;
  std::vector<std::vector<std::size_t>> counts;  // [A's model][B's model]
  std::size_t total() const;
};

/// Episodes follow policy A; at each step B's choice on the same candidates is recorded.
Contingency compare_policies(const MDP& mdp, const Policy& a, const Policy& b, std::size_t n_episodes,
                             std::uint64_t seed);

}  // namespace converse
