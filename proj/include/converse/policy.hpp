#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/features.hpp"
#include "converse/nlu.hpp"
#include "converse/reward.hpp"
#include "converse/scoring.hpp"

namespace converse {

/// A response-selection rule over one turn's candidates. `features` holds one
/// scoring-feature column per candidate.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> distribution(const Matrix& features,
                                           const std::vector<CandidateResponse>& candidates) const = 0;
  /// True when `choose` samples; otherwise it takes the lowest-index argmax.
  virtual bool stochastic() const = 0;

  std::size_t choose(const Matrix& features, const std::vector<CandidateResponse>& candidates,
                     Rng& rng) const;
  /// Samples from p when stochastic, else the first maximum.
  static std::size_t pick(const std::vector<double>& p, bool stochastic, Rng& rng);
};

enum class PolicyVariant { GreedyActionValue, StochasticSoftmax, GreedyOfStochastic };
std::string to_string(PolicyVariant v);

/// Policies driven by the scoring net's scalar output.
class NetPolicy : public Policy {
 public:
  NetPolicy(PolicyVariant variant, ScoringNet net, double temperature = 1.0, std::string id = "");

  std::string id() const override { return id_; }
  std::vector<double> distribution(const Matrix& features,
                                   const std::vector<CandidateResponse>& candidates) const override;
  bool stochastic() const override { return variant_ == PolicyVariant::StochasticSoftmax; }

  PolicyVariant variant() const { return variant_; }
  double temperature() const { return temperature_; }
  const ScoringNet& net() const { return net_; }
  ScoringNet& net() { return net_; }

  nlohmann::json to_json() const;
  static NetPolicy from_json(const nlohmann::json& j);

 private:
  PolicyVariant variant_;
  ScoringNet net_;
  double temperature_;
  std::string id_;
};

class RandomPolicy : public Policy {
 public:
  std::string id() const override { return "random"; }
  std::vector<double> distribution(const Matrix& features,
                                   const std::vector<CandidateResponse>& candidates) const override;
  bool stochastic() const override { return true; }
};

/// Picks the candidate whose model ranks first in a fixed preference list.
class FixedModelPolicy : public Policy {
 public:
  explicit FixedModelPolicy(std::vector<std::string> preference);
  std::string id() const override { return "fixed-model"; }
  std::vector<double> distribution(const Matrix& features,
                                   const std::vector<CandidateResponse>& candidates) const override;
  bool stochastic() const override { return false; }

 private:
  std::vector<std::string> preference_;
};

/// softmax(scores / temperature), computed in a shift-stable way.
std::vector<double> softmax(const Vector& scores, double temperature);
/// One-hot on the first maximum.
std::vector<double> one_hot_argmax(const Vector& scores);

/// Stacks per-candidate feature vectors as columns.
Matrix stack_columns(const std::vector<Vector>& cols);

// ---------------------------------------------------------------------------
// Reward shaping and logged-data steps.

enum class RewardMode { FinalScore, LearnedReward };
std::string to_string(RewardMode m);
RewardMode reward_mode_from_string(const std::string& s);

/// Reward for the action taken after history `history`.
using LearnedRewardFn =
    std::function<double(const Dialogue& history, const CandidateResponse& action)>;

/// g(h, a) built from the scoring net's class probabilities and the bagged regressor.
LearnedRewardFn make_learned_reward(std::shared_ptr<const BaggedRewardModel> model,
                                    std::shared_ptr<const ScoringNet> scorer,
                                    std::shared_ptr<const FeatureExtractor> extractor);

/// One example per non-empty selection of a rated dialogue, labelled with its final score.
std::vector<RewardExample> reward_examples_from_logs(const std::vector<Dialogue>& logs, const ScoringNet& scorer,
                                                     const FeatureExtractor& extractor);

/// Scoring features of every logged (h, a) with g(h, a) as the target.
std::vector<RegressionExample> learned_reward_targets(const std::vector<Dialogue>& logs,
                                                      const LearnedRewardFn& learned,
                                                      const FeatureExtractor& extractor);

/// True for selections made by the policy (non-empty, not a priority override).
bool is_policy_selection(const SelectionRecord& s);

/// One reward per policy-made selection, in order. A turn followed by a
/// negative user reply earns 0; otherwise R / T (final score) or g(h, a).
std::vector<double> shaped_rewards(const Dialogue& dialogue, RewardMode mode,
                                   const LearnedRewardFn& learned = {}, const Nlu& nlu = Nlu());

struct RecordedStep {
  Matrix features;  // one column per candidate
  std::vector<CandidateResponse> candidates;
  std::vector<double> behavior;
  std::size_t chosen = 0;
  double reward = 0.0;
  std::optional<Sentiment> sentiment_next;
};

struct RecordedDialogue {
  std::string id;
  std::vector<RecordedStep> steps;
};

/// Converts a logged dialogue into policy-made steps with shaped rewards.
/// Selections without a stored distribution are treated as deterministic.
RecordedDialogue record_dialogue(const Dialogue& dialogue, const FeatureExtractor& extractor,
                                 RewardMode mode, const LearnedRewardFn& learned = {});

/// pi(a|h) / behaviour(a|h) for the logged action.
double importance_weight(const Policy& target, const RecordedStep& step);

// ---------------------------------------------------------------------------
// Off-policy learning and evaluation.

struct OffPolicyEstimate {
  double expected_return = 0.0;
  double expected_steps = 0.0;
};

/// Importance-weighted return and length, averaged over dialogues.
OffPolicyEstimate offpolicy_estimate(const Policy& target,
                                     const std::vector<RecordedDialogue>& dataset);

/// Gradient of mean_k c_k r_k log pi(a_k|h_k) with c_k held constant.
Vector reinforce_gradient(const NetPolicy& policy, const std::vector<const RecordedStep*>& batch,
                          std::vector<double>* weights = nullptr);

/// One ascent step along reinforce_gradient, restricted to `mask`.
/// Returns the importance weights used.
std::vector<double> reinforce_update(NetPolicy& policy, const std::vector<const RecordedStep*>& batch,
                                     double lr, const ParamMask& mask = ParamMask::reinforce());

struct ReinforceConfig {
  std::vector<double> temperatures = {0.5, 1, 2, 5};
  std::vector<double> learning_rates = {1e-2, 1e-3, 1e-4};
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ReinforceConfig from_json(const nlohmann::json& j, ReinforceConfig base);
};

struct ReinforceGridPoint {
  double temperature = 1.0;
  double learning_rate = 0.0;
  double dev_return = 0.0;
  ScoringNet net;
};

struct ReinforceResult {
  NetPolicy stochastic;
  NetPolicy greedy;
  std::vector<ReinforceGridPoint> grid;
  std::size_t best = 0;
  OffPolicyEstimate test;
  std::vector<std::size_t> train_ids, dev_ids, test_ids;  // dataset indices
};

/// Trains from logged dialogues with a 60/20/20 split, selecting the grid
/// point with the highest dev estimate.
ReinforceResult train_offpolicy_reinforce(const ScoringNet& initial,
                                          const std::vector<RecordedDialogue>& dataset,
                                          const ReinforceConfig& config);

}  // namespace converse
