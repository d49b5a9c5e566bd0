#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/embeddings.hpp"
#include "converse/ensemble.hpp"
#include "converse/nlu.hpp"
#include "json.hpp"

namespace converse {

struct SimilarityMetrics {
  double average = 0.0;
  double extrema = 0.0;
  double greedy = 0.0;
};

/// Embedding average, extrema and (symmetrised) greedy matching.
SimilarityMetrics similarity_metrics(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b, const EmbeddingTable& emb);

// ---------------------------------------------------------------------------
// Coarse part-of-speech tags.

enum class PosTag { Noun, Verb, Adj, Adv, Pron, Det, Prep, Num, Punct, Other };

PosTag coarse_pos_tag(const std::string& lowered_word);
std::vector<PosTag> pos_tags(std::string_view text);
std::string to_string(PosTag t);

// ---------------------------------------------------------------------------

struct FeatureGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
  bool binary = false;
};

struct FeatureConfig {
  std::size_t embedding_dim = 50;
  std::vector<std::string> model_ids = default_model_ids();
  std::size_t pos_buckets = 100;
  std::vector<std::string> unigrams = {"i",    "you",  "thanks", "yes", "no",
                                       "what", "like", "think",  "me",  "my"};
};

/// Names and positions of every feature group. Serialized with each model.
class FeatureLayout {
 public:
  FeatureLayout() = default;
  explicit FeatureLayout(FeatureConfig config);

  const FeatureConfig& config() const { return config_; }
  const std::vector<FeatureGroup>& groups() const { return groups_; }
  std::size_t total_dim() const { return total_dim_; }
  const FeatureGroup& group(const std::string& name) const;  // throws InvalidArgument
  std::size_t model_index(const std::string& model_id) const;  // throws LayoutMismatch
  std::size_t num_models() const { return config_.model_ids.size(); }

  nlohmann::json to_json() const;
  static FeatureLayout from_json(const nlohmann::json& j);  // throws LayoutMismatch

  friend bool operator==(const FeatureLayout& a, const FeatureLayout& b);

  static constexpr std::size_t kNumSimilarities = 15;
  static constexpr std::size_t kNumBinaries = 12;

 private:
  FeatureConfig config_;
  std::vector<FeatureGroup> groups_;
  std::size_t total_dim_ = 0;
};

/// Dialogue-side quantities shared by every candidate of one turn.
struct DialogueContext {
  std::string last_user_text;
  std::vector<std::string> last_user;
  std::vector<std::string> last_user_content;  // stop-words removed
  std::vector<std::string> context;            // last 6 utterances
  std::vector<std::string> context_content;
  std::vector<std::string> user3;              // last 3 user utterances
  Vector last_user_mean, context_mean, user3_mean;
  DialogueAct act = DialogueAct::Other;
  LexicalFlags flags;
  std::set<std::string> last_user_bigrams, context_bigrams;
  std::set<std::string> last_user_entities, context_entities;
  std::size_t user_turns = 0;
};

/// Computes scoring features and reward features.
class FeatureExtractor {
 public:
  FeatureExtractor(FeatureLayout layout, std::shared_ptr<const EmbeddingTable> emb,
                   Nlu nlu = Nlu());

  const FeatureLayout& layout() const { return layout_; }
  const EmbeddingTable& embeddings() const { return *emb_; }
  const Nlu& nlu() const { return nlu_; }

  DialogueContext context(const Dialogue& dialogue) const;
  Vector scoring_features(const DialogueContext& ctx, const CandidateResponse& candidate) const;
  Vector scoring_features(const Dialogue& dialogue, const CandidateResponse& candidate) const;
  std::vector<Vector> scoring_features(const Dialogue& dialogue,
                                       const std::vector<CandidateResponse>& candidates) const;

 private:
  FeatureLayout layout_;
  std::shared_ptr<const EmbeddingTable> emb_;
  Nlu nlu_;
};

/// Named entities: capitalised tokens that are not stop-words (lower-cased).
std::set<std::string> named_entities(std::string_view text, const WordSet& stopwords);
std::set<std::string> bigrams(const std::vector<std::string>& tokens);

// ---------------------------------------------------------------------------
// Reward-model features.

inline constexpr std::size_t kRewardFeatureDim = 23;

namespace reward_slots {
inline constexpr std::size_t kAmt = 0;          // 5 class probabilities
inline constexpr std::size_t kPriority = 5;
inline constexpr std::size_t kGenericResponse = 6;
inline constexpr std::size_t kResponseLength = 7;  // length, sqrt
inline constexpr std::size_t kUserAct = 9;         // request, question, statement, profanity
inline constexpr std::size_t kSentiment = 13;      // negative, neutral, positive
inline constexpr std::size_t kGenericUser = 16;
inline constexpr std::size_t kUserLength = 17;     // length, sqrt
inline constexpr std::size_t kConfused = 19;
inline constexpr std::size_t kTurns = 20;          // n, sqrt n, log n
}  // namespace reward_slots

Vector reward_features(const Dialogue& dialogue, const CandidateResponse& candidate,
                       const Vector& amt_probs, bool is_priority, const Nlu& nlu = Nlu());

// ---------------------------------------------------------------------------

/// Logistic regression over scoring features.
class LogisticSelector {
 public:
  LogisticSelector() = default;
  LogisticSelector(Vector weights, double bias) : w_(std::move(weights)), b_(bias) {}

  bool trained() const { return w_.size() > 0; }
  double probability(const Vector& x) const;
  const Vector& weights() const { return w_; }
  double bias() const { return b_; }

  /// Full-batch gradient descent on L2-regularised log loss.
  static LogisticSelector fit(const std::vector<Vector>& x, const std::vector<int>& y,
                              double l2 = 1e-3, double lr = 0.5, std::size_t epochs = 300);

  nlohmann::json to_json() const;
  static LogisticSelector from_json(const nlohmann::json& j);

 private:
  Vector w_;
  double b_ = 0.0;
};

/// Adapts a feature-space scorer to the candidate-scorer hook.
CandidateScorer make_feature_scorer(std::shared_ptr<const FeatureExtractor> extractor,
                                    std::function<double(const Vector&)> score);

}  // namespace converse
