#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/embeddings.hpp"
#include "converse/features.hpp"
#include "json.hpp"

namespace converse {

inline constexpr std::size_t kNumClasses = 5;

enum class ParamBlock { W1, B1, W2, B2, W3, B3, OutClass, OutSkip, OutBias };
inline constexpr std::size_t kNumParamBlocks = 9;
std::string to_string(ParamBlock b);

/// Which parameter blocks an optimiser may touch.
struct ParamMask {
  std::array<bool, kNumParamBlocks> on{};
  bool operator[](ParamBlock b) const { return on[static_cast<std::size_t>(b)]; }

  static ParamMask all();
  static ParamMask none();
  static ParamMask of(std::initializer_list<ParamBlock> blocks);
  /// Everything except the output head (class weights, skip, bias).
  static ParamMask supervised();
  /// Second hidden layer only.
  static ParamMask reinforce();
  /// Output head and skip connection.
  static ParamMask qlearning();
};

struct ForwardResult {
  Vector probs;   // 5 class probabilities
  double score = 0.0;
  Vector hidden;  // second-layer units (input to the skip connection)
};

/// Batched intermediate values kept for the backward pass.
struct ForwardCache {
  Matrix pre1, a1, a2, probs;
  Vector scores;
};

/// Two hidden layers, a 5-way softmax, and a scalar score head
/// score = out_class . probs + out_skip . hidden + out_bias.
/// Parameters live in one flat vector so that optimisers and masks work by block.
class ScoringNet {
 public:
  ScoringNet() = default;
  /// Zero-initialised net with the frozen head [1..5], zero skip, zero bias.
  ScoringNet(FeatureLayout layout, std::size_t h1, std::size_t h2);
  /// Glorot-uniform weights, zero biases, frozen head as above.
  ScoringNet(FeatureLayout layout, std::size_t h1, std::size_t h2, Rng& rng);

  const FeatureLayout& layout() const { return layout_; }
  std::size_t input_dim() const { return layout_.total_dim(); }
  std::size_t h1() const { return h1_; }
  std::size_t h2() const { return h2_; }

  std::size_t num_params() const { return static_cast<std::size_t>(theta_.size()); }
  const Vector& params() const { return theta_; }
  Vector& params() { return theta_; }
  std::pair<std::size_t, std::size_t> block_range(ParamBlock b) const;  // offset, length

  Eigen::Map<const Matrix> W1() const { return cmat(ParamBlock::W1, h1_, input_dim()); }
  Eigen::Map<const Vector> b1() const { return cvec(ParamBlock::B1); }
  Eigen::Map<const Matrix> W2() const { return cmat(ParamBlock::W2, h2_, h1_); }
  Eigen::Map<const Vector> b2() const { return cvec(ParamBlock::B2); }
  Eigen::Map<const Matrix> W3() const { return cmat(ParamBlock::W3, kNumClasses, h2_); }
  Eigen::Map<const Vector> b3() const { return cvec(ParamBlock::B3); }
  Eigen::Map<const Vector> out_class() const { return cvec(ParamBlock::OutClass); }
  Eigen::Map<const Vector> out_skip() const { return cvec(ParamBlock::OutSkip); }
  double out_bias() const { return theta_[static_cast<Eigen::Index>(block_range(ParamBlock::OutBias).first)]; }

  Eigen::Map<Matrix> W1() { return mat(ParamBlock::W1, h1_, input_dim()); }
  Eigen::Map<Vector> b1() { return vec(ParamBlock::B1); }
  Eigen::Map<Matrix> W2() { return mat(ParamBlock::W2, h2_, h1_); }
  Eigen::Map<Vector> b2() { return vec(ParamBlock::B2); }
  Eigen::Map<Matrix> W3() { return mat(ParamBlock::W3, kNumClasses, h2_); }
  Eigen::Map<Vector> b3() { return vec(ParamBlock::B3); }
  Eigen::Map<Vector> out_class() { return vec(ParamBlock::OutClass); }
  Eigen::Map<Vector> out_skip() { return vec(ParamBlock::OutSkip); }
  void set_out_bias(double v);

  ForwardResult forward(const Vector& x) const;
  double score(const Vector& x) const { return forward(x).score; }
  /// Columns of X are feature vectors.
  ForwardCache forward_batch(const Matrix& x) const;
  /// Accumulates into `grad` (flat, same layout as params) the gradient of
  /// sum_j [g_logits(:,j) . logits_j + g_score(j) * score_j].
  void backward_batch(const Matrix& x, const ForwardCache& cache, const Matrix& g_logits,
                      const Vector& g_score, Vector& grad) const;
  /// Single-example convenience wrapper; returns a fresh flat gradient.
  Vector backward(const Vector& x, const Vector& g_logits, double g_score) const;

  /// FNV-1a over the raw bytes of one block.
  std::uint64_t block_hash(ParamBlock b) const;

  nlohmann::json to_json() const;
  static ScoringNet from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ScoringNet load(const std::filesystem::path& path);

  /// Throws LayoutMismatch when a feature vector has the wrong dimension.
  void check_input(const Vector& x) const;

 private:
  Eigen::Map<const Matrix> cmat(ParamBlock b, std::size_t r, std::size_t c) const;
  Eigen::Map<const Vector> cvec(ParamBlock b) const;
  Eigen::Map<Matrix> mat(ParamBlock b, std::size_t r, std::size_t c);
  Eigen::Map<Vector> vec(ParamBlock b);
  void compute_offsets();
  void reset_head();

  FeatureLayout layout_;
  std::size_t h1_ = 0, h2_ = 0;
  std::array<std::size_t, kNumParamBlocks + 1> offsets_{};
  Vector theta_;
};

/// Vector of zeros and ones selecting the masked entries of the flat parameters.
Vector mask_vector(const ScoringNet& net, const ParamMask& mask);

/// Adam over a flat parameter vector; entries outside the mask are never written.
class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ScoringNet& net, const Vector& grad, const ParamMask& mask);
  double lr() const { return lr_; }

 private:
  double lr_, b1_, b2_, eps_;
  Vector m_, v_;
  std::size_t t_ = 0;
};

/// Plain gradient step theta += scale * grad restricted to the mask.
void masked_axpy(ScoringNet& net, double scale, const Vector& grad, const ParamMask& mask);

// ---------------------------------------------------------------------------
// Supervised training.

struct AMTExample {
  Dialogue context;
  CandidateResponse candidate;
  int label = 3;  // 1..5
};

/// Feature vector with a 1..5 label; `group` keeps dialogue ids for splitting.
struct LabeledExample {
  Vector x;
  int label = 3;
  std::string group;
};

/// Label clean-up applied to crowd-sourced labels.
std::vector<AMTExample> preprocess_labels(std::vector<AMTExample> data, const Nlu& nlu = Nlu());

struct TrainConfig {
  std::size_t h1 = 500;
  std::size_t h2 = 20;
  double learning_rate = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  double l2 = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 5;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig()); }
};

struct HyperGrid {
  std::vector<double> learning_rates = {1e-2, 1e-3, 1e-4};
  std::vector<double> l2 = {10, 1, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
};

struct TrainedScorer {
  ScoringNet net;
  double learning_rate = 0.0;
  double l2 = 0.0;
  double dev_log_likelihood = 0.0;  // mean per example
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// One training run: Adam on cross-entropy plus L2 on weight matrices, early
/// stopping on dev log-likelihood. The output head stays frozen.
TrainedScorer train_supervised_run(const std::vector<LabeledExample>& train,
                                   const std::vector<LabeledExample>& dev,
                                   const FeatureLayout& layout, const TrainConfig& config);

/// Grid search; the best point by dev log-likelihood is returned.
TrainedScorer train_supervised(const std::vector<LabeledExample>& train,
                               const std::vector<LabeledExample>& dev, const FeatureLayout& layout,
                               const HyperGrid& grid, const TrainConfig& config);

/// Mean log-likelihood of the labels under the class head.
double mean_log_likelihood(const ScoringNet& net, const std::vector<LabeledExample>& data);

struct RegressionExample {
  Vector x;
  double target = 0.0;
};

struct FinetuneResult {
  ScoringNet net;
  std::vector<double> train_mse;    // per epoch, after the epoch; entry 0 = before training
  std::vector<double> holdout_mse;  // same indexing
  std::size_t best_epoch = 0;
};

/// Squared-error fine-tuning of the scalar score towards regression targets,
/// 80/20 train/hold-out split, early stopping, no regularisation.
FinetuneResult finetune_learned_reward(const ScoringNet& initial,
                                       const std::vector<RegressionExample>& pairs,
                                       const TrainConfig& config,
                                       const ParamMask& mask = ParamMask::all());

// ---------------------------------------------------------------------------
// Metrics.

double pearson(const std::vector<double>& a, const std::vector<double>& b);
double spearman(const std::vector<double>& a, const std::vector<double>& b);
double mse(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> average_ranks(const std::vector<double>& v);

struct ScoringMetrics {
  double pearson = 0.0;
  double spearman = 0.0;
  double mse = 0.0;
  double accuracy = 0.0;
  double log_likelihood = 0.0;
};

ScoringMetrics evaluate_scoring(const ScoringNet& net, const std::vector<LabeledExample>& data);
ScoringMetrics evaluate_predictions(const std::vector<double>& predicted,
                                    const std::vector<double>& labels);

/// Converts AMT examples to feature vectors with the given extractor.
std::vector<LabeledExample> featurize(const std::vector<AMTExample>& data,
                                      const FeatureExtractor& extractor);

}  // namespace converse
