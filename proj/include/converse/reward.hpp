#pragma once

#include <filesystem>
#include <vector>

#include "converse/embeddings.hpp"
#include "converse/features.hpp"
#include "json.hpp"

namespace converse {

struct LinearRegressor {
  Vector weights;
  double bias = 0.0;
  double l2 = 0.0;

  double predict(const Vector& x) const { return weights.dot(x) + bias; }
  nlohmann::json to_json() const;
  static LinearRegressor from_json(const nlohmann::json& j);
};

struct RewardExample {
  Vector features;  // kRewardFeatureDim entries
  double score = 3.0;
};

/// Minimiser of mean squared error + l2 * |w|^2 (the bias is not penalised).
LinearRegressor fit_ridge(const std::vector<RewardExample>& data, double l2);
/// The same objective by full-batch gradient descent; used to cross-check fit_ridge.
LinearRegressor fit_ridge_gd(const std::vector<RewardExample>& data, double l2, double lr,
                             std::size_t iterations);

inline const std::vector<double> kDefaultRidgeGrid = {10, 1, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 0};
inline constexpr std::size_t kNumBagMembers = 5;

class BaggedRewardModel {
 public:
  static constexpr double kMin = 1.0;
  static constexpr double kMax = 5.0;

  BaggedRewardModel() = default;
  BaggedRewardModel(std::vector<LinearRegressor> members, double train_mean);

  const std::vector<LinearRegressor>& members() const { return members_; }
  double train_mean() const { return train_mean_; }

  double predict_raw(const Vector& x) const;
  /// Member mean clipped to [1, 5].
  double predict(const Vector& x) const;

  nlohmann::json to_json() const;
  static BaggedRewardModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static BaggedRewardModel load(const std::filesystem::path& path);

 private:
  std::vector<LinearRegressor> members_;
  double train_mean_ = 3.0;
};

struct BaggedTrainReport {
  BaggedRewardModel model;
  std::vector<std::vector<std::size_t>> holdouts;  // example indices per member
  std::vector<double> holdout_mse;                 // at the selected l2
};

/// Five members, each fit on the data minus its own fifth of one shared
/// permutation; l2 picked per member on that fifth.
BaggedTrainReport train_bagged(const std::vector<RewardExample>& data, std::uint64_t seed,
                               const std::vector<double>& l2_grid = kDefaultRidgeGrid);

struct RewardMetrics {
  double mse = 0.0;
  double spearman = 0.0;
  double baseline_mse = 0.0;       // constant train-mean predictor
  double baseline_spearman = 0.0;  // always 0 by the constant-output convention
};

RewardMetrics evaluate_reward(const BaggedRewardModel& model, const std::vector<RewardExample>& test);

nlohmann::json to_json(const RewardExample& e);
RewardExample reward_example_from_json(const nlohmann::json& j);

}  // namespace converse
