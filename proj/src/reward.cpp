#include "converse/reward.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>

#include "converse/error.hpp"
#include "converse/scoring.hpp"

namespace converse {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_dims(const std::vector<RewardExample>& data) {
  if (data.empty()) throw TooFewExamples("regression needs at least one example");
  const auto d = data.front().features.size();
  for (const auto& e : data)
    if (e.features.size() != d) throw LayoutMismatch("reward feature vectors differ in length");
}

}  // namespace

nlohmann::json LinearRegressor::to_json() const {
  return {{"weights", to_std(weights)}, {"bias", bias}, {"l2", l2}};
}

LinearRegressor LinearRegressor::from_json(const nlohmann::json& j) {
  LinearRegressor r;
  r.weights = from_std(j.at("weights").get<std::vector<double>>());
  r.bias = j.at("bias").get<double>();
  r.l2 = j.at("l2").get<double>();
  if (!r.weights.allFinite() || !std::isfinite(r.bias))
    throw InvalidArgument("non-finite regressor parameters");
  return r;
}

LinearRegressor fit_ridge(const std::vector<RewardExample>& data, double l2) {
  check_dims(data);
  if (l2 < 0) throw InvalidArgument("l2 must be non-negative");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = data.front().features.size();
  Matrix x(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = data[static_cast<std::size_t>(i)].features.transpose();
    y[i] = data[static_cast<std::size_t>(i)].score;
  }
  // Centring removes the unpenalised bias from the normal equations.
  const Vector mx = x.colwise().mean().transpose();
  const double my = y.mean();
  const Matrix xc = x.rowwise() - mx.transpose();
  const Vector yc = y.array() - my;
  Matrix gram = xc.transpose() * xc / static_cast<double>(n);
  const Vector rhs = xc.transpose() * yc / static_cast<double>(n);

  LinearRegressor r;
  r.l2 = l2;
  if (l2 > 0) {
    gram.diagonal().array() += l2;
    r.weights = gram.ldlt().solve(rhs);
  } else {
    r.weights = gram.completeOrthogonalDecomposition().solve(rhs);
  }
  r.bias = my - mx.dot(r.weights);
  return r;
}

LinearRegressor fit_ridge_gd(const std::vector<RewardExample>& data, double l2, double lr,
                             std::size_t iterations) {
  check_dims(data);
  const auto d = data.front().features.size();
  LinearRegressor r;
  r.l2 = l2;
  r.weights = Vector::Zero(static_cast<Eigen::Index>(d));
  const double n = static_cast<double>(data.size());
  for (std::size_t it = 0; it < iterations; ++it) {
    Vector gw = 2.0 * l2 * r.weights;
    double gb = 0.0;
    for (const auto& e : data) {
      const double res = r.predict(e.features) - e.score;
      gw += (2.0 / n) * res * e.features;
      gb += (2.0 / n) * res;
    }
    r.weights -= lr * gw;
    r.bias -= lr * gb;
  }
  return r;
}

BaggedRewardModel::BaggedRewardModel(std::vector<LinearRegressor> members, double train_mean)
    : members_(std::move(members)), train_mean_(train_mean) {
  if (members_.size() != kNumBagMembers)
    throw InvalidArgument("bagged reward model needs exactly 5 members");
}

double BaggedRewardModel::predict_raw(const Vector& x) const {
  if (members_.empty()) throw InvalidArgument("reward model has no members");
  double s = 0.0;
  for (const auto& m : members_) {
    if (m.weights.size() != x.size()) throw LayoutMismatch("reward feature dimension mismatch");
    s += m.predict(x);
  }
  return s / static_cast<double>(members_.size());
}

double BaggedRewardModel::predict(const Vector& x) const {
  return std::clamp(predict_raw(x), kMin, kMax);
}

nlohmann::json BaggedRewardModel::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) members.push_back(m.to_json());
  return {{"format", "converse.reward_model"},
          {"version", 1},
          {"clip", {kMin, kMax}},
          {"train_mean", train_mean_},
          {"members", members}};
}

BaggedRewardModel BaggedRewardModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "converse.reward_model")
    throw SchemaError("not a reward model file");
  std::vector<LinearRegressor> members;
  for (const auto& m : j.at("members")) members.push_back(LinearRegressor::from_json(m));
  return BaggedRewardModel(std::move(members), j.at("train_mean").get<double>());
}

void BaggedRewardModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

BaggedRewardModel BaggedRewardModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

BaggedTrainReport train_bagged(const std::vector<RewardExample>& data, std::uint64_t seed,
                               const std::vector<double>& l2_grid) {
  if (data.size() < 10) throw TooFewExamples("reward model needs at least 10 examples");
  if (l2_grid.empty()) throw InvalidArgument("empty l2 grid");
  check_dims(data);

  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = derive_rng(seed, 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t hold = data.size() / kNumBagMembers;

  BaggedTrainReport report;
  std::vector<LinearRegressor> members;
  for (std::size_t k = 0; k < kNumBagMembers; ++k) {
    std::vector<std::size_t> held(perm.begin() + static_cast<long>(k * hold),
                                  perm.begin() + static_cast<long>((k + 1) * hold));
    std::vector<bool> is_held(data.size(), false);
    for (auto i : held) is_held[i] = true;
    std::vector<RewardExample> sub_train, sub_hold;
    for (std::size_t i : perm) (is_held[i] ? sub_hold : sub_train).push_back(data[i]);

    LinearRegressor best;
    double best_err = std::numeric_limits<double>::infinity();
    for (double l2 : l2_grid) {
      const auto r = fit_ridge(sub_train, l2);
      double err = 0.0;
      for (const auto& e : sub_hold) err += std::pow(r.predict(e.features) - e.score, 2);
      err /= static_cast<double>(sub_hold.size());
      if (err < best_err) {
        best_err = err;
        best = r;
      }
    }
    members.push_back(best);
    report.holdouts.push_back(std::move(held));
    report.holdout_mse.push_back(best_err);
  }
  double mean = 0.0;
  for (const auto& e : data) mean += e.score;
  mean /= static_cast<double>(data.size());
  report.model = BaggedRewardModel(std::move(members), mean);
  return report;
}

RewardMetrics evaluate_reward(const BaggedRewardModel& model, const std::vector<RewardExample>& test) {
  if (test.empty()) throw EmptySplit("empty reward test set");
  std::vector<double> pred, base, truth;
  for (const auto& e : test) {
    pred.push_back(model.predict(e.features));
    base.push_back(model.train_mean());
    truth.push_back(e.score);
  }
  RewardMetrics m;
  m.mse = mse(pred, truth);
  m.spearman = spearman(pred, truth);
  m.baseline_mse = mse(base, truth);
  m.baseline_spearman = spearman(base, truth);
  return m;
}

nlohmann::json to_json(const RewardExample& e) {
  return {{"reward_features", to_std(e.features)}, {"score", e.score}};
}

RewardExample reward_example_from_json(const nlohmann::json& j) {
  RewardExample e;
  e.features = from_std(j.at("reward_features").get<std::vector<double>>());
  e.score = j.at("score").get<double>();
  if (e.score < 1.0 || e.score > 5.0) throw InvalidArgument("score outside [1,5]");
  return e;
}

}  // namespace converse
