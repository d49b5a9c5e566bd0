#include <set>

#include "converse/error.hpp"
#include "converse/reward.hpp"
#include "doctest.h"

using namespace converse;

namespace {

std::vector<RewardExample> linear_data(std::size_t n, const Vector& w, double b, double noise,
                                       Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<RewardExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(w.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = g(rng);
    out.push_back({x, w.dot(x) + b + noise * g(rng)});
  }
  return out;
}

Vector planted_weights(Rng& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector w(static_cast<Eigen::Index>(kRewardFeatureDim));
  for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = u(rng);
  return w;
}

LinearRegressor constant_member(double c) {
  return {Vector::Zero(static_cast<Eigen::Index>(kRewardFeatureDim)), c, 0.0};
}

}  // namespace

TEST_SUITE("reward") {
  TEST_CASE("closed form agrees with gradient descent") {
    Rng rng(1);
    const auto data = linear_data(200, planted_weights(rng, 0.3), 3.0, 0.5, rng);
    for (double l2 : {1.0, 0.1}) {
      const auto a = fit_ridge(data, l2);
      const auto b = fit_ridge_gd(data, l2, 0.1, 4000);
      CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(std::abs(a.bias - b.bias) < 1e-6);
    }
  }

  TEST_CASE("constant targets give a constant model") {
    Rng rng(2);
    auto data = linear_data(50, Vector::Zero(23), 0.0, 0.0, rng);
    for (auto& e : data) e.score = 3.7;
    const auto rep = train_bagged(data, 11);
    for (const auto& m : rep.model.members()) CHECK(m.predict(data[3].features) == doctest::Approx(3.7).epsilon(1e-6));
    CHECK(rep.model.predict(data[0].features) == doctest::Approx(3.7).epsilon(1e-9));
  }

  TEST_CASE("noise-free linear data is fit exactly") {
    Rng rng(3);
    const Vector w = planted_weights(rng, 0.2);
    const auto train = linear_data(400, w, 3.0, 0.0, rng);
    auto test = linear_data(200, w, 3.0, 0.0, rng);
    // Keep test targets inside the clip range so clipping cannot mask errors.
    std::erase_if(test, [](const RewardExample& e) { return e.score < 1 || e.score > 5; });
    const auto rep = train_bagged(train, 5);
    CHECK(evaluate_reward(rep.model, test).mse < 1e-6);
  }

  TEST_CASE("sub-hold-outs are pairwise disjoint") {
    Rng rng(4);
    const auto data = linear_data(53, planted_weights(rng, 0.1), 3.0, 0.3, rng);
    const auto rep = train_bagged(data, 9);
    REQUIRE(rep.holdouts.size() == 5);
    std::set<std::size_t> all;
    for (const auto& h : rep.holdouts) {
      CHECK(h.size() == 53 / 5);
      all.insert(h.begin(), h.end());
    }
    CHECK(all.size() == 5 * (53 / 5));
    CHECK_THROWS_AS(train_bagged({data.begin(), data.begin() + 9}, 0), TooFewExamples);
  }

  TEST_CASE("prediction is the clipped member mean") {
    std::vector<LinearRegressor> ms;
    for (double c : {1, 2, 3, 4, 5}) ms.push_back(constant_member(c));
    const Vector x = Vector::Zero(23);
    CHECK(BaggedRewardModel(ms, 3).predict(x) == 3.0);
    ms.assign(5, constant_member(7.2));
    CHECK(BaggedRewardModel(ms, 3).predict(x) == 5.0);
    ms.assign(5, constant_member(2.4));
    CHECK(BaggedRewardModel(ms, 3).predict(x) == doctest::Approx(2.4));
    CHECK_THROWS_AS(BaggedRewardModel(std::vector<LinearRegressor>(4, constant_member(1)), 3),
                    InvalidArgument);
  }

  TEST_CASE("output range and agreement monotonicity") {
    Rng rng(5);
    const auto data = linear_data(100, planted_weights(rng, 2.0), 3.0, 1.0, rng);
    const auto model = train_bagged(data, 1).model;
    std::normal_distribution<double> g(0.0, 10.0);
    for (int t = 0; t < 500; ++t) {
      Vector x(23);
      for (Eigen::Index k = 0; k < 23; ++k) x[k] = g(rng);
      const double p = model.predict(x);
      CHECK((p >= 1.0 && p <= 5.0));
      auto shifted = model.members();
      for (auto& m : shifted) m.bias += 0.25;
      CHECK(BaggedRewardModel(shifted, 3).predict(x) >= p);
    }
  }

  TEST_CASE("planted data beats the mean predictor; retraining reproduces") {
    Rng rng(6);
    const Vector w = planted_weights(rng, 0.3);
    const auto train = linear_data(300, w, 3.0, 0.5, rng);
    const auto test = linear_data(200, w, 3.0, 0.5, rng);
    const auto a = train_bagged(train, 21).model;
    const auto m = evaluate_reward(a, test);
    CHECK(m.mse < m.baseline_mse);
    CHECK(m.baseline_spearman == 0.0);
    CHECK(m.spearman > 0.5);
    const auto b = train_bagged(train, 21).model;
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(BaggedRewardModel::from_json(a.to_json()).to_json() == a.to_json());
  }
}
