#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "converse/ensemble.hpp"
#include "converse/features.hpp"
#include "converse/mdp.hpp"
#include "helpers.hpp"

namespace testutil {

/// Class distribution with expected reward exactly `r`, split over adjacent classes.
inline converse::Vector probs_for_reward(double r) {
  converse::Vector p = converse::Vector::Zero(5);
  const double u = std::clamp(r + 2.0, 0.0, 4.0);
  const auto lo = static_cast<Eigen::Index>(std::min(3.0, std::floor(u)));
  p[lo] = 1.0 - (u - static_cast<double>(lo));
  p[lo + 1] = u - static_cast<double>(lo);
  return p;
}

/// Table lookup keyed by (record, action).
class TableOutcome : public converse::OutcomeModel {
 public:
  explicit TableOutcome(std::vector<std::vector<double>> rewards) : r_(std::move(rewards)) {}
  converse::Vector class_probs(const converse::HistoryRecord& rec, std::size_t a) const override {
    return probs_for_reward(r_.at(state_of(rec)).at(a));
  }
  static std::size_t state_of(const converse::HistoryRecord& rec) {
    return static_cast<std::size_t>(std::stoul(rec.id.substr(rec.id.find('#') + 1)));
  }

 private:
  std::vector<std::vector<double>> r_;
};

/// Deterministic next state keyed by (record, action).
class TableTransition : public converse::TransitionDistribution {
 public:
  TableTransition(std::vector<converse::AbstractState> states, std::vector<std::vector<std::size_t>> next)
      : states_(std::move(states)), next_(std::move(next)) {}
  converse::TransitionProbs probs(const converse::TransitionQuery& q) const override {
    const auto& z = states_.at(next_.at(TableOutcome::state_of(q.record)).at(q.action));
    converse::TransitionProbs p{converse::Vector::Zero(converse::kNumDialogueActs),
                               converse::Vector::Zero(converse::kNumSentiments), converse::Vector::Zero(2)};
    p.act[static_cast<Eigen::Index>(z.act)] = 1.0;
    p.sentiment[static_cast<Eigen::Index>(z.sentiment)] = 1.0;
    p.generic[z.generic ? 1 : 0] = 1.0;
    return p;
  }

 private:
  std::vector<converse::AbstractState> states_;
  std::vector<std::vector<std::size_t>> next_;
};

/// A small MDP with one record per state and one-hot (state, action) features.
struct TabularMdp {
  std::vector<converse::AbstractState> states;
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<std::size_t>> next;
  converse::HistoryStore store;
  std::unique_ptr<TableOutcome> outcome;
  std::unique_ptr<TableTransition> transition;
  std::unique_ptr<converse::MDP> mdp;

  TabularMdp(std::vector<std::vector<double>> r, std::vector<std::vector<std::size_t>> nx, std::size_t t_max,
             std::size_t feature_dim)
      : rewards(std::move(r)), next(std::move(nx)) {
    using namespace converse;
    const std::array<DialogueAct, 4> acts = {DialogueAct::Statement, DialogueAct::Request,
                                             DialogueAct::GenericQuestion, DialogueAct::Accept};
    std::vector<HistoryRecord> recs;
    for (std::size_t s = 0; s < rewards.size(); ++s) {
      states.push_back({acts.at(s), Sentiment::Neutral, false});
      HistoryRecord h;
      h.id = "tab#" + std::to_string(s);
      h.history = said("state " + std::to_string(s));
      h.z = states.back();
      h.initial = true;
      const std::size_t k = rewards[s].size();
      h.features = Matrix::Zero(static_cast<Eigen::Index>(feature_dim), static_cast<Eigen::Index>(k));
      for (std::size_t a = 0; a < k; ++a) {
        h.candidates.push_back({std::string(1, static_cast<char>('A' + a)), "act " + std::to_string(a), false, {}});
        h.features(static_cast<Eigen::Index>(s * k + a), static_cast<Eigen::Index>(a)) = 1.0;
      }
      recs.push_back(std::move(h));
    }
    store = HistoryStore(std::move(recs));
    outcome = std::make_unique<TableOutcome>(rewards);
    transition = std::make_unique<TableTransition>(states, next);
    MDPConfig cfg;
    cfg.t_max = t_max;
    mdp = std::make_unique<MDP>(MDP{store, *outcome, *transition, cfg});
  }

  /// Infinite-horizon action values by value iteration.
  std::vector<std::vector<double>> value_iteration(double gamma) const {
    std::vector<std::vector<double>> q(rewards.size());
    for (std::size_t s = 0; s < rewards.size(); ++s) q[s].assign(rewards[s].size(), 0.0);
    for (int it = 0; it < 2000; ++it) {
      auto nq = q;
      for (std::size_t s = 0; s < q.size(); ++s)
        for (std::size_t a = 0; a < q[s].size(); ++a) {
          const auto& qn = q[next[s][a]];
          nq[s][a] = rewards[s][a] + gamma * *std::max_element(qn.begin(), qn.end());
        }
      q = nq;
    }
    return q;
  }
};

/// Returns a fixed utterance from a named model.
class CannedModel : public converse::ResponseModel {
 public:
  CannedModel(std::string name, std::string text, bool priority = false)
      : name_(std::move(name)), text_(std::move(text)), priority_(priority) {}
  const std::string& name() const override { return name_; }
  std::optional<converse::CandidateResponse> generate(const converse::Dialogue&, converse::Rng&) const override {
    if (text_.empty()) return std::nullopt;
    return converse::CandidateResponse{name_, text_, priority_, {}};
  }

 private:
  std::string name_, text_;
  bool priority_;
};

inline std::shared_ptr<const converse::FeatureExtractor> default_extractor(std::size_t dim = 16) {
  converse::FeatureConfig c;
  c.embedding_dim = dim;
  c.pos_buckets = 10;
  return std::make_shared<converse::FeatureExtractor>(converse::FeatureLayout(c),
                                                      converse::bundled_embeddings(dim));
}

}  // namespace testutil
