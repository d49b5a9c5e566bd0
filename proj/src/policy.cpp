#include "converse/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "converse/error.hpp"

namespace converse {

std::size_t Policy::choose(const Matrix& features, const std::vector<CandidateResponse>& candidates,
                           Rng& rng) const {
  if (candidates.empty()) throw EmptyCandidateSet("policy called with no candidates");
  return pick(distribution(features, candidates), stochastic(), rng);
}

std::size_t Policy::pick(const std::vector<double>& p, bool stochastic, Rng& rng) {
  if (p.empty()) throw EmptyCandidateSet("empty distribution");
  if (!stochastic) return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  std::discrete_distribution<std::size_t> d(p.begin(), p.end());
  return d(rng);
}

std::string to_string(PolicyVariant v) {
  switch (v) {
    case PolicyVariant::GreedyActionValue: return "greedy";
    case PolicyVariant::StochasticSoftmax: return "stochastic";
    case PolicyVariant::GreedyOfStochastic: return "greedy-of-stochastic";
  }
  return "?";
}

namespace {

PolicyVariant variant_from_string(const std::string& s) {
  for (auto v : {PolicyVariant::GreedyActionValue, PolicyVariant::StochasticSoftmax,
                 PolicyVariant::GreedyOfStochastic})
    if (to_string(v) == s) return v;
  throw InvalidArgument("unknown policy variant: " + s);
}

void check_columns(const Matrix& f, const std::vector<CandidateResponse>& c) {
  if (c.empty()) throw EmptyCandidateSet("policy called with no candidates");
  if (static_cast<std::size_t>(f.cols()) != c.size())
    throw InvalidArgument("feature columns do not match candidates");
}

}  // namespace

std::vector<double> softmax(const Vector& scores, double temperature) {
  if (!(temperature > 0)) throw InvalidArgument("temperature must be positive");
  const double m = scores.maxCoeff();
  std::vector<double> p(static_cast<std::size_t>(scores.size()));
  double z = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    p[static_cast<std::size_t>(i)] = std::exp((scores[i] - m) / temperature);
    z += p[static_cast<std::size_t>(i)];
  }
  for (auto& x : p) x /= z;
  return p;
}

std::vector<double> one_hot_argmax(const Vector& scores) {
  std::vector<double> p(static_cast<std::size_t>(scores.size()), 0.0);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  p[static_cast<std::size_t>(best)] = 1.0;
  return p;
}

Matrix stack_columns(const std::vector<Vector>& cols) {
  if (cols.empty()) return Matrix();
  Matrix m(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = cols[j];
  return m;
}

NetPolicy::NetPolicy(PolicyVariant variant, ScoringNet net, double temperature, std::string id)
    : variant_(variant), net_(std::move(net)), temperature_(temperature), id_(std::move(id)) {
  if (!(temperature_ > 0)) throw InvalidArgument("temperature must be positive");
  if (id_.empty()) id_ = to_string(variant_);
}

std::vector<double> NetPolicy::distribution(const Matrix& features,
                                            const std::vector<CandidateResponse>& candidates) const {
  check_columns(features, candidates);
  const Vector s = net_.forward_batch(features).scores;
  if (variant_ == PolicyVariant::StochasticSoftmax) return softmax(s, temperature_);
  return one_hot_argmax(s);
}

nlohmann::json NetPolicy::to_json() const {
  return {{"format", "converse.policy"},
          {"version", 1},
          {"id", id_},
          {"variant", to_string(variant_)},
          {"temperature", temperature_},
          {"net", net_.to_json()}};
}

NetPolicy NetPolicy::from_json(const nlohmann::json& j) {
  if (j.value("format", "") == "converse.scoring_net")
    return NetPolicy(PolicyVariant::GreedyActionValue, ScoringNet::from_json(j));
  if (j.value("format", "") != "converse.policy") throw SchemaError("not a policy file");
  return NetPolicy(variant_from_string(j.at("variant").get<std::string>()),
                   ScoringNet::from_json(j.at("net")), j.at("temperature").get<double>(),
                   j.value("id", ""));
}

std::vector<double> RandomPolicy::distribution(const Matrix&,
                                               const std::vector<CandidateResponse>& candidates) const {
  if (candidates.empty()) throw EmptyCandidateSet("policy called with no candidates");
  return std::vector<double>(candidates.size(), 1.0 / static_cast<double>(candidates.size()));
}

FixedModelPolicy::FixedModelPolicy(std::vector<std::string> preference)
    : preference_(std::move(preference)) {}

std::vector<double> FixedModelPolicy::distribution(
    const Matrix&, const std::vector<CandidateResponse>& candidates) const {
  if (candidates.empty()) throw EmptyCandidateSet("policy called with no candidates");
  const auto rank = [&](const std::string& m) {
    const auto it = std::find(preference_.begin(), preference_.end(), m);
    return static_cast<std::size_t>(it - preference_.begin());
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (rank(candidates[i].model_id) < rank(candidates[best].model_id)) best = i;
  std::vector<double> p(candidates.size(), 0.0);
  p[best] = 1.0;
  return p;
}

// ---------------------------------------------------------------------------

std::string to_string(RewardMode m) {
  return m == RewardMode::FinalScore ? "final-score" : "learned-reward";
}

RewardMode reward_mode_from_string(const std::string& s) {
  if (s == "final-score") return RewardMode::FinalScore;
  if (s == "learned-reward") return RewardMode::LearnedReward;
  throw InvalidArgument("unknown reward mode: " + s);
}

LearnedRewardFn make_learned_reward(std::shared_ptr<const BaggedRewardModel> model,
                                    std::shared_ptr<const ScoringNet> scorer,
                                    std::shared_ptr<const FeatureExtractor> extractor) {
  return [model, scorer, extractor](const Dialogue& h, const CandidateResponse& a) {
    const Vector probs = scorer->forward(extractor->scoring_features(h, a)).probs;
    return model->predict(reward_features(h, a, probs, a.priority, extractor->nlu()));
  };
}

std::vector<RewardExample> reward_examples_from_logs(const std::vector<Dialogue>& logs, const ScoringNet& scorer,
                                                     const FeatureExtractor& extractor) {
  std::vector<RewardExample> out;
  for (const auto& d : logs) {
    if (!d.final_score) continue;
    for (const auto& s : d.selections) {
      if (s.empty()) continue;
      const Dialogue h = d.prefix(s.turn_index);
      if (!h.last_user()) continue;
      const Vector probs = scorer.forward(extractor.scoring_features(h, s.chosen())).probs;
      out.push_back({reward_features(h, s.chosen(), probs, s.was_priority, extractor.nlu()), *d.final_score});
    }
  }
  return out;
}

std::vector<RegressionExample> learned_reward_targets(const std::vector<Dialogue>& logs,
                                                      const LearnedRewardFn& learned,
                                                      const FeatureExtractor& extractor) {
  std::vector<RegressionExample> out;
  for (const auto& d : logs) {
    for (const auto& s : d.selections) {
      if (!is_policy_selection(s)) continue;
      const Dialogue h = d.prefix(s.turn_index);
      if (!h.last_user()) continue;
      out.push_back({extractor.scoring_features(h, s.chosen()), learned(h, s.chosen())});
    }
  }
  return out;
}

bool is_policy_selection(const SelectionRecord& s) { return !s.empty() && !s.was_priority; }

std::vector<double> shaped_rewards(const Dialogue& dialogue, RewardMode mode,
                                   const LearnedRewardFn& learned, const Nlu& nlu) {
  std::vector<const SelectionRecord*> chosen;
  for (const auto& s : dialogue.selections)
    if (is_policy_selection(s)) chosen.push_back(&s);
  if (mode == RewardMode::FinalScore && !dialogue.final_score)
    throw InvalidArgument("final-score shaping needs a final score");
  if (mode == RewardMode::LearnedReward && !learned)
    throw InvalidArgument("learned-reward shaping needs a reward function");

  std::vector<double> out;
  const double per_turn =
      mode == RewardMode::FinalScore ? *dialogue.final_score / static_cast<double>(chosen.size()) : 0.0;
  for (const auto* s : chosen) {
    const std::size_t next = s->turn_index + 1;
    if (next < dialogue.turns.size() && dialogue.turns[next].speaker == Speaker::User &&
        nlu.classify_sentiment(dialogue.turns[next].text) == Sentiment::Negative) {
      out.push_back(0.0);
      continue;
    }
    if (mode == RewardMode::FinalScore) {
      out.push_back(per_turn);
    } else {
      out.push_back(learned(dialogue.prefix(s->turn_index), s->chosen()));
    }
  }
  return out;
}

RecordedDialogue record_dialogue(const Dialogue& dialogue, const FeatureExtractor& extractor,
                                 RewardMode mode, const LearnedRewardFn& learned) {
  const auto rewards = shaped_rewards(dialogue, mode, learned, extractor.nlu());
  RecordedDialogue out;
  out.id = dialogue.id;
  std::size_t k = 0;
  for (const auto& s : dialogue.selections) {
    if (!is_policy_selection(s)) continue;
    RecordedStep step;
    const Dialogue h = dialogue.prefix(s.turn_index);
    step.features = stack_columns(extractor.scoring_features(h, s.candidates));
    step.candidates = s.candidates;
    step.chosen = s.chosen_index;
    if (s.policy_distribution) {
      step.behavior = *s.policy_distribution;
    } else {
      step.behavior.assign(s.candidates.size(), 0.0);
      step.behavior[s.chosen_index] = 1.0;
    }
    const std::size_t next = s.turn_index + 1;
    if (next < dialogue.turns.size())
      step.sentiment_next = extractor.nlu().classify_sentiment(dialogue.turns[next].text);
    step.reward = rewards[k++];
    out.steps.push_back(std::move(step));
  }
  return out;
}

double importance_weight(const Policy& target, const RecordedStep& step) {
  if (step.chosen >= step.behavior.size() || step.behavior.size() != step.candidates.size())
    throw InvalidArgument("malformed recorded step");
  const double mu = step.behavior[step.chosen];
  if (!(mu > 0)) throw ZeroBehaviorProbability("behaviour probability of the logged action is 0");
  return target.distribution(step.features, step.candidates)[step.chosen] / mu;
}

OffPolicyEstimate offpolicy_estimate(const Policy& target,
                                     const std::vector<RecordedDialogue>& dataset) {
  if (dataset.empty()) throw EmptySplit("off-policy estimate over no dialogues");
  OffPolicyEstimate e;
  for (const auto& d : dataset) {
    for (const auto& s : d.steps) {
      const double c = importance_weight(target, s);
      e.expected_return += c * s.reward;
      e.expected_steps += c;
    }
  }
  const double n = static_cast<double>(dataset.size());
  e.expected_return /= n;
  e.expected_steps /= n;
  return e;
}

Vector reinforce_gradient(const NetPolicy& policy, const std::vector<const RecordedStep*>& batch,
                          std::vector<double>* weights) {
  const ScoringNet& net = policy.net();
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  if (weights) weights->clear();
  if (batch.empty()) return grad;
  const double lam = policy.temperature();
  for (const auto* s : batch) {
    const double c = importance_weight(policy, *s);  // validates the step
    if (weights) weights->push_back(c);
    if (s->reward == 0.0) continue;
    const auto cache = net.forward_batch(s->features);
    const auto pi = softmax(cache.scores, lam);
    const auto k = static_cast<Eigen::Index>(pi.size());
    Vector gs(k);
    for (Eigen::Index j = 0; j < k; ++j)
      gs[j] = c * s->reward / lam *
              ((static_cast<std::size_t>(j) == s->chosen ? 1.0 : 0.0) - pi[static_cast<std::size_t>(j)]);
    net.backward_batch(s->features, cache, Matrix::Zero(static_cast<Eigen::Index>(kNumClasses), k), gs,
                       grad);
  }
  grad /= static_cast<double>(batch.size());
  return grad;
}

std::vector<double> reinforce_update(NetPolicy& policy, const std::vector<const RecordedStep*>& batch,
                                     double lr, const ParamMask& mask) {
  if (policy.variant() != PolicyVariant::StochasticSoftmax)
    throw InvalidArgument("REINFORCE needs a stochastic policy");
  std::vector<double> w;
  const Vector g = reinforce_gradient(policy, batch, &w);
  masked_axpy(policy.net(), lr, g, mask);
  return w;
}

nlohmann::json ReinforceConfig::to_json() const {
  return {{"temperatures", temperatures}, {"learning_rates", learning_rates}, {"epochs", epochs},
          {"batch_size", batch_size},     {"seed", seed}};
}

ReinforceConfig ReinforceConfig::from_json(const nlohmann::json& j, ReinforceConfig c) {
  c.temperatures = j.value("temperatures", c.temperatures);
  c.learning_rates = j.value("learning_rates", c.learning_rates);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  return c;
}

ReinforceResult train_offpolicy_reinforce(const ScoringNet& initial,
                                          const std::vector<RecordedDialogue>& dataset,
                                          const ReinforceConfig& cfg) {
  if (cfg.temperatures.empty() || cfg.learning_rates.empty())
    throw InvalidArgument("empty REINFORCE grid");
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be positive");
  std::vector<std::size_t> perm(dataset.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng split_rng = derive_rng(cfg.seed, 3);
  std::shuffle(perm.begin(), perm.end(), split_rng);
  const std::size_t n_train = dataset.size() * 6 / 10;
  const std::size_t n_dev = dataset.size() * 2 / 10;
  std::vector<std::size_t> tr(perm.begin(), perm.begin() + static_cast<long>(n_train));
  std::vector<std::size_t> dv(perm.begin() + static_cast<long>(n_train),
                              perm.begin() + static_cast<long>(n_train + n_dev));
  std::vector<std::size_t> te(perm.begin() + static_cast<long>(n_train + n_dev), perm.end());
  if (tr.empty() || dv.empty() || te.empty())
    throw EmptySplit("REINFORCE needs enough dialogues for train/dev/test");

  const auto subset = [&](const std::vector<std::size_t>& ids) {
    std::vector<RecordedDialogue> out;
    for (auto i : ids) out.push_back(dataset[i]);
    return out;
  };
  const auto dev = subset(dv);
  const auto test = subset(te);
  std::vector<const RecordedStep*> steps;
  for (auto i : tr)
    for (const auto& s : dataset[i].steps) steps.push_back(&s);

  std::vector<ReinforceGridPoint> grid;
  std::size_t point = 0;
  for (double lam : cfg.temperatures) {
    for (double lr : cfg.learning_rates) {
      NetPolicy pol(PolicyVariant::StochasticSoftmax, initial, lam);
      ReinforceGridPoint best{lam, lr, offpolicy_estimate(pol, dev).expected_return, pol.net()};
      Rng rng = derive_rng(cfg.seed, 100 + point++);
      for (std::size_t ep = 0; ep < cfg.epochs; ++ep) {
        auto order = steps;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
          const std::vector<const RecordedStep*> batch(
              order.begin() + static_cast<long>(b),
              order.begin() + static_cast<long>(std::min(order.size(), b + cfg.batch_size)));
          reinforce_update(pol, batch, lr);
        }
        const double r = offpolicy_estimate(pol, dev).expected_return;
        if (r > best.dev_return) {
          best.dev_return = r;
          best.net = pol.net();
        }
      }
      grid.push_back(std::move(best));
    }
  }
  std::size_t bi = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i].dev_return > grid[bi].dev_return) bi = i;
  NetPolicy stochastic(PolicyVariant::StochasticSoftmax, grid[bi].net, grid[bi].temperature,
                       "offpolicy-reinforce");
  NetPolicy greedy(PolicyVariant::GreedyOfStochastic, grid[bi].net, grid[bi].temperature,
                   "offpolicy-reinforce-greedy");
  const auto test_est = offpolicy_estimate(stochastic, test);
  return ReinforceResult{std::move(stochastic), std::move(greedy), std::move(grid), bi, test_est,
                         tr, dv, te};
}

}  // namespace converse
