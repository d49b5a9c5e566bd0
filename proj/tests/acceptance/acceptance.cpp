// One pass/fail line per acceptance criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "converse/ensemble.hpp"
#include "converse/error.hpp"
#include "converse/features.hpp"
#include "converse/io.hpp"
#include "converse/mdp.hpp"
#include "converse/policy.hpp"
#include "converse/qlearning.hpp"
#include "converse/scoring.hpp"
#include "converse/synth.hpp"
#include "converse/text.hpp"
#include "fixtures.hpp"

using namespace converse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vector gaussian(std::size_t n, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = g(rng);
  return v;
}

ScoringNet perturbed(const FeatureLayout& layout, std::size_t h1, std::size_t h2, Rng& rng, double sd) {
  ScoringNet net(layout, h1, h2, rng);
  net.params() += gaussian(net.num_params(), rng, sd);
  return net;
}

// Shared synthetic fixture for the scorer and simulator criteria.
struct Planted {
  std::shared_ptr<const FeatureExtractor> ex = testutil::default_extractor(16);
  synth::SynthConfig cfg;
  synth::PlantedWorld world;
  std::vector<LabeledExample> train, dev, test;
  std::optional<TrainedScorer> scorer;

  Planted() {
    cfg.contexts = 800;
    cfg.store_contexts = 300;
    cfg.dialogues = 50;
    cfg.seed = 2024;
    world = synth::make_world(*ex, cfg);
    for (const auto& r : world.amt) {
      auto ex_vec = featurize({r.example}, *ex);
      ex_vec[0].group = r.dialogue_id;
      switch (split_of(r.dialogue_id)) {
        case Split::Train: train.push_back(ex_vec[0]); break;
        case Split::Dev: dev.push_back(ex_vec[0]); break;
        case Split::Test: test.push_back(ex_vec[0]); break;
      }
    }
  }

  const TrainedScorer& trained() {
    if (!scorer) {
      TrainConfig tc;
      tc.h1 = 64;
      tc.h2 = 16;
      tc.learning_rate = 1e-3;
      tc.l2 = 1e-3;
      tc.max_epochs = 200;
      tc.patience = 10;
      tc.seed = 7;
      scorer = train_supervised_run(train, dev, ex->layout(), tc);
    }
    return *scorer;
  }
};

Planted& planted() {
  static Planted p;
  return p;
}

// ---------------------------------------------------------------------------

Outcome c1_feature_layout() {
  const auto t0 = Clock::now();
  FeatureConfig fc;
  const FeatureExtractor fx(FeatureLayout(fc), bundled_embeddings(fc.embedding_dim));
  const FeatureExtractor* ex = &fx;
  const auto& layout = ex->layout();
  const auto back = FeatureLayout::from_json(nlohmann::json::parse(layout.to_json().dump()));
  if (!(back == layout)) return {false, "layout JSON round trip differs"};
  std::size_t next = 0;
  for (const auto& g : layout.groups()) {
    if (g.offset != next) return {false, "group " + g.name + " not contiguous"};
    next += g.length;
  }
  if (next != layout.total_dim()) return {false, "groups do not cover the vector"};

  Rng rng(1);
  const auto models = layout.config().model_ids;
  std::uniform_int_distribution<std::size_t> pick_model(0, models.size() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto one_hot_at = [&](const Vector& x, const char* group, std::size_t at) {
    const auto& g = layout.group(group);
    for (std::size_t i = 0; i < g.length; ++i)
      if (x[static_cast<Eigen::Index>(g.offset + i)] != (i == at ? 1.0 : 0.0)) return false;
    return true;
  };
  for (int t = 0; t < 1000; ++t) {
    Dialogue d = synth::random_context(rng, 4);
    const auto& mid = models[pick_model(rng)];
    auto cand = synth::random_candidate(d, {mid, 0.4, 0.3}, rng);
    const Vector x = ex->scoring_features(d, cand);
    if (static_cast<std::size_t>(x.size()) != layout.total_dim()) return {false, "scoring vector length"};
    for (const auto& g : layout.groups()) {
      if (!g.binary) continue;
      for (std::size_t i = 0; i < g.length; ++i) {
        const double v = x[static_cast<Eigen::Index>(g.offset + i)];
        if (v != 0.0 && v != 1.0) return {false, "non-binary value in " + g.name};
      }
    }
    if (!one_hot_at(x, "model_class", layout.model_index(mid))) return {false, "model_class one-hot"};
    const auto act = ex->nlu().classify_dialogue_act(d.last_user()->text);
    if (!one_hot_at(x, "act_model", static_cast<std::size_t>(act) * layout.num_models() + layout.model_index(mid)))
      return {false, "act_model one-hot"};
    if (layout.group("pos_bucket").length == 0 ||
        (x.segment(static_cast<Eigen::Index>(layout.group("pos_bucket").offset),
                   static_cast<Eigen::Index>(layout.group("pos_bucket").length))
             .sum() != 1.0))
      return {false, "pos bucket not one-hot"};
    Vector probs = gaussian(5, rng).array().exp();
    probs /= probs.sum();
    const Vector r = reward_features(d, cand, probs, u(rng) < 0.3, ex->nlu());
    if (r.size() != 23) return {false, "reward feature dimension " + std::to_string(r.size())};
  }
  const double s = seconds_since(t0);
  return {s < 10.0, "1000 inputs, dim " + std::to_string(layout.total_dim()) + ", reward dim 23," + fmt(" %.2fs", s)};
}

double ce_plus_score(const ScoringNet& net, const Vector& x, int y, double alpha) {
  const auto f = net.forward(x);
  return -std::log(f.probs[y]) + alpha * f.score;
}

Outcome c2_gradients() {
  const auto t0 = Clock::now();
  Rng rng(2);
  const double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    ScoringNet net = perturbed(testutil::small_layout(4), 6, 4, rng, 0.3);
    const Vector x = gaussian(net.input_dim(), rng);
    const int y = static_cast<int>(rng() % 5);
    const double alpha = 0.7;
    const auto f = net.forward(x);
    Vector g_logits = f.probs;
    g_logits[y] -= 1.0;
    const Vector grad = net.backward(x, g_logits, alpha);
    for (Eigen::Index e = 0; e < net.params().size(); ++e) {
      const double orig = net.params()[e];
      net.params()[e] = orig + h;
      const double up = ce_plus_score(net, x, y, alpha);
      net.params()[e] = orig - h;
      const double down = ce_plus_score(net, x, y, alpha);
      net.params()[e] = orig;
      const double num = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(num - grad[e]) / std::max({std::abs(num), std::abs(grad[e]), 1e-5}));
    }
  }
  const double s = seconds_since(t0);
  return {worst < 1e-4 && s < 30.0, fmt("max rel err %.3g", worst) + fmt(", %.2fs", s)};
}

Outcome c3_score_range() {
  Rng rng(3);
  const auto layout = testutil::small_layout(4);
  double lo = 1e300, hi = -1e300;
  for (int t = 0; t < 10000; ++t) {
    ScoringNet net = perturbed(layout, 6, 4, rng, 1.0);
    for (int k = 0; k < 5; ++k) net.out_class()[k] = k + 1;
    net.out_skip().setZero();
    net.set_out_bias(0.0);
    const double s = net.score(gaussian(net.input_dim(), rng, 3.0));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const ScoringNet zero(layout, 6, 4);
  const double uniform = zero.score(gaussian(zero.input_dim(), rng));
  const bool ok = lo >= 1.0 && hi <= 5.0 && uniform == 3.0;
  return {ok, fmt("range [%.4f, ", lo) + fmt("%.4f], uniform score ", hi) + fmt("%.17g", uniform)};
}

Outcome c4_supervised() {
  const auto t0 = Clock::now();
  auto& P = planted();
  const auto& ts = P.trained();
  double mean = 0.0;
  for (const auto& e : P.train) mean += e.label;
  mean /= static_cast<double>(P.train.size());
  std::vector<double> pred, labels, base;
  for (const auto& e : P.test) {
    pred.push_back(ts.net.score(e.x));
    labels.push_back(e.label);
    base.push_back(mean);
  }
  const double m = mse(pred, labels), mb = mse(base, labels), rho = spearman(pred, labels);
  const double gain = 1.0 - m / mb;
  const double s = seconds_since(t0);
  return {gain >= 0.2 && rho >= 0.5 && s < 300.0,
          fmt("test n=%.0f", static_cast<double>(P.test.size())) + fmt(", mse %.3f", m) +
              fmt(" vs baseline %.3f", mb) + fmt(" (%.0f%% lower)", 100 * gain) + fmt(", spearman %.3f", rho) +
              fmt(", %.1fs", s)};
}

Outcome c5_offpolicy() {
  Rng rng(5);
  const auto layout = testutil::small_layout(4);
  const NetPolicy pol(PolicyVariant::StochasticSoftmax, perturbed(layout, 6, 4, rng, 0.3), 1.3);
  std::vector<RecordedDialogue> data(25);
  double total = 0.0;
  std::vector<CandidateResponse> cands = {{"A", "a", false, {}}, {"B", "b", false, {}}, {"C", "c", false, {}}};
  std::uniform_real_distribution<double> ur(-1.0, 3.0);
  for (auto& d : data) {
    const int steps = 1 + static_cast<int>(rng() % 5);
    for (int t = 0; t < steps; ++t) {
      RecordedStep s;
      s.features = Matrix(static_cast<Eigen::Index>(layout.total_dim()), 3);
      for (Eigen::Index i = 0; i < s.features.size(); ++i) s.features.data()[i] = gaussian(1, rng)[0];
      s.candidates = cands;
      s.behavior = pol.distribution(s.features, s.candidates);
      s.chosen = Policy::pick(s.behavior, true, rng);
      s.reward = ur(rng);
      total += s.reward;
      d.steps.push_back(std::move(s));
    }
  }
  const double self = offpolicy_estimate(pol, data).expected_return;
  const double err_self = std::abs(self - total / static_cast<double>(data.size()));

  // Two dialogues; brute force: sum over steps of target/behaviour ratio times reward, over D.
  const auto step = [&](std::vector<double> mu, std::size_t a, double r) {
    RecordedStep s;
    s.candidates = {cands[0], cands[1]};
    s.behavior = std::move(mu);
    s.chosen = a;
    s.reward = r;
    return s;
  };
  const std::vector<RecordedDialogue> fixture = {
      {"d1", {step({0.5, 0.5}, 0, 2.0), step({0.25, 0.75}, 1, 1.0)}}, {"d2", {step({0.2, 0.8}, 0, 3.0)}}};
  const double fixed = offpolicy_estimate(FixedModelPolicy({"A"}), fixture).expected_return;
  const double uni = offpolicy_estimate(RandomPolicy(), fixture).expected_return;
  const double brute_fixed = (1.0 / 0.5 * 2.0 + 0.0 + 1.0 / 0.2 * 3.0) / 2.0;
  const double brute_uni = (0.5 / 0.5 * 2.0 + 0.5 / 0.75 * 1.0 + 0.5 / 0.2 * 3.0) / 2.0;
  const double err_fix = std::max(std::abs(fixed - brute_fixed), std::abs(uni - brute_uni));
  return {err_self <= 1e-9 && err_fix <= 1e-9,
          fmt("self-consistency err %.2g", err_self) + fmt(", fixture err %.2g", err_fix)};
}

Outcome c6_reinforce() {
  Rng rng(6);
  const auto layout = testutil::small_layout(4);
  NetPolicy pol(PolicyVariant::StochasticSoftmax, perturbed(layout, 6, 4, rng, 0.3), 1.0);
  std::vector<CandidateResponse> cands = {{"A", "a", false, {}}, {"B", "b", false, {}}, {"C", "c", false, {}}};
  const auto make = [&](double r) {
    RecordedStep s;
    s.features = Matrix(static_cast<Eigen::Index>(layout.total_dim()), 3);
    for (Eigen::Index i = 0; i < s.features.size(); ++i) s.features.data()[i] = gaussian(1, rng)[0];
    s.candidates = cands;
    s.behavior = pol.distribution(s.features, s.candidates);
    s.chosen = rng() % 3;
    s.reward = r;
    return s;
  };
  std::vector<RecordedStep> steps;
  for (int i = 0; i < 16; ++i) steps.push_back(make(1.0 + (i % 3)));
  std::vector<const RecordedStep*> batch;
  for (const auto& s : steps) batch.push_back(&s);

  double worst_c = 0.0;
  for (const auto& s : steps) worst_c = std::max(worst_c, std::abs(importance_weight(pol, s) - 1.0));

  const ScoringNet before = pol.net();
  reinforce_update(pol, batch, 0.05);
  bool mask_ok = true;
  for (std::size_t b = 0; b < kNumParamBlocks; ++b) {
    const auto blk = static_cast<ParamBlock>(b);
    const bool changed = pol.net().block_hash(blk) != before.block_hash(blk);
    if (changed != (blk == ParamBlock::W2 || blk == ParamBlock::B2)) mask_ok = false;
  }

  std::vector<RecordedStep> zero;
  for (int i = 0; i < 16; ++i) zero.push_back(make(0.0));
  std::vector<const RecordedStep*> zb;
  for (const auto& s : zero) zb.push_back(&s);
  const Vector p0 = pol.net().params();
  reinforce_update(pol, zb, 0.05, ParamMask::all());
  const bool identical = std::memcmp(p0.data(), pol.net().params().data(),
                                     static_cast<std::size_t>(p0.size()) * sizeof(double)) == 0;
  return {worst_c <= 1e-9 && mask_ok && identical,
          fmt("max |c-1| %.2g", worst_c) + ", mask " + (mask_ok ? "ok" : "violated") + ", zero-reward batch " +
              (identical ? "bit-identical" : "changed parameters")};
}

Outcome c7_qlearning() {
  const auto t0 = Clock::now();
  testutil::TabularMdp tab({{0.5, 0.0, -1.0}, {2.0, 0.0, -1.0}, {-2.0, -1.0, -0.5}},
                           {{2, 1, 0}, {1, 0, 2}, {0, 2, 1}}, 20, testutil::small_layout(4).total_dim());
  const double gamma = 0.5;
  const auto q = tab.value_iteration(gamma);
  QLearningConfig cfg;
  cfg.gamma = gamma;
  cfg.epsilon = 0.3;
  cfg.learning_rate = 1e-2;
  cfg.train_episodes = 1000;
  cfg.seed = 17;
  Rng rng(7);
  const auto res = qlearning_train(ScoringNet(testutil::small_layout(4), 24, 16, rng), *tab.mdp, *tab.mdp, cfg);
  // Evaluation states: the start records visited by 200 greedy evaluation episodes.
  std::size_t match = 0, total = 0;
  const NetPolicy greedy(PolicyVariant::GreedyActionValue, res.net);
  for (std::size_t e = 0; e < 200; ++e) {
    Rng er = derive_rng(99, e);
    const auto tr = run_episode(*tab.mdp, greedy, er);
    for (const auto& s : tr.steps) {
      const auto& qs = q[s.record];
      const auto oracle = static_cast<std::size_t>(std::max_element(qs.begin(), qs.end()) - qs.begin());
      match += s.action == oracle;
      ++total;
    }
  }
  std::size_t state_match = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const Vector sc = res.net.forward_batch(tab.store.at(s).features).scores;
    Eigen::Index arg = 0;
    sc.maxCoeff(&arg);
    const auto& qs = q[s];
    state_match += static_cast<std::size_t>(arg) ==
                   static_cast<std::size_t>(std::max_element(qs.begin(), qs.end()) - qs.begin());
  }
  const double frac = static_cast<double>(match) / static_cast<double>(total);
  const double s = seconds_since(t0);
  return {frac >= 0.95 && state_match == 3 && res.max_buffer_size <= 1000 && s < 300.0,
          fmt("greedy agreement %.3f", frac) + " over visited states, " + std::to_string(state_match) +
              "/3 states, max buffer " + std::to_string(res.max_buffer_size) +
              fmt(", episodes %.0f", static_cast<double>(cfg.train_episodes)) + fmt(", %.1fs", s)};
}

/// Next state as a function of the planted label and overlap bit, with 10% uniform noise.
std::vector<TransitionExample> planted_transitions(const HistoryStore& store, const synth::PlantedRule& rule,
                                                   const Nlu& nlu, Rng& rng) {
  std::vector<TransitionExample> out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, kNumAbstractStates - 1);
  for (const auto& r : store.records()) {
    const bool wh = nlu.lexical_flags(r.history.last_user()->text).has_wh;
    for (std::size_t a = 0; a < r.candidates.size(); ++a) {
      const Vector x = r.features.col(static_cast<Eigen::Index>(a));
      const int label = rule.label(x);
      AbstractState next{label >= 4 ? DialogueAct::Accept : (label <= 2 ? DialogueAct::Reject : DialogueAct::Statement),
                         label >= 4 ? Sentiment::Positive : (label <= 2 ? Sentiment::Negative : Sentiment::Neutral),
                         x[static_cast<Eigen::Index>(rule.overlap_index)] < 0.5};
      if (u(rng) < 0.1) next = AbstractState::from_index(any(rng));
      out.push_back({transition_input(x, label - 1, r.z, wh), next});
    }
  }
  return out;
}

Outcome c8_mdp() {
  auto& P = planted();
  Rng rng(8);
  const auto data = planted_transitions(P.world.store, P.world.rule, P.ex->nlu(), rng);
  const double uniform_pp = joint_perplexity(TransitionModel::uniform(P.ex->layout().total_dim()), data);
  TransitionTrainConfig tc;
  tc.h1 = 32;
  tc.h2 = 16;
  tc.learning_rate = 3e-3;
  tc.seed = 8;
  const auto rep = train_transition_model(data, tc);

  auto net = std::make_shared<ScoringNet>(perturbed(P.ex->layout(), 16, 8, rng, 0.3));
  const ScoringNetOutcome outcome(net);
  const MDP mdp{P.world.store, outcome, rep.model, {}};
  const RandomPolicy random;
  bool rewards_ok = true, state_ok = true, z_ok = true;
  std::size_t steps = 0;
  for (std::size_t e = 0; e < 500; ++e) {
    Rng er = derive_rng(80, e);
    for (const auto& s : run_episode(mdp, random, er).steps) {
      ++steps;
      rewards_ok &= s.r >= -2.0 && s.r <= 2.0;
      state_ok &= P.ex->nlu().abstract_state(P.world.store.at(s.record).history) == s.z &&
                  P.world.store.at(s.record).z == s.z;
      z_ok &= s.z_next.index() < kNumAbstractStates &&
              AbstractState::from_index(s.z_next.index()) == s.z_next;
    }
  }
  const bool pp_ok = std::abs(uniform_pp - 60.0) <= 1e-9 && std::abs(rep.uniform_perplexity - 60.0) <= 1e-9;
  const bool beats = rep.holdout_perplexity < rep.baseline_perplexity;
  return {rewards_ok && state_ok && z_ok && pp_ok && beats,
          std::to_string(steps) + " steps; rewards " + (rewards_ok ? "in range" : "OUT OF RANGE") + "; f(h)=z " +
              (state_ok ? "ok" : "violated") + "; next states " + (z_ok ? "valid" : "invalid") +
              fmt("; uniform pp %.12f", uniform_pp) + fmt("; trained %.2f", rep.holdout_perplexity) +
              fmt(" vs baseline %.2f", rep.baseline_perplexity)};
}

Outcome c9_ordering() {
  const auto t0 = Clock::now();
  auto& P = planted();
  const synth::PlantedOutcome outcome(P.world.rule);
  const auto uniform = TransitionModel::uniform(P.ex->layout().total_dim());
  const MDP mdp{P.world.store, outcome, uniform, {}};
  const RandomPolicy random;
  const FixedModelPolicy fixed(P.world.heuristic_preference);
  const NetPolicy supervised(PolicyVariant::GreedyActionValue, P.trained().net, 1.0, "supervised");
  const auto a = simulate(mdp, random, 500, 9, 4);
  const auto b = simulate(mdp, fixed, 500, 9, 4);
  const auto c = simulate(mdp, supervised, 500, 9, 4);
  const auto se = [](const SimulationReport& x, const SimulationReport& y) {
    return std::hypot(x.se_reward_per_step(), y.se_reward_per_step());
  };
  const double g1 = (b.avg_reward_per_step - a.avg_reward_per_step) / se(a, b);
  const double g2 = (c.avg_reward_per_step - b.avg_reward_per_step) / se(b, c);
  const double s = seconds_since(t0);
  return {g1 >= 3.0 && g2 >= 3.0 && s < 600.0,
          fmt("random %.3f", a.avg_reward_per_step) + fmt(" < fixed %.3f", b.avg_reward_per_step) +
              fmt(" < supervised %.3f", c.avg_reward_per_step) + fmt(" (gaps %.1f", g1) + fmt(" and %.1f SE)", g2) +
              fmt(", %.1fs", s)};
}

double brute_cosine(const Vector& a, const Vector& b) {
  const double na = a.norm(), nb = b.norm();
  return na > 0 && nb > 0 ? a.dot(b) / (na * nb) : 0.0;
}

Outcome c10_retrieval() {
  Rng rng(10);
  const auto emb = bundled_embeddings(16);
  const auto vocab = bundled::vocabulary();
  std::uniform_int_distribution<std::size_t> w(0, vocab.size() - 1);
  std::size_t checked = 0, mismatches = 0;
  double worst_sim = 0.0;
  for (std::size_t n : {1u, 7u, 100u, 1000u, 10000u}) {
    Corpus corpus;
    for (std::size_t i = 0; i < n; ++i) {
      std::string t;
      const std::size_t len = 1 + rng() % 8;
      for (std::size_t k = 0; k < len; ++k) t += (k ? " " : "") + vocab[w(rng)];
      // duplicates exercise tie-breaking by corpus index
      if (i > 0 && rng() % 10 == 0) t = corpus.items[rng() % i].text;
      corpus.items.push_back({t, std::nullopt, "synthetic"});
    }
    const RetrievalIndex index(corpus, emb);
    for (int q = 0; q < 10; ++q) {
      Dialogue d = synth::random_context(rng, 3);
      for (std::size_t k : {std::size_t{1}, std::size_t{5}, n}) {
        const auto hits = retrieve_topk(index, d, k);
        std::vector<std::string> ctx;
        for (const Utterance* u : d.last_utterances(kRetrievalContextWindow))
          for (auto& t : text::tokenize(u->text)) ctx.push_back(t);
        const Vector qv = index.weighted_vector(ctx);
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < n; ++i) {
          const double c = cosine(qv, index.item_vector(i));
          worst_sim = std::max(worst_sim, std::abs(c - brute_cosine(qv, index.item_vector(i))));
          all.push_back({c, i});
        }
        std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
          return x.first != y.first ? x.first > y.first : x.second < y.second;
        });
        ++checked;
        if (hits.size() != std::min(k, n)) {
          ++mismatches;
          continue;
        }
        for (std::size_t i = 0; i < hits.size(); ++i) {
          if (hits[i].index != all[i].second || hits[i].similarity != all[i].first) ++mismatches;
        }
      }
    }
  }

  // Latency: featurise and score 25 candidates with the default-size net.
  FeatureConfig fc;
  const auto ex = std::make_shared<FeatureExtractor>(FeatureLayout(fc), bundled_embeddings(fc.embedding_dim));
  Rng nr(11);
  const NetPolicy greedy(PolicyVariant::GreedyActionValue, ScoringNet(ex->layout(), 500, 20, nr));
  Dialogue d = synth::random_context(nr, 3);
  std::vector<CandidateResponse> cands;
  const auto ids = default_model_ids();
  for (std::size_t i = 0; i < 25; ++i) cands.push_back(synth::random_candidate(d, {ids[i % ids.size()], 0.4, 0.2}, nr));
  std::vector<double> times;
  for (int r = 0; r < 31; ++r) {
    const auto t0 = Clock::now();
    const Matrix x = stack_columns(ex->scoring_features(d, cands));
    greedy.choose(x, cands, nr);
    times.push_back(1000.0 * seconds_since(t0));
  }
  std::sort(times.begin(), times.end());
  const double median = times[times.size() / 2];
  return {mismatches == 0 && worst_sim <= 1e-12 && median < 150.0,
          std::to_string(checked) + " queries up to 10000 items, " + std::to_string(mismatches) +
              " mismatches; 25-candidate scoring median " + fmt("%.2f ms", median)};
}

// ---------------------------------------------------------------------------
// Determinism of training commands via the command-line tool.

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd) {
  return std::system((cmd + " > /dev/null 2>&1").c_str());
}

Outcome c11_determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty() || !fs::exists(cli)) return {false, "command-line tool not found"};
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string W = work.string();
  const std::string cfg = W + "/config.json";
  {
    std::ofstream f(cfg);
    f << R"({"features": {"embedding_dim": 16, "pos_buckets": 10},
            "synth": {"contexts": 150, "store_contexts": 60, "dialogues": 60},
            "scorer": {"h1": 16, "h2": 8, "max_epochs": 15, "grid": {"learning_rates": [1e-3], "l2": [1e-3]}},
            "finetune": {"max_epochs": 3},
            "reinforce": {"temperatures": [1.0], "learning_rates": [1e-3], "epochs": 2},
            "qlearning": {"train_episodes": 40, "episodes_per_phase": 20, "warmup": 20},
            "transitions": {"h1": 8, "h2": 4, "max_epochs": 5}})";
  }
  const std::string world = W + "/world";
  if (run(cli + " generate-synthetic --seed 3 --config " + cfg + " --out " + world) != 0)
    return {false, "generate-synthetic failed"};
  const std::string logs = "--logs " + world + "/dialogues.jsonl";
  const std::string scorer = "@scorer/scorer.json";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train-scorer", "--data " + world + "/amt.jsonl"},
      {"train-reward", logs + " --scorer " + scorer},
      {"finetune-learned-reward", logs + " --scorer " + scorer + " --reward @reward/reward_model.json"},
      {"train-reinforce", logs + " --init " + scorer},
      {"build-store", logs + " --scorer " + scorer},
      {"train-transitions", logs + " --scorer " + scorer},
      {"train-qlearning", "--store @build-store --init " + scorer +
                              " --transition @transitions/transition_model.json"},
  };
  std::map<std::string, std::string> outputs;
  std::vector<std::string> differing;
  for (const auto& [name, args0] : commands) {
    std::array<std::string, 2> bytes;
    for (int rep = 0; rep < 2; ++rep) {
      std::string args = args0;
      for (const auto& [k, v] : outputs) {
        const std::string tag = "@" + k;
        for (auto p = args.find(tag); p != std::string::npos; p = args.find(tag)) args.replace(p, tag.size(), v);
      }
      const std::string out = W + "/" + name + "_" + std::to_string(rep);
      const std::string cmd = cli + " " + name + " --seed 5 --config " + cfg + " " + args + " --out " + out;
      if (run(cmd) != 0) return {false, name + " failed: " + cmd};
      std::string all;
      std::vector<fs::path> files;
      if (fs::is_directory(out)) {
        for (const auto& e : fs::recursive_directory_iterator(out))
          if (e.is_regular_file()) files.push_back(e.path());
      } else {
        files.push_back(out);
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) all += f.filename().string() + '\0' + file_bytes(f);
      bytes[static_cast<std::size_t>(rep)] = all;
      if (rep == 0) {
        const std::string key = name == "train-scorer" ? "scorer"
                                : name == "train-reward" ? "reward"
                                : name == "train-transitions" ? "transitions"
                                                              : name;
        outputs[key] = out;
      }
    }
    if (bytes[0] != bytes[1] || bytes[0].empty()) differing.push_back(name);
  }
  std::string detail = std::to_string(commands.size()) + " training commands";
  if (differing.empty()) return {true, detail + ", all byte-identical on repeat"};
  for (const auto& d : differing) detail += " " + d;
  return {false, detail + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  std::string cli;
  std::string work = (fs::temp_directory_path() / "converse_acceptance").string();
  app.add_option("-c,--criterion", only, "criteria to run (default: all)");
  app.add_option("--cli", cli, "path to the converse command-line tool");
  app.add_option("--workdir", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<int, std::function<Outcome()>>> all = {
      {1, c1_feature_layout}, {2, c2_gradients},  {3, c3_score_range}, {4, c4_supervised},
      {5, c5_offpolicy},      {6, c6_reinforce},  {7, c7_qlearning},   {8, c8_mdp},
      {9, c9_ordering},       {10, c10_retrieval}, {11, [&] { return c11_determinism(cli, work); }},
  };
  int failed = 0;
  for (const auto& [id, fn] : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
