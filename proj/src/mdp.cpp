#include "converse/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "converse/error.hpp"
#include "converse/io.hpp"

namespace converse {

std::string to_string(Fallback f) {
  switch (f) {
    case Fallback::None: return "none";
    case Fallback::Sentiment: return "sentiment";
    case Fallback::Generic: return "generic";
    case Fallback::Uniform: return "uniform";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Store

HistoryStore::HistoryStore(std::vector<HistoryRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (static_cast<std::size_t>(r.features.cols()) != r.candidates.size())
      throw InvalidArgument("record " + r.id + ": features do not match candidates");
    if (r.candidates.empty()) throw EmptyCandidateSet("record " + r.id + " has no candidates");
    index_[r.z.index()].push_back(i);
    if (r.initial) initial_.push_back(i);
  }
}

bool HistoryStore::consistent(const Nlu& nlu) const {
  for (const auto& r : records_)
    if (!(nlu.abstract_state(r.history) == r.z)) return false;
  std::size_t covered = 0;
  for (const auto& [z, ids] : index_) {
    if (ids.empty()) return false;
    for (auto i : ids)
      if (records_[i].z.index() != z) return false;
    covered += ids.size();
  }
  return covered == records_.size();
}

void HistoryStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ostringstream rec;
  std::string bin;
  std::size_t dim = records_.empty() ? 0 : static_cast<std::size_t>(records_.front().features.rows());
  for (const auto& r : records_) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : r.candidates) cands.push_back(to_json(c));
    rec << nlohmann::json{{"id", r.id},
                          {"z", to_string(r.z)},
                          {"z_index", r.z.index()},
                          {"initial", r.initial},
                          {"history", to_json(r.history)},
                          {"candidates", cands}}
               .dump()
        << '\n';
    if (static_cast<std::size_t>(r.features.rows()) != dim)
      throw LayoutMismatch("records disagree on feature dimension");
    bin.append(reinterpret_cast<const char*>(r.features.data()),
               static_cast<std::size_t>(r.features.size()) * sizeof(double));
  }
  nlohmann::json idx = nlohmann::json::object();
  for (const auto& [z, ids] : index_) idx[std::to_string(z)] = ids;
  write_text(dir / "records.jsonl", rec.str());
  write_text(dir / "features.bin", bin);
  write_text(dir / "index.json",
             nlohmann::json{{"format", "converse.history_store"},
                            {"version", 1},
                            {"feature_dim", dim},
                            {"records", records_.size()},
                            {"index", idx}}
                     .dump() +
                 "\n");
}

HistoryStore HistoryStore::load(const std::filesystem::path& dir) {
  const auto meta = read_json(dir / "index.json");
  if (meta.value("format", "") != "converse.history_store") throw SchemaError("not a history store");
  const auto dim = meta.at("feature_dim").get<std::size_t>();
  const std::string bin = read_text(dir / "features.bin");
  std::ifstream in(dir / "records.jsonl");
  if (!in) throw InvalidArgument("cannot open " + (dir / "records.jsonl").string());
  std::vector<HistoryRecord> records;
  std::size_t offset = 0;
  for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
    HistoryRecord r;
    r.id = j.at("id").get<std::string>();
    r.z = AbstractState::from_index(j.at("z_index").get<std::size_t>());
    r.initial = j.value("initial", false);
    r.history = dialogue_from_json(j.at("history"));
    for (const auto& c : j.at("candidates")) r.candidates.push_back(candidate_from_json(c));
    const std::size_t n = dim * r.candidates.size() * sizeof(double);
    if (offset + n > bin.size()) throw SchemaError("feature file too short");
    r.features.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(r.candidates.size()));
    std::memcpy(r.features.data(), bin.data() + offset, n);
    offset += n;
    records.push_back(std::move(r));
  });
  if (offset != bin.size()) throw SchemaError("feature file has trailing data");
  HistoryStore store(std::move(records));
  std::size_t listed = 0;
  for (const auto& [key, ids] : meta.at("index").items()) {
    const auto z = static_cast<std::size_t>(std::stoul(key));
    const auto it = store.index().find(z);
    if (it == store.index().end() || it->second != ids.get<std::vector<std::size_t>>())
      throw SchemaError("store index does not match records");
    listed += ids.size();
  }
  if (listed != store.size()) throw SchemaError("store index does not cover all records");
  return store;
}

HistoryStore build_history_store(const std::vector<Dialogue>& logs, const ResponseEnsemble& ensemble,
                                 const FeatureExtractor& extractor, std::uint64_t seed) {
  if (logs.empty()) throw EmptyLogs("no dialogues to build a history store from");
  std::vector<HistoryRecord> records;
  std::uint64_t stream = 0;
  for (const auto& d : logs) {
    std::size_t user_turns = 0;
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      if (d.turns[i].speaker != Speaker::User) continue;
      ++user_turns;
      HistoryRecord r;
      r.history = d.prefix(i + 1);
      r.id = d.id + "#" + std::to_string(i + 1);
      r.z = extractor.nlu().abstract_state(r.history);
      r.initial = user_turns == 1;
      Rng rng = derive_rng(seed, stream++);
      r.candidates = ensemble.generate(r.history, rng);
      if (r.candidates.empty()) continue;
      r.features = stack_columns(extractor.scoring_features(r.history, r.candidates));
      records.push_back(std::move(r));
    }
  }
  if (records.empty()) throw EmptyLogs("logs contain no user turns");
  return HistoryStore(std::move(records));
}

SampledHistory sample_history(const HistoryStore& store, const AbstractState& z, Rng& rng) {
  if (store.empty()) throw EmptyLogs("empty history store");
  const auto pick = [&](const std::vector<std::size_t>& ids) {
    std::uniform_int_distribution<std::size_t> u(0, ids.size() - 1);
    return ids[u(rng)];
  };
  if (const auto it = store.index().find(z.index()); it != store.index().end())
    return {pick(it->second), Fallback::None};

  const auto gather = [&](bool match_generic) {
    std::vector<std::size_t> ids;
    for (const auto& [zi, rs] : store.index()) {
      const auto s = AbstractState::from_index(zi);
      if (s.act == z.act && (!match_generic || s.generic == z.generic))
        ids.insert(ids.end(), rs.begin(), rs.end());
    }
    return ids;
  };
  if (auto ids = gather(true); !ids.empty()) return {pick(ids), Fallback::Sentiment};
  if (auto ids = gather(false); !ids.empty()) return {pick(ids), Fallback::Generic};
  std::uniform_int_distribution<std::size_t> u(0, store.size() - 1);
  return {u(rng), Fallback::Uniform};
}

// ---------------------------------------------------------------------------
// Rewards and transitions

double expected_reward(const Vector& p) {
  if (p.size() != 5) throw InvalidArgument("expected 5 class probabilities");
  double r = 0.0;
  for (Eigen::Index k = 0; k < 5; ++k) r += kClassRewards[static_cast<std::size_t>(k)] * p[k];
  return std::clamp(r, -2.0, 2.0);
}

Vector ScoringNetOutcome::class_probs(const HistoryRecord& r, std::size_t a) const {
  return net_->forward(r.features.col(static_cast<Eigen::Index>(a))).probs;
}

namespace {

std::size_t sample_index(const Vector& p, Rng& rng) {
  std::discrete_distribution<std::size_t> d(p.data(), p.data() + p.size());
  return d(rng);
}

bool last_user_has_wh(const Dialogue& h) {
  const auto* u = h.last_user();
  return u && lexical_flags(u->text).has_wh;
}

}  // namespace

AbstractState sample_state(const TransitionProbs& p, Rng& rng) {
  AbstractState z;
  z.act = static_cast<DialogueAct>(sample_index(p.act, rng));
  z.sentiment = static_cast<Sentiment>(sample_index(p.sentiment, rng));
  z.generic = sample_index(p.generic, rng) == 1;
  return z;
}

double state_probability(const TransitionProbs& p, const AbstractState& z) {
  return p.act[static_cast<Eigen::Index>(z.act)] * p.sentiment[static_cast<Eigen::Index>(z.sentiment)] *
         p.generic[z.generic ? 1 : 0];
}

Vector transition_input(const Vector& f, int y, const AbstractState& z, bool has_wh) {
  Vector x = Vector::Zero(f.size() + static_cast<Eigen::Index>(kTransitionExtraDim));
  x.head(f.size()) = f;
  Eigen::Index o = f.size();
  if (y < 0 || y > 4) throw InvalidArgument("class index out of range");
  x[o + y] = 1.0;
  o += 5;
  x[o + static_cast<Eigen::Index>(z.act)] = 1.0;
  o += static_cast<Eigen::Index>(kNumDialogueActs);
  x[o + static_cast<Eigen::Index>(z.sentiment)] = 1.0;
  o += static_cast<Eigen::Index>(kNumSentiments);
  x[o] = z.generic ? 1.0 : 0.0;
  x[o + 1] = has_wh ? 1.0 : 0.0;
  return x;
}

TransitionModel::TransitionModel(SoftmaxMlp act, SoftmaxMlp sentiment, SoftmaxMlp generic)
    : act_(std::move(act)), sentiment_(std::move(sentiment)), generic_(std::move(generic)) {
  if (act_.output_dim() != kNumDialogueActs || sentiment_.output_dim() != kNumSentiments ||
      generic_.output_dim() != 2)
    throw LayoutMismatch("transition heads have wrong output sizes");
  if (act_.input_dim() != sentiment_.input_dim() || act_.input_dim() != generic_.input_dim())
    throw LayoutMismatch("transition heads disagree on input size");
}

TransitionModel TransitionModel::uniform(std::size_t scoring_dim, std::size_t h1, std::size_t h2) {
  const std::size_t in = scoring_dim + kTransitionExtraDim;
  return TransitionModel(SoftmaxMlp(in, h1, h2, kNumDialogueActs), SoftmaxMlp(in, h1, h2, kNumSentiments),
                         SoftmaxMlp(in, h1, h2, 2));
}

TransitionProbs TransitionModel::probs_for_input(const Vector& x) const {
  return {act_.probs(x), sentiment_.probs(x), generic_.probs(x)};
}

TransitionProbs TransitionModel::probs(const TransitionQuery& q) const {
  const auto a = static_cast<Eigen::Index>(q.action);
  return probs_for_input(transition_input(q.record.features.col(a), q.y, q.record.z,
                                          last_user_has_wh(q.record.history)));
}

nlohmann::json TransitionModel::to_json() const {
  return {{"format", "converse.transition_model"},
          {"version", 1},
          {"act", act_.to_json()},
          {"sentiment", sentiment_.to_json()},
          {"generic", generic_.to_json()}};
}

TransitionModel TransitionModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "converse.transition_model") throw SchemaError("not a transition model");
  return TransitionModel(SoftmaxMlp::from_json(j.at("act")), SoftmaxMlp::from_json(j.at("sentiment")),
                         SoftmaxMlp::from_json(j.at("generic")));
}

std::vector<TransitionExample> extract_transitions(const std::vector<Dialogue>& logs,
                                                   const FeatureExtractor& extractor,
                                                   const ScoringNet& scorer, std::uint64_t seed) {
  Rng rng = derive_rng(seed, 0);
  std::vector<TransitionExample> out;
  for (const auto& d : logs) {
    for (const auto& s : d.selections) {
      if (s.empty()) continue;
      const std::size_t next = s.turn_index + 1;
      if (next >= d.turns.size() || d.turns[next].speaker != Speaker::User) continue;
      const Dialogue h = d.prefix(s.turn_index);
      if (!h.last_user()) continue;
      const Vector f = extractor.scoring_features(h, s.chosen());
      const int y = static_cast<int>(sample_index(scorer.forward(f).probs, rng));
      const AbstractState z = extractor.nlu().abstract_state(h);
      const bool wh = extractor.nlu().lexical_flags(h.last_user()->text).has_wh;
      out.push_back({transition_input(f, y, z, wh), extractor.nlu().abstract_state(d.turns[next].text)});
    }
  }
  return out;
}

namespace {

double mean_nll(const TransitionModel& model, const std::vector<TransitionExample>& data) {
  double nll = 0.0;
  for (const auto& e : data) nll -= std::log(state_probability(model.probs_for_input(e.input), e.next));
  return nll / static_cast<double>(data.size());
}

}  // namespace

double joint_perplexity(const TransitionModel& model, const std::vector<TransitionExample>& data) {
  if (data.empty()) throw EmptySplit("perplexity over no transitions");
  return std::exp(mean_nll(model, data));
}

ClassFrequencyBaseline::ClassFrequencyBaseline(const std::vector<TransitionExample>& train) {
  p_.act = Vector::Ones(static_cast<Eigen::Index>(kNumDialogueActs));
  p_.sentiment = Vector::Ones(static_cast<Eigen::Index>(kNumSentiments));
  p_.generic = Vector::Ones(2);
  for (const auto& e : train) {
    p_.act[static_cast<Eigen::Index>(e.next.act)] += 1;
    p_.sentiment[static_cast<Eigen::Index>(e.next.sentiment)] += 1;
    p_.generic[e.next.generic ? 1 : 0] += 1;
  }
  p_.act /= p_.act.sum();
  p_.sentiment /= p_.sentiment.sum();
  p_.generic /= p_.generic.sum();
}

double ClassFrequencyBaseline::perplexity(const std::vector<TransitionExample>& data) const {
  if (data.empty()) throw EmptySplit("perplexity over no transitions");
  double nll = 0.0;
  for (const auto& e : data) nll -= std::log(state_probability(p_, e.next));
  return std::exp(nll / static_cast<double>(data.size()));
}

nlohmann::json TransitionTrainConfig::to_json() const {
  return {{"h1", h1}, {"h2", h2}, {"learning_rate", learning_rate}, {"batch_size", batch_size},
          {"max_epochs", max_epochs}, {"patience", patience}, {"seed", seed}};
}

TransitionTrainConfig TransitionTrainConfig::from_json(const nlohmann::json& j, TransitionTrainConfig c) {
  c.h1 = j.value("h1", c.h1);
  c.h2 = j.value("h2", c.h2);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  return c;
}

TransitionReport train_transition_model(const std::vector<TransitionExample>& data,
                                        const TransitionTrainConfig& cfg) {
  if (data.size() < 4) throw TooFewExamples("transition training needs at least 4 transitions");
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng split = derive_rng(cfg.seed, 1);
  std::shuffle(perm.begin(), perm.end(), split);
  const std::size_t n_train = std::max<std::size_t>(1, data.size() * 7 / 10);
  std::vector<TransitionExample> train, hold;
  for (std::size_t i = 0; i < perm.size(); ++i) (i < n_train ? train : hold).push_back(data[perm[i]]);

  const std::size_t in = data.front().input.size();
  Rng init = derive_rng(cfg.seed, 0);
  TransitionModel model(SoftmaxMlp(in, cfg.h1, cfg.h2, kNumDialogueActs, init),
                        SoftmaxMlp(in, cfg.h1, cfg.h2, kNumSentiments, init),
                        SoftmaxMlp(in, cfg.h1, cfg.h2, 2, init));
  std::array<FlatAdam, 3> adam = {FlatAdam(model.head(0).params().size(), cfg.learning_rate),
                                  FlatAdam(model.head(1).params().size(), cfg.learning_rate),
                                  FlatAdam(model.head(2).params().size(), cfg.learning_rate)};
  TransitionReport rep;
  rep.uniform_perplexity = joint_perplexity(TransitionModel::uniform(in - kTransitionExtraDim), hold);
  TransitionModel best = model;
  double best_nll = mean_nll(model, hold);
  std::size_t since = 0;
  Rng shuffle = derive_rng(cfg.seed, 2);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t ep = 1; ep <= cfg.max_epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), shuffle);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      Matrix x(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(e - b));
      std::array<std::vector<int>, 3> labels;
      for (std::size_t i = b; i < e; ++i) {
        const auto& ex = train[order[i]];
        x.col(static_cast<Eigen::Index>(i - b)) = ex.input;
        labels[0].push_back(static_cast<int>(ex.next.act));
        labels[1].push_back(static_cast<int>(ex.next.sentiment));
        labels[2].push_back(ex.next.generic ? 1 : 0);
      }
      for (std::size_t h = 0; h < 3; ++h) {
        Vector g;
        model.head(h).loss_and_grad(x, labels[h], g);
        adam[h].step(model.head(h).params(), g);
      }
    }
    rep.epochs = ep;
    const double nll = mean_nll(model, hold);
    if (nll < best_nll) {
      best_nll = nll;
      best = model;
      since = 0;
    } else if (++since >= cfg.patience) {
      break;
    }
  }
  rep.model = std::move(best);
  rep.holdout_perplexity = std::exp(best_nll);
  rep.baseline_perplexity = ClassFrequencyBaseline(train).perplexity(hold);
  rep.train_size = train.size();
  rep.holdout_size = hold.size();
  return rep;
}

// ---------------------------------------------------------------------------
// Simulation

nlohmann::json MDPConfig::to_json() const { return {{"t_max", t_max}, {"precedence", precedence}}; }

MDPConfig MDPConfig::from_json(const nlohmann::json& j, MDPConfig c) {
  c.t_max = j.value("t_max", c.t_max);
  c.precedence = j.value("precedence", c.precedence);
  if (c.t_max == 0) throw InvalidArgument("t_max must be positive");
  return c;
}

SampledHistory MDP::reset(Rng& rng) const {
  if (store.empty()) throw EmptyLogs("empty history store");
  const auto& init = store.initial_records();
  std::size_t seed_record;
  if (init.empty()) {
    std::uniform_int_distribution<std::size_t> u(0, store.size() - 1);
    seed_record = u(rng);
  } else {
    std::uniform_int_distribution<std::size_t> u(0, init.size() - 1);
    seed_record = init[u(rng)];
  }
  return sample_history(store, store.at(seed_record).z, rng);
}

std::optional<std::size_t> MDP::priority_action(std::size_t record) const {
  return priority_select_index(store.at(record).candidates, config.precedence);
}

StepResult MDP::step_with_action(std::size_t record, std::size_t t, std::size_t action, Rng& rng) const {
  const auto& rec = store.at(record);
  if (action >= rec.candidates.size()) throw InvalidArgument("action out of range");
  StepResult s;
  s.record = record;
  s.z = rec.z;
  s.action = action;
  s.priority = rec.candidates[action].priority;
  const Vector p = outcome.class_probs(rec, action);
  s.r = expected_reward(p);
  s.y = static_cast<int>(sample_index(p, rng));
  s.z_next = sample_state(transition.probs({rec, action, s.y}), rng);
  const auto next = sample_history(store, s.z_next, rng);
  s.next_record = next.record;
  s.fallback = next.fallback;
  s.done = s.z_next.act == DialogueAct::Goodbye || t + 1 >= config.t_max;
  return s;
}

StepResult MDP::step(std::size_t record, std::size_t t, const Policy& policy, Rng& rng) const {
  const auto& rec = store.at(record);
  if (const auto pa = priority_action(record)) {
    auto s = step_with_action(record, t, *pa, rng);
    s.priority = true;
    return s;
  }
  auto s = step_with_action(record, t, policy.choose(rec.features, rec.candidates, rng), rng);
  s.priority = false;
  return s;
}

EpisodeTrace run_episode(const MDP& mdp, const Policy& policy, Rng& rng) {
  EpisodeTrace tr;
  std::size_t rec = mdp.reset(rng).record;
  for (std::size_t t = 0; t < mdp.config.t_max; ++t) {
    auto s = mdp.step(rec, t, policy, rng);
    tr.ret += s.r;
    rec = s.next_record;
    const bool done = s.done;
    tr.steps.push_back(std::move(s));
    if (done) break;
  }
  return tr;
}

double SimulationReport::se_reward_per_step() const {
  return episodes > 0 ? sd_reward_per_step / std::sqrt(static_cast<double>(episodes)) : 0.0;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

SimulationReport simulate(const MDP& mdp, const Policy& policy, std::size_t n, std::uint64_t seed,
                          std::size_t threads) {
  std::vector<EpisodeTrace> traces(n);
  const auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t e = lo; e < hi; ++e) {
      Rng rng = derive_rng(seed, e);
      traces[e] = run_episode(mdp, policy, rng);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    run_range(0, n);
  } else {
    std::vector<std::future<void>> jobs;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t lo = 0; lo < n; lo += chunk)
      jobs.push_back(std::async(std::launch::async, run_range, lo, std::min(n, lo + chunk)));
    for (auto& j : jobs) j.get();
  }

  SimulationReport rep;
  rep.episodes = n;
  for (const auto& tr : traces) {
    rep.returns.push_back(tr.ret);
    rep.lengths.push_back(static_cast<double>(tr.steps.size()));
    rep.rewards_per_step.push_back(tr.steps.empty() ? 0.0 : tr.ret / static_cast<double>(tr.steps.size()));
    for (const auto& s : tr.steps) {
      ++rep.total_steps;
      if (s.priority) {
        ++rep.priority_steps;
      } else {
        ++rep.selection_counts[mdp.store.at(s.record).candidates[s.action].model_id];
      }
    }
  }
  std::tie(rep.avg_return, rep.sd_return) = mean_sd(rep.returns);
  std::tie(rep.avg_reward_per_step, rep.sd_reward_per_step) = mean_sd(rep.rewards_per_step);
  std::tie(rep.avg_length, rep.sd_length) = mean_sd(rep.lengths);
  return rep;
}

std::size_t Contingency::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

Contingency compare_policies(const MDP& mdp, const Policy& a, const Policy& b, std::size_t n,
                             std::uint64_t seed) {
  std::set<std::string> names;
  for (const auto& r : mdp.store.records())
    for (const auto& c : r.candidates) names.insert(c.model_id);
  Contingency ct;
  ct.models.assign(names.begin(), names.end());
  ct.counts.assign(ct.models.size(), std::vector<std::size_t>(ct.models.size(), 0));
  const auto idx = [&](const std::string& m) {
    return static_cast<std::size_t>(std::lower_bound(ct.models.begin(), ct.models.end(), m) -
                                    ct.models.begin());
  };
  for (std::size_t e = 0; e < n; ++e) {
    Rng rng = derive_rng(seed, e);
    Rng rng_b = derive_rng(seed ^ 0x9e3779b97f4a7c15ull, e);
    std::size_t rec = mdp.reset(rng).record;
    for (std::size_t t = 0; t < mdp.config.t_max; ++t) {
      const auto& r = mdp.store.at(rec);
      const auto pa = mdp.priority_action(rec);
      const std::size_t ia = pa ? *pa : a.choose(r.features, r.candidates, rng);
      const std::size_t ib = pa ? *pa : b.choose(r.features, r.candidates, rng_b);
      ++ct.counts[idx(r.candidates[ia].model_id)][idx(r.candidates[ib].model_id)];
      const auto s = mdp.step_with_action(rec, t, ia, rng);
      rec = s.next_record;
      if (s.done) break;
    }
  }
  return ct;
}

}  // namespace converse
