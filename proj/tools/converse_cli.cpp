#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "converse/ensemble.hpp"
#include "converse/error.hpp"
#include "converse/io.hpp"
#include "converse/manager.hpp"
#include "converse/mdp.hpp"
#include "converse/policy.hpp"
#include "converse/qlearning.hpp"
#include "converse/reward.hpp"
#include "converse/scoring.hpp"
#include "converse/service.hpp"
#include "converse/synth.hpp"
#include "converse/text.hpp"

using namespace converse;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Shared options and configuration.

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
  cmd->add_option("--config", c.config, "JSON config; defaults to $CONVERSE_CONFIG");
  auto* o = cmd->add_option("--out", c.out, "output path");
  if (out_required) o->required();
}

nlohmann::json load_config(const Common& c) {
  std::string path = c.config;
  if (path.empty())
    if (const char* env = std::getenv("CONVERSE_CONFIG")) path = env;
  if (path.empty()) return nlohmann::json::object();
  auto j = read_json(path);
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  return j;
}

nlohmann::json section(const nlohmann::json& cfg, const char* name) {
  return cfg.contains(name) ? cfg.at(name) : nlohmann::json::object();
}

std::uint64_t seed_of(const Common& c, const nlohmann::json& sec) {
  return c.seed ? *c.seed : sec.value("seed", std::uint64_t{0});
}

FeatureConfig feature_config(const nlohmann::json& cfg) {
  const auto s = section(cfg, "features");
  FeatureConfig f;
  f.embedding_dim = s.value("embedding_dim", f.embedding_dim);
  f.pos_buckets = s.value("pos_buckets", f.pos_buckets);
  f.model_ids = s.value("model_ids", f.model_ids);
  f.unigrams = s.value("unigrams", f.unigrams);
  return f;
}

std::shared_ptr<const FeatureExtractor> extractor_for(const FeatureLayout& layout) {
  return std::make_shared<const FeatureExtractor>(layout, bundled_embeddings(layout.config().embedding_dim));
}

std::shared_ptr<const FeatureExtractor> extractor_from_config(const nlohmann::json& cfg) {
  return extractor_for(FeatureLayout(feature_config(cfg)));
}

ScoringNet load_net(const std::string& path) {
  const auto j = read_json(path);
  if (j.value("format", "") == "converse.policy") return NetPolicy::from_json(j).net();
  return ScoringNet::from_json(j);
}

std::vector<std::string> preference_of(const nlohmann::json& cfg, const std::string& flag) {
  if (!flag.empty()) {
    std::vector<std::string> out;
    std::stringstream s(flag);
    for (std::string x; std::getline(s, x, ',');)
      if (!text::trim(x).empty()) out.push_back(std::string(text::trim(x)));
    return out;
  }
  return cfg.value("preference", default_model_ids());
}

/// "random", "fixed-model", "fixed:<a,b,...>", "supervised" (greedy on `scorer`), or a policy/scorer file.
std::shared_ptr<const Policy> load_policy(const std::string& spec, const nlohmann::json& cfg,
                                          const std::string& scorer = "") {
  if (spec == "supervised") {
    if (scorer.empty()) throw InvalidArgument("the supervised policy needs a scorer file");
    return std::make_shared<NetPolicy>(PolicyVariant::GreedyActionValue, load_net(scorer), 1.0, "supervised");
  }
  if (spec == "random") return std::make_shared<RandomPolicy>();
  if (spec == "fixed-model") return std::make_shared<FixedModelPolicy>(preference_of(cfg, ""));
  if (spec.rfind("fixed:", 0) == 0) return std::make_shared<FixedModelPolicy>(preference_of(cfg, spec.substr(6)));
  if (!fs::exists(spec)) throw InvalidArgument("unknown policy " + spec);
  const auto j = read_json(spec);
  if (j.value("format", "") == "converse.policy") return std::make_shared<NetPolicy>(NetPolicy::from_json(j));
  return std::make_shared<NetPolicy>(PolicyVariant::GreedyActionValue, ScoringNet::from_json(j), 1.0, "supervised");
}

const FeatureLayout* layout_of(const Policy& p) {
  if (const auto* np = dynamic_cast<const NetPolicy*>(&p)) return &np->net().layout();
  return nullptr;
}

void check_store_layout(const HistoryStore& store, std::size_t dim) {
  if (!store.empty() && static_cast<std::size_t>(store.at(0).features.rows()) != dim)
    throw LayoutMismatch("store features have " + std::to_string(store.at(0).features.rows()) +
                         " rows, model expects " + std::to_string(dim));
}

std::string g(double x) {
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

void emit(const Common& c, const std::string& name, const std::string& text) {
  std::cout << text;
  if (!c.out.empty()) {
    const fs::path p = fs::is_directory(c.out) ? fs::path(c.out) / name : fs::path(c.out);
    write_text(p, text);
  }
}

std::string metrics_row(const std::string& split, const ScoringMetrics& m) {
  return split + "\t" + g(m.pearson) + "\t" + g(m.spearman) + "\t" + g(m.mse) + "\t" + g(m.accuracy) + "\t" +
         g(m.log_likelihood) + "\n";
}
const char* kMetricsHeader = "split\tpearson\tspearman\tmse\taccuracy\tlog_likelihood\n";

std::vector<LabeledExample> grouped(const std::vector<AMTExample>& data, const FeatureExtractor& ex) {
  auto out = featurize(data, ex);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].group = data[i].context.id;
  return out;
}

TrainConfig scorer_config(const nlohmann::json& sec, const Common& c) {
  TrainConfig t = TrainConfig::from_json(sec);
  t.seed = seed_of(c, sec);
  return t;
}

HyperGrid grid_of(const nlohmann::json& sec) {
  HyperGrid h;
  if (sec.contains("grid")) {
    h.learning_rates = sec["grid"].value("learning_rates", h.learning_rates);
    h.l2 = sec["grid"].value("l2", h.l2);
  }
  return h;
}

std::unique_ptr<TransitionModel> load_transition(const std::string& path, std::size_t scoring_dim) {
  if (path.empty()) return std::make_unique<TransitionModel>(TransitionModel::uniform(scoring_dim));
  auto m = std::make_unique<TransitionModel>(TransitionModel::from_json(read_json(path)));
  if (m->input_dim() != scoring_dim + kTransitionExtraDim)
    throw LayoutMismatch("transition model input does not match the store features");
  return m;
}

LearnedRewardFn learned_from(const std::string& reward_path, const std::string& scorer_path,
                             std::shared_ptr<const FeatureExtractor>& ex) {
  auto model = std::make_shared<const BaggedRewardModel>(BaggedRewardModel::load(reward_path));
  auto scorer = std::make_shared<const ScoringNet>(load_net(scorer_path));
  ex = extractor_for(scorer->layout());
  return make_learned_reward(model, scorer, ex);
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_generate(const Common& c) {
  const auto cfg = load_config(c);
  auto sc = synth::SynthConfig::from_json(section(cfg, "synth"), {});
  sc.seed = seed_of(c, section(cfg, "synth"));
  const auto ex = extractor_from_config(cfg);
  const auto world = synth::make_world(*ex, sc);
  synth::write_world(c.out, world, sc);
  std::cout << "amt_records\t" << world.amt.size() << "\ndialogues\t" << world.dialogues.size() << "\nstore_records\t"
            << world.store.size() << "\n";
  return 0;
}

int cmd_ingest(const Common& c, const std::string& data) {
  const auto s = ingest_amt(data);
  fs::create_directories(c.out);
  const auto write_split = [&](const char* name, const std::vector<AMTExample>& ex) {
    std::vector<AMTRecord> recs;
    for (const auto& e : ex) recs.push_back({e.context.id, e});
    write_amt(fs::path(c.out) / (std::string(name) + ".jsonl"), recs);
  };
  write_split("train", s.train);
  write_split("dev", s.dev);
  write_split("test", s.test);
  const std::string tsv = "split\tcount\ntrain\t" + std::to_string(s.train.size()) + "\ndev\t" +
                          std::to_string(s.dev.size()) + "\ntest\t" + std::to_string(s.test.size()) + "\n";
  write_text(fs::path(c.out) / "splits.tsv", tsv);
  std::cout << tsv;
  return 0;
}

int cmd_train_scorer(const Common& c, const std::string& data) {
  const auto cfg = load_config(c);
  const auto sec = section(cfg, "scorer");
  const auto ex = extractor_from_config(cfg);
  const auto s = ingest_amt(data, ex->nlu());
  const auto train = grouped(s.train, *ex), dev = grouped(s.dev, *ex), test = grouped(s.test, *ex);
  if (train.empty() || dev.empty()) throw EmptySplit("AMT data needs train and dev examples");
  const auto res = train_supervised(train, dev, ex->layout(), grid_of(sec), scorer_config(sec, c));
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "scorer.json", res.net.to_json().dump() + "\n");
  std::string tsv = kMetricsHeader;
  tsv += metrics_row("train", evaluate_scoring(res.net, train));
  tsv += metrics_row("dev", evaluate_scoring(res.net, dev));
  if (!test.empty()) tsv += metrics_row("test", evaluate_scoring(res.net, test));
  write_text(fs::path(c.out) / "metrics.tsv", tsv);
  const nlohmann::json sel = {{"learning_rate", res.learning_rate}, {"l2", res.l2},
                              {"dev_log_likelihood", res.dev_log_likelihood}, {"best_epoch", res.best_epoch},
                              {"epochs_run", res.epochs_run}};
  write_text(fs::path(c.out) / "selection.json", sel.dump(2) + "\n");
  std::cout << tsv;
  return 0;
}

int cmd_eval_scorer(const Common& c, const std::string& model, const std::string& data, const std::string& split) {
  const ScoringNet net = load_net(model);
  const auto ex = extractor_for(net.layout());
  const auto s = ingest_amt(data, ex->nlu());
  std::string tsv = kMetricsHeader;
  const auto add = [&](const char* name, const std::vector<AMTExample>& d) {
    if (!d.empty() && (split == "all" || split == name)) tsv += metrics_row(name, evaluate_scoring(net, grouped(d, *ex)));
  };
  if (split != "all" && split != "train" && split != "dev" && split != "test")
    throw InvalidArgument("--split must be train, dev, test or all");
  add("train", s.train);
  add("dev", s.dev);
  add("test", s.test);
  emit(c, "metrics.tsv", tsv);
  return 0;
}

int cmd_train_reward(const Common& c, const std::string& logs, const std::string& scorer_path) {
  const auto cfg = load_config(c);
  const auto sec = section(cfg, "reward");
  const ScoringNet scorer = load_net(scorer_path);
  const auto ex = extractor_for(scorer.layout());
  const auto data = reward_examples_from_logs(DialogueLog::read(logs), scorer, *ex);
  const auto rep = train_bagged(data, seed_of(c, sec), sec.value("l2_grid", kDefaultRidgeGrid));
  fs::create_directories(c.out);
  rep.model.save(fs::path(c.out) / "reward_model.json");
  std::string tsv = "member\tholdout_size\tholdout_mse\n";
  for (std::size_t k = 0; k < rep.holdouts.size(); ++k)
    tsv += std::to_string(k) + "\t" + std::to_string(rep.holdouts[k].size()) + "\t" + g(rep.holdout_mse[k]) + "\n";
  const auto m = evaluate_reward(rep.model, data);
  tsv += "all\t" + std::to_string(data.size()) + "\t" + g(m.mse) + "\n";
  write_text(fs::path(c.out) / "metrics.tsv", tsv);
  std::cout << tsv;
  return 0;
}

int cmd_finetune(const Common& c, const std::string& logs, const std::string& scorer_path,
                 const std::string& reward_path) {
  const auto cfg = load_config(c);
  const auto sec = section(cfg, "finetune");
  std::shared_ptr<const FeatureExtractor> ex;
  const auto learned = learned_from(reward_path, scorer_path, ex);
  const auto pairs = learned_reward_targets(DialogueLog::read(logs), learned, *ex);
  TrainConfig tc = TrainConfig::from_json(sec);
  tc.seed = seed_of(c, sec);
  const auto res = finetune_learned_reward(load_net(scorer_path), pairs, tc);
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "scorer.json", res.net.to_json().dump() + "\n");
  std::string tsv = "epoch\ttrain_mse\tholdout_mse\n";
  for (std::size_t e = 0; e < res.train_mse.size(); ++e)
    tsv += std::to_string(e) + "\t" + g(res.train_mse[e]) + "\t" + g(res.holdout_mse[e]) + "\n";
  write_text(fs::path(c.out) / "curve.tsv", tsv);
  std::cout << tsv;
  return 0;
}

std::vector<RecordedDialogue> recorded(const std::vector<Dialogue>& logs, const FeatureExtractor& ex,
                                       RewardMode mode, const LearnedRewardFn& learned) {
  std::vector<RecordedDialogue> out;
  for (const auto& d : logs) {
    if (mode == RewardMode::FinalScore && !d.final_score) continue;
    auto r = record_dialogue(d, ex, mode, learned);
    if (!r.steps.empty()) out.push_back(std::move(r));
  }
  if (out.empty()) throw EmptyLogs("no usable dialogues in the logs");
  return out;
}

int cmd_train_reinforce(const Common& c, const std::string& logs, const std::string& init,
                        const std::string& mode_s, const std::string& reward, const std::string& reward_scorer) {
  const auto cfg = load_config(c);
  const auto sec = section(cfg, "reinforce");
  auto rc = ReinforceConfig::from_json(sec, {});
  rc.seed = seed_of(c, sec);
  const ScoringNet net = load_net(init);
  auto ex = extractor_for(net.layout());
  const RewardMode mode = reward_mode_from_string(mode_s.empty() ? sec.value("reward_mode", std::string("final-score")) : mode_s);
  LearnedRewardFn learned;
  if (mode == RewardMode::LearnedReward) {
    if (reward.empty()) throw InvalidArgument("learned reward shaping needs --reward");
    std::shared_ptr<const FeatureExtractor> rex;
    learned = learned_from(reward, reward_scorer.empty() ? init : reward_scorer, rex);
  }
  const auto data = recorded(DialogueLog::read(logs), *ex, mode, learned);
  const auto res = train_offpolicy_reinforce(net, data, rc);
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "policy_stochastic.json", res.stochastic.to_json().dump() + "\n");
  write_text(fs::path(c.out) / "policy_greedy.json", res.greedy.to_json().dump() + "\n");
  std::string tsv = "temperature\tlearning_rate\tdev_return\tselected\n";
  for (std::size_t i = 0; i < res.grid.size(); ++i)
    tsv += g(res.grid[i].temperature) + "\t" + g(res.grid[i].learning_rate) + "\t" + g(res.grid[i].dev_return) +
           "\t" + (i == res.best ? "1" : "0") + "\n";
  write_text(fs::path(c.out) / "grid.tsv", tsv);
  const nlohmann::json test = {{"expected_return", res.test.expected_return},
                               {"expected_steps", res.test.expected_steps},
                               {"test_dialogues", res.test_ids.size()}};
  write_text(fs::path(c.out) / "test.json", test.dump(2) + "\n");
  std::cout << tsv;
  return 0;
}

int cmd_build_store(const Common& c, const std::string& logs, const std::string& scorer) {
  const auto cfg = load_config(c);
  const auto ex = scorer.empty() ? extractor_from_config(cfg) : extractor_for(load_net(scorer).layout());
  const auto ens = make_default_ensemble(default_services(ex->layout().config().embedding_dim));
  const auto store = build_history_store(DialogueLog::read(logs), ens, *ex, seed_of(c, section(cfg, "store")));
  store.save(c.out);
  std::cout << "records\t" << store.size() << "\nstates\t" << store.index().size() << "\ninitial\t"
            << store.initial_records().size() << "\n";
  return 0;
}

int cmd_train_transitions(const Common& c, const std::string& logs, const std::string& scorer_path) {
  const auto cfg = load_config(c);
  const auto sec = section(cfg, "transitions");
  auto tc = TransitionTrainConfig::from_json(sec, {});
  tc.seed = seed_of(c, sec);
  const ScoringNet scorer = load_net(scorer_path);
  const auto ex = extractor_for(scorer.layout());
  const auto data = extract_transitions(DialogueLog::read(logs), *ex, scorer, tc.seed);
  const auto rep = train_transition_model(data, tc);
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "transition_model.json", rep.model.to_json().dump() + "\n");
  const std::string tsv = "train_size\tholdout_size\tepochs\tholdout_perplexity\tbaseline_perplexity\tuniform_perplexity\n" +
                          std::to_string(rep.train_size) + "\t" + std::to_string(rep.holdout_size) + "\t" +
                          std::to_string(rep.epochs) + "\t" + g(rep.holdout_perplexity) + "\t" +
                          g(rep.baseline_perplexity) + "\t" + g(rep.uniform_perplexity) + "\n";
  write_text(fs::path(c.out) / "report.tsv", tsv);
  std::cout << tsv;
  return 0;
}

struct SimInputs {
  HistoryStore store;
  std::shared_ptr<const ScoringNet> outcome_net;
  std::unique_ptr<ScoringNetOutcome> outcome;
  std::unique_ptr<TransitionModel> transition;
  MDPConfig mdp;
};

SimInputs sim_inputs(const nlohmann::json& cfg, const std::string& store, const std::string& outcome,
                     const std::string& transition) {
  SimInputs s;
  s.store = HistoryStore::load(store);
  if (s.store.empty()) throw EmptyLogs("empty history store");
  s.outcome_net = std::make_shared<const ScoringNet>(load_net(outcome));
  check_store_layout(s.store, s.outcome_net->input_dim());
  s.outcome = std::make_unique<ScoringNetOutcome>(s.outcome_net);
  s.transition = load_transition(transition, s.outcome_net->input_dim());
  s.mdp = MDPConfig::from_json(section(cfg, "mdp"), {});
  return s;
}

int cmd_train_qlearning(const Common& c, const std::string& store, const std::string& init,
                        const std::string& outcome, const std::string& transition) {
  const auto cfg = load_config(c);
  const auto sec = section(cfg, "qlearning");
  auto qc = QLearningConfig::from_json(sec, {});
  qc.seed = seed_of(c, sec);
  auto in = sim_inputs(cfg, store, outcome.empty() ? init : outcome, transition);
  const ScoringNet net = load_net(init);
  check_store_layout(in.store, net.input_dim());
  const MDP mdp{in.store, *in.outcome, *in.transition, in.mdp};
  const auto res = qlearning_train(net, mdp, mdp, qc);
  fs::create_directories(c.out);
  const NetPolicy policy(PolicyVariant::GreedyActionValue, res.net, 1.0, "q-learning");
  write_text(fs::path(c.out) / "policy.json", policy.to_json().dump() + "\n");
  const auto tsv = phase_log_tsv(res.log);
  write_text(fs::path(c.out) / "log.tsv", tsv);
  std::cout << tsv;
  return 0;
}

std::string sim_header() {
  return "policy\tepisodes\tavg_return\tsd_return\tavg_reward_per_step\tsd_reward_per_step\tse_reward_per_step\t"
         "avg_length\tsd_length\tpriority_steps\ttotal_steps\n";
}

int cmd_simulate(const Common& c, const std::string& store, const std::string& policy_spec,
                 const std::string& outcome, const std::string& transition, std::size_t episodes,
                 std::size_t threads) {
  const auto cfg = load_config(c);
  auto in = sim_inputs(cfg, store, outcome, transition);
  const auto policy = load_policy(policy_spec, cfg, outcome);
  if (const auto* l = layout_of(*policy)) check_store_layout(in.store, l->total_dim());
  const MDP mdp{in.store, *in.outcome, *in.transition, in.mdp};
  const auto r = simulate(mdp, *policy, episodes, seed_of(c, section(cfg, "simulate")), threads);
  std::string tsv = sim_header();
  tsv += policy->id() + "\t" + std::to_string(r.episodes) + "\t" + g(r.avg_return) + "\t" + g(r.sd_return) + "\t" +
         g(r.avg_reward_per_step) + "\t" + g(r.sd_reward_per_step) + "\t" + g(r.se_reward_per_step()) + "\t" +
         g(r.avg_length) + "\t" + g(r.sd_length) + "\t" + std::to_string(r.priority_steps) + "\t" +
         std::to_string(r.total_steps) + "\n";
  emit(c, "simulation.tsv", tsv);
  return 0;
}

int cmd_compare(const Common& c, const std::string& store, const std::string& a, const std::string& b,
                const std::string& outcome, const std::string& transition, std::size_t episodes) {
  const auto cfg = load_config(c);
  auto in = sim_inputs(cfg, store, outcome, transition);
  const auto pa = load_policy(a, cfg, outcome), pb = load_policy(b, cfg, outcome);
  for (const auto* p : {pa.get(), pb.get()})
    if (const auto* l = layout_of(*p)) check_store_layout(in.store, l->total_dim());
  const MDP mdp{in.store, *in.outcome, *in.transition, in.mdp};
  const auto ct = compare_policies(mdp, *pa, *pb, episodes, seed_of(c, section(cfg, "simulate")));
  std::string tsv = "a\\b";
  for (const auto& m : ct.models) tsv += "\t" + m;
  tsv += "\n";
  for (std::size_t i = 0; i < ct.models.size(); ++i) {
    tsv += ct.models[i];
    for (std::size_t j = 0; j < ct.models.size(); ++j) tsv += "\t" + std::to_string(ct.counts[i][j]);
    tsv += "\n";
  }
  emit(c, "contingency.tsv", tsv);
  return 0;
}

int cmd_eval_offpolicy(const Common& c, const std::string& logs, const std::string& policy_spec,
                       const std::string& mode_s, const std::string& reward, const std::string& reward_scorer) {
  const auto cfg = load_config(c);
  const auto policy = load_policy(policy_spec, cfg, reward_scorer);
  std::shared_ptr<const FeatureExtractor> ex;
  if (const auto* l = layout_of(*policy)) {
    ex = extractor_for(*l);
  } else if (!reward_scorer.empty()) {
    ex = extractor_for(load_net(reward_scorer).layout());
  } else {
    ex = extractor_from_config(cfg);
  }
  const RewardMode mode = reward_mode_from_string(mode_s);
  LearnedRewardFn learned;
  if (mode == RewardMode::LearnedReward) {
    if (reward.empty() || reward_scorer.empty())
      throw InvalidArgument("learned reward evaluation needs --reward and --scorer");
    std::shared_ptr<const FeatureExtractor> rex;
    learned = learned_from(reward, reward_scorer, rex);
  }
  const auto data = recorded(DialogueLog::read(logs), *ex, mode, learned);
  const auto e = offpolicy_estimate(*policy, data);
  const nlohmann::json j = {{"policy", policy->id()},
                            {"dialogues", data.size()},
                            {"expected_return", e.expected_return},
                            {"expected_steps", e.expected_steps}};
  emit(c, "offpolicy.json", j.dump(2) + "\n");
  return 0;
}

struct LiveParts {
  std::shared_ptr<const Policy> policy;
  std::shared_ptr<const FeatureExtractor> ex;
  std::shared_ptr<const ResponseEnsemble> ens;
};

LiveParts live_parts(const nlohmann::json& cfg, const std::string& policy_spec) {
  LiveParts p;
  p.policy = load_policy(policy_spec, cfg);
  const auto* l = layout_of(*p.policy);
  p.ex = l ? extractor_for(*l) : extractor_from_config(cfg);
  p.ens = std::make_shared<const ResponseEnsemble>(
      make_default_ensemble(default_services(p.ex->layout().config().embedding_dim)));
  return p;
}

int cmd_chat(const Common& c, const std::string& policy_spec, const std::string& log_path) {
  const auto cfg = load_config(c);
  auto sc = ServiceConfig::from_json(section(cfg, "service"), {});
  const auto parts = live_parts(cfg, policy_spec);
  std::shared_ptr<DialogueLog> log;
  if (!log_path.empty()) log = std::make_shared<DialogueLog>(log_path);
  ChatService svc(parts.ens, parts.ex, parts.policy, sc, log, seed_of(c, section(cfg, "service")));
  const auto sid = svc.handle({{"v", kProtocolVersion}, {"type", "start"}, {"debug", false}}).at("session_id");
  std::cout << "type a message; '/end [rating]' finishes the conversation\n";
  for (std::string line; std::cout << "> " << std::flush, std::getline(std::cin, line);) {
    const std::string t(text::trim(line));
    if (t.empty()) continue;
    if (t.rfind("/end", 0) == 0) {
      nlohmann::json m = {{"v", kProtocolVersion}, {"type", "end"}, {"session_id", sid}};
      const std::string rest(text::trim(t.substr(4)));
      if (!rest.empty()) m["rating"] = std::stod(rest);
      const auto r = svc.handle(m);
      if (r.at("type") == "error") {
        std::cout << "error: " << r.at("text").get<std::string>() << "\n";
        continue;
      }
      return 0;
    }
    const auto r = svc.handle({{"v", kProtocolVersion}, {"type", "user"}, {"session_id", sid}, {"text", t}});
    std::cout << (r.at("type") == "error" ? "error: " : "") << r.at("text").get<std::string>() << "\n";
  }
  svc.handle({{"v", kProtocolVersion}, {"type", "end"}, {"session_id", sid}});
  return 0;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const Common& c, const std::string& policy_spec, std::optional<unsigned short> port,
              const std::string& log_path) {
  const auto cfg = load_config(c);
  auto sc = ServiceConfig::from_json(section(cfg, "service"), {});
  if (port) sc.port = *port;
  if (!log_path.empty()) sc.log_path = log_path;
  const auto parts = live_parts(cfg, policy_spec);
  auto log = std::make_shared<DialogueLog>(sc.log_path);
  ChatService svc(parts.ens, parts.ex, parts.policy, sc, log, seed_of(c, section(cfg, "service")));
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
#ifdef CONVERSE_HAVE_WS
  serve_websocket(svc, g_stop);
  return 0;
#else
  throw BackendUnavailable("built without websocket support");
#endif
}

bool is_user_error(const std::exception& e) {
  return dynamic_cast<const converse::Error*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e) ||
         dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::out_of_range*>(&e) ||
         dynamic_cast<const fs::filesystem_error*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"converse: ensemble dialogue manager training and evaluation"};
  app.require_subcommand(1);
  Common c;
  std::string data, logs, scorer, reward, init, store, policy = "random", a, b, outcome, transition, mode, split = "all",
                                                        log_path;
  std::size_t episodes = 500, threads = 1;
  std::optional<unsigned short> port;

  auto* gen = app.add_subcommand("generate-synthetic", "write a planted synthetic dataset");
  add_common(gen, c, true);

  auto* ingest = app.add_subcommand("ingest-amt", "split and preprocess AMT ratings");
  add_common(ingest, c, true);
  ingest->add_option("--data", data, "AMT JSONL")->required();

  auto* ts = app.add_subcommand("train-scorer", "supervised AMT scoring model");
  add_common(ts, c, true);
  ts->add_option("--data", data, "AMT JSONL")->required();

  auto* es = app.add_subcommand("eval-scorer", "scoring metrics on AMT data");
  add_common(es, c, false);
  es->add_option("--model", scorer, "scorer JSON")->required();
  es->add_option("--data", data, "AMT JSONL")->required();
  es->add_option("--split", split, "train, dev, test or all");

  auto* tr = app.add_subcommand("train-reward", "bagged linear reward model from rated logs");
  add_common(tr, c, true);
  tr->add_option("--logs", logs, "dialogue JSONL")->required();
  tr->add_option("--scorer", scorer, "scorer JSON")->required();

  auto* ft = app.add_subcommand("finetune-learned-reward", "regress the scorer onto the learned reward");
  add_common(ft, c, true);
  ft->add_option("--logs", logs, "dialogue JSONL")->required();
  ft->add_option("--scorer", scorer, "scorer JSON")->required();
  ft->add_option("--reward", reward, "reward model JSON")->required();

  auto* rf = app.add_subcommand("train-reinforce", "off-policy REINFORCE from logs");
  add_common(rf, c, true);
  rf->add_option("--logs", logs, "dialogue JSONL")->required();
  rf->add_option("--init", init, "initial scorer JSON")->required();
  rf->add_option("--reward-mode", mode, "final-score or learned-reward");
  rf->add_option("--reward", reward, "reward model JSON (learned-reward)");
  rf->add_option("--reward-scorer", scorer, "scorer for reward features (default --init)");

  auto* bs = app.add_subcommand("build-store", "history store for the abstract MDP");
  add_common(bs, c, true);
  bs->add_option("--logs", logs, "dialogue JSONL")->required();
  bs->add_option("--scorer", scorer, "take the feature layout from this scorer");

  auto* tt = app.add_subcommand("train-transitions", "transition heads of the abstract MDP");
  add_common(tt, c, true);
  tt->add_option("--logs", logs, "dialogue JSONL")->required();
  tt->add_option("--scorer", scorer, "scorer JSON")->required();

  auto* tq = app.add_subcommand("train-qlearning", "Q-learning against the abstract MDP");
  add_common(tq, c, true);
  tq->add_option("--store", store, "history store directory")->required();
  tq->add_option("--init", init, "initial scorer JSON")->required();
  tq->add_option("--outcome", outcome, "scorer used for rewards (default --init)");
  tq->add_option("--transition", transition, "transition model JSON (default uniform)");

  auto* sim = app.add_subcommand("simulate", "roll out a policy in the abstract MDP");
  add_common(sim, c, false);
  sim->add_option("--store", store, "history store directory")->required();
  sim->add_option("--policy", policy, "random, fixed-model, fixed:<ids>, supervised, or a policy file");
  sim->add_option("--outcome", outcome, "scorer used for rewards")->required();
  sim->add_option("--transition", transition, "transition model JSON (default uniform)");
  sim->add_option("--episodes", episodes, "number of episodes");
  sim->add_option("--threads", threads, "worker threads");

  auto* cmp = app.add_subcommand("compare-policies", "contingency of two policies' model choices");
  add_common(cmp, c, false);
  cmp->add_option("--store", store, "history store directory")->required();
  cmp->add_option("--a", a, "policy that drives the episodes")->required();
  cmp->add_option("--b", b, "policy queried on the same candidates")->required();
  cmp->add_option("--outcome", outcome, "scorer used for rewards")->required();
  cmp->add_option("--transition", transition, "transition model JSON (default uniform)");
  cmp->add_option("--episodes", episodes, "number of episodes");

  auto* ev = app.add_subcommand("eval-offpolicy", "importance-weighted return of a policy on logs");
  add_common(ev, c, false);
  ev->add_option("--logs", logs, "dialogue JSONL")->required();
  ev->add_option("--policy", policy, "policy spec")->required();
  ev->add_option("--reward-mode", mode, "final-score or learned-reward")->default_val("final-score");
  ev->add_option("--reward", reward, "reward model JSON (learned-reward)");
  ev->add_option("--scorer", scorer, "scorer for reward features");

  auto* chat = app.add_subcommand("chat", "terminal conversation");
  add_common(chat, c, false);
  chat->add_option("--policy", policy, "policy spec");
  chat->add_option("--log", log_path, "append the finished dialogue here");

  auto* serve = app.add_subcommand("serve", "websocket chat service");
  add_common(serve, c, false);
  serve->add_option("--policy", policy, "policy spec");
  serve->add_option("--port", port, "listening port");
  serve->add_option("--log", log_path, "dialogue log path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << app.help();
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(c);
    if (*ingest) return cmd_ingest(c, data);
    if (*ts) return cmd_train_scorer(c, data);
    if (*es) return cmd_eval_scorer(c, scorer, data, split);
    if (*tr) return cmd_train_reward(c, logs, scorer);
    if (*ft) return cmd_finetune(c, logs, scorer, reward);
    if (*rf) return cmd_train_reinforce(c, logs, init, mode, reward, scorer);
    if (*bs) return cmd_build_store(c, logs, scorer);
    if (*tt) return cmd_train_transitions(c, logs, scorer);
    if (*tq) return cmd_train_qlearning(c, store, init, outcome, transition);
    if (*sim) return cmd_simulate(c, store, policy, outcome, transition, episodes, threads);
    if (*cmp) return cmd_compare(c, store, a, b, outcome, transition, episodes);
    if (*ev) return cmd_eval_offpolicy(c, logs, policy, mode, reward, scorer);
    if (*chat) return cmd_chat(c, policy, log_path);
    if (*serve) return cmd_serve(c, policy, port, log_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_user_error(e) ? 1 : 2;
  } catch (...) {
    std::cerr << "error: unknown failure\n";
    return 2;
  }
  return 1;
}
