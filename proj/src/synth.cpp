#include "converse/synth.hpp"

#include <algorithm>
#include <array>

#include "converse/ensemble.hpp"
#include "converse/error.hpp"
#include "converse/text.hpp"

namespace converse::synth {

namespace {

struct Topic {
  const char* name;
  std::array<const char*, 4> words;
};

const std::array<Topic, 10> kTopics = {{
    {"movies", {"movies", "actor", "film", "cinema"}},
    {"music", {"music", "guitar", "song", "band"}},
    {"sports", {"football", "soccer", "tennis", "team"}},
    {"food", {"pizza", "pasta", "cooking", "restaurant"}},
    {"travel", {"travel", "paris", "beach", "airport"}},
    {"books", {"books", "novel", "author", "library"}},
    {"science", {"science", "physics", "space", "planet"}},
    {"pets", {"dogs", "cats", "puppy", "animals"}},
    {"weather", {"weather", "rain", "snow", "summer"}},
    {"games", {"games", "chess", "video", "puzzle"}},
}};

const std::array<const char*, 8> kUserTemplates = {
    "i really like {}",          "what do you think about {}", "tell me about {}",
    "do you like {}?",           "{} is boring",               "i hate {}",
    "my friend loves {}",        "why is {} so popular?",
};
const std::array<const char*, 5> kOpeners = {"hello there", "hi", "good morning", "hey how are you?",
                                             "let us chat"};
const std::array<const char*, 6> kOnTopic = {
    "{} is one of my favourite things", "i also enjoy {} a lot", "have you tried {} before?",
    "people say {} is great fun",       "i read something new about {}", "what kind of {} do you like?",
};
const std::array<const char*, 6> kGeneric = {"i see", "ok", "that is interesting", "tell me more",
                                             "really?", "i do not know"};
const std::array<const char*, 4> kNegativeReplies = {"that is awful", "i hate that", "that is terrible",
                                                     "you are stupid"};

template <class A>
const auto& pick(const A& a, Rng& rng) {
  std::uniform_int_distribution<std::size_t> u(0, a.size() - 1);
  return a[u(rng)];
}

std::string fill(const std::string& tmpl, const std::string& word) {
  std::string s = tmpl;
  if (const auto p = s.find("{}"); p != std::string::npos) s.replace(p, 2, word);
  return s;
}

std::string user_utterance(Rng& rng) { return fill(pick(kUserTemplates, rng), pick(pick(kTopics, rng).words, rng)); }

/// Topic words mentioned in the last user turn.
std::vector<std::string> mentioned(const Dialogue& d) {
  std::vector<std::string> out;
  const Utterance* u = d.last_user();
  if (!u) return out;
  const auto toks = text::tokenize(u->text);
  for (const auto& t : kTopics)
    for (const char* w : t.words)
      if (std::find(toks.begin(), toks.end(), w) != toks.end()) out.emplace_back(w);
  return out;
}

std::size_t sample_class(const std::vector<double>& p, Rng& rng) {
  std::discrete_distribution<std::size_t> d(p.begin(), p.end());
  return d(rng);
}

int noisy(int label, double noise, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < noise) {
    std::uniform_int_distribution<int> k(1, 5);
    return k(rng);
  }
  return label;
}

}  // namespace

int PlantedRule::label(const Vector& x) const {
  const double s = x[static_cast<Eigen::Index>(similarity_index)];
  const int bucket = (s > low ? 1 : 0) + (s > high ? 1 : 0);
  return 1 + 2 * (x[static_cast<Eigen::Index>(overlap_index)] > 0.5 ? 1 : 0) + bucket;
}

nlohmann::json PlantedRule::to_json() const {
  return {{"similarity_index", similarity_index}, {"overlap_index", overlap_index}, {"low", low}, {"high", high}};
}

PlantedRule PlantedRule::from_json(const nlohmann::json& j) {
  return {j.at("similarity_index").get<std::size_t>(), j.at("overlap_index").get<std::size_t>(),
          j.at("low").get<double>(), j.at("high").get<double>()};
}

std::vector<ModelProfile> SynthConfig::default_profiles() {
  return {{model_ids::kAlicebot, 0.2, 0.5},
          {model_ids::kElizabot, 0.1, 0.6},
          {model_ids::kFactGenerator, 0.5, 0.0},
          {model_ids::kSubtitles, 0.3, 0.2},
          {model_ids::kSearchSnippets, 0.7, 0.0}};
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& p : models) m.push_back({{"model_id", p.model_id}, {"on_topic", p.on_topic}, {"generic", p.generic}});
  return {{"contexts", contexts},       {"store_contexts", store_contexts}, {"dialogues", dialogues},
          {"max_system_turns", max_system_turns}, {"label_noise", label_noise}, {"models", m},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j, SynthConfig c) {
  c.contexts = j.value("contexts", c.contexts);
  c.store_contexts = j.value("store_contexts", c.store_contexts);
  c.dialogues = j.value("dialogues", c.dialogues);
  c.max_system_turns = j.value("max_system_turns", c.max_system_turns);
  c.label_noise = j.value("label_noise", c.label_noise);
  c.seed = j.value("seed", c.seed);
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& m : j.at("models"))
      c.models.push_back({m.at("model_id").get<std::string>(), m.value("on_topic", 0.0), m.value("generic", 0.0)});
  }
  if (c.models.empty()) throw InvalidArgument("synthetic config needs at least one model");
  if (c.label_noise < 0 || c.label_noise > 1) throw InvalidArgument("label_noise outside [0,1]");
  if (c.max_system_turns == 0) throw InvalidArgument("max_system_turns must be positive");
  return c;
}

Dialogue random_context(Rng& rng, std::size_t max_user_turns) {
  std::uniform_int_distribution<std::size_t> n(1, std::max<std::size_t>(1, max_user_turns));
  const std::size_t users = n(rng);
  Dialogue d;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < users; ++i) {
    if (i > 0) d.turns.push_back(Utterance::system(fill(pick(kOnTopic, rng), pick(pick(kTopics, rng).words, rng))));
    d.turns.push_back(Utterance::user(i == 0 && u(rng) < 0.2 ? std::string(pick(kOpeners, rng)) : user_utterance(rng)));
  }
  return d;
}

CandidateResponse random_candidate(const Dialogue& context, const ModelProfile& profile, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  const auto words = mentioned(context);
  std::string text;
  if (r < profile.generic) {
    text = pick(kGeneric, rng);
  } else if (r < profile.generic + profile.on_topic && !words.empty()) {
    text = fill(pick(kOnTopic, rng), pick(words, rng));
  } else {
    text = fill(pick(kOnTopic, rng), pick(pick(kTopics, rng).words, rng));
  }
  return {profile.model_id, text, false, {}};
}

std::vector<CandidateResponse> candidates_for(const Dialogue& context, const std::vector<ModelProfile>& profiles,
                                              Rng& rng) {
  std::vector<CandidateResponse> out;
  for (const auto& p : profiles) out.push_back(random_candidate(context, p, rng));
  return out;
}

PlantedRule fit_rule(const FeatureLayout& layout, const std::vector<Vector>& sample) {
  if (sample.empty()) throw EmptySplit("no samples to fit the planted rule");
  PlantedRule r;
  r.similarity_index = layout.group("similarities").offset;
  r.overlap_index = layout.group("binary").offset;
  std::vector<double> s;
  for (const auto& x : sample) s.push_back(x[static_cast<Eigen::Index>(r.similarity_index)]);
  std::sort(s.begin(), s.end());
  r.low = s[s.size() / 3];
  r.high = s[2 * s.size() / 3];
  return r;
}

Vector PlantedOutcome::class_probs(const HistoryRecord& record, std::size_t action) const {
  Vector p = Vector::Zero(5);
  p[rule_.label(record.features.col(static_cast<Eigen::Index>(action))) - 1] = 1.0;
  return p;
}

PlantedWorld make_world(const FeatureExtractor& ex, const SynthConfig& cfg) {
  for (const auto& m : cfg.models) ex.layout().model_index(m.model_id);
  PlantedWorld w;

  // AMT contexts first, so the rule's terciles come from the same distribution.
  Rng amt_rng = derive_rng(cfg.seed, 1);
  std::vector<std::pair<Dialogue, std::vector<CandidateResponse>>> ctxs;
  std::vector<Vector> feats;
  for (std::size_t i = 0; i < cfg.contexts; ++i) {
    Dialogue d = random_context(amt_rng);
    d.id = "amt" + std::to_string(i);
    auto cands = candidates_for(d, cfg.models, amt_rng);
    for (auto& f : ex.scoring_features(d, cands)) feats.push_back(std::move(f));
    ctxs.emplace_back(std::move(d), std::move(cands));
  }
  w.rule = fit_rule(ex.layout(), feats);

  std::map<std::string, std::pair<double, std::size_t>> per_model;
  std::size_t k = 0;
  for (auto& [d, cands] : ctxs) {
    for (auto& c : cands) {
      const int planted = w.rule.label(feats[k++]);
      auto& pm = per_model[c.model_id];
      pm.first += planted;
      ++pm.second;
      AMTRecord r;
      r.dialogue_id = d.id;
      r.example.context = d;
      r.example.candidate = c;
      r.example.label = noisy(planted, cfg.label_noise, amt_rng);
      w.amt.push_back(std::move(r));
    }
  }
  for (const auto& m : cfg.models) w.heuristic_preference.push_back(m.model_id);
  std::stable_sort(w.heuristic_preference.begin(), w.heuristic_preference.end(),
                   [&](const std::string& a, const std::string& b) {
                     const auto& x = per_model[a];
                     const auto& y = per_model[b];
                     return x.first / static_cast<double>(std::max<std::size_t>(1, x.second)) >
                            y.first / static_cast<double>(std::max<std::size_t>(1, y.second));
                   });

  // Simulator store.
  Rng store_rng = derive_rng(cfg.seed, 2);
  std::vector<HistoryRecord> records;
  for (std::size_t i = 0; i < cfg.store_contexts; ++i) {
    HistoryRecord r;
    r.history = random_context(store_rng);
    r.history.id = "syn" + std::to_string(i);
    r.id = r.history.id + "#" + std::to_string(r.history.turns.size());
    r.z = ex.nlu().abstract_state(r.history);
    r.candidates = candidates_for(r.history, cfg.models, store_rng);
    r.features = stack_columns(ex.scoring_features(r.history, r.candidates));
    r.initial = r.history.user_turn_count() == 1;
    records.push_back(std::move(r));
  }
  w.store = HistoryStore(std::move(records));

  // Logged conversations under a uniform behaviour policy.
  Rng log_rng = derive_rng(cfg.seed, 3);
  std::uniform_int_distribution<std::size_t> turns(2, std::max<std::size_t>(2, cfg.max_system_turns));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> score_noise(0.0, 0.25);
  for (std::size_t i = 0; i < cfg.dialogues; ++i) {
    Dialogue d;
    d.id = "log" + std::to_string(i);
    d.policy_id = "random";
    d.turns.push_back(Utterance::user(u(log_rng) < 0.3 ? std::string(pick(kOpeners, log_rng)) : user_utterance(log_rng)));
    const std::size_t n = turns(log_rng);
    double label_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      SelectionRecord s;
      s.candidates = candidates_for(d, cfg.models, log_rng);
      const std::vector<double> behaviour(s.candidates.size(), 1.0 / static_cast<double>(s.candidates.size()));
      s.policy_distribution = behaviour;
      s.chosen_index = sample_class(behaviour, log_rng);
      const int label = w.rule.label(ex.scoring_features(d, s.chosen()));
      label_sum += label;
      d.turns.push_back(Utterance::system(s.chosen().text));
      s.turn_index = d.turns.size() - 1;
      d.selections.push_back(std::move(s));
      const bool last = t + 1 == n;
      if (label <= 2 && u(log_rng) < 0.8) {
        d.turns.push_back(Utterance::user(pick(kNegativeReplies, log_rng)));
      } else {
        d.turns.push_back(Utterance::user(last ? "goodbye" : user_utterance(log_rng)));
      }
    }
    d.final_score = std::clamp(label_sum / static_cast<double>(n) + score_noise(log_rng), 1.0, 5.0);
    w.dialogues.push_back(std::move(d));
  }
  return w;
}

void write_world(const std::filesystem::path& dir, const PlantedWorld& w, const SynthConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_amt(dir / "amt.jsonl", w.amt);
  DialogueLog::write(dir / "dialogues.jsonl", w.dialogues);
  w.store.save(dir / "store");
  const nlohmann::json meta = {{"format", "converse.synthetic_world"},
                               {"config", cfg.to_json()},
                               {"rule", w.rule.to_json()},
                               {"heuristic_preference", w.heuristic_preference}};
  write_text(dir / "world.json", meta.dump(2) + "\n");
}

}  // namespace converse::synth
