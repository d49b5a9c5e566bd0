#include "converse/manager.hpp"

#include "converse/error.hpp"

namespace converse {

nlohmann::json ManagerConfig::to_json() const {
  return {{"asr_threshold", asr_threshold}, {"precedence", precedence}, {"repeat_phrase", repeat_phrase}};
}

ManagerConfig ManagerConfig::from_json(const nlohmann::json& j, ManagerConfig c) {
  c.asr_threshold = j.value("asr_threshold", c.asr_threshold);
  c.precedence = j.value("precedence", c.precedence);
  c.repeat_phrase = j.value("repeat_phrase", c.repeat_phrase);
  if (c.asr_threshold < 0 || c.asr_threshold > 1) throw InvalidArgument("asr_threshold outside [0,1]");
  if (c.repeat_phrase.empty()) throw InvalidArgument("empty repeat phrase");
  return c;
}

ManagerResult manager_step(const Dialogue& dialogue, const ResponseEnsemble& ensemble,
                           const FeatureExtractor& extractor, const Policy& policy,
                           const ManagerConfig& config, Rng& rng) {
  if (dialogue.turns.empty() || dialogue.turns.back().speaker != Speaker::User)
    throw NoUserUtterance("manager_step needs a user utterance last");
  ManagerResult out;
  const auto& last = dialogue.turns.back();
  if (last.asr_confidence.value_or(1.0) < config.asr_threshold) {
    out.response = Utterance::system(config.repeat_phrase);
    return out;
  }

  SelectionRecord sel;
  sel.turn_index = dialogue.turns.size();
  sel.candidates = ensemble.generate(dialogue, rng);
  if (sel.candidates.empty()) throw EmptyCandidateSet("no model produced a response");

  if (const auto p = priority_select_index(sel.candidates, config.precedence)) {
    sel.chosen_index = *p;
    sel.was_priority = true;
  } else {
    const Matrix x = stack_columns(extractor.scoring_features(dialogue, sel.candidates));
    if (const auto* np = dynamic_cast<const NetPolicy*>(&policy)) {
      const Vector s = np->net().forward_batch(x).scores;
      out.scores.assign(s.data(), s.data() + s.size());
    }
    sel.policy_distribution = policy.distribution(x, sel.candidates);
    sel.chosen_index = Policy::pick(*sel.policy_distribution, policy.stochastic(), rng);
  }
  out.response = Utterance::system(sel.chosen().text);
  out.selection = std::move(sel);
  return out;
}

void apply(Dialogue& dialogue, const ManagerResult& result) {
  dialogue.turns.push_back(result.response);
  if (!result.selection.empty()) dialogue.selections.push_back(result.selection);
}

}  // namespace converse
