#include "converse/dialogue.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "converse/error.hpp"
#include "converse/text.hpp"

namespace converse {

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

Utterance Utterance::user(std::string text, std::optional<double> asr) {
  return Utterance{Speaker::User, std::move(text), asr};
}

Utterance Utterance::system(std::string text) {
  return Utterance{Speaker::System, std::move(text), std::nullopt};
}

const Utterance* Dialogue::last_user() const {
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->speaker == Speaker::User) return &*it;
  }
  return nullptr;
}

std::size_t Dialogue::last_user_index() const {
  for (std::size_t i = turns.size(); i-- > 0;) {
    if (turns[i].speaker == Speaker::User) return i;
  }
  throw NoUserUtterance("dialogue '" + id + "' has no user utterance");
}

std::size_t Dialogue::user_turn_count() const {
  return static_cast<std::size_t>(std::count_if(
      turns.begin(), turns.end(), [](const Utterance& u) { return u.speaker == Speaker::User; }));
}

std::size_t Dialogue::system_turn_count() const { return turns.size() - user_turn_count(); }

Dialogue Dialogue::prefix(std::size_t end) const {
  Dialogue out;
  out.id = id;
  out.policy_id = policy_id;
  end = std::min(end, turns.size());
  out.turns.assign(turns.begin(), turns.begin() + static_cast<std::ptrdiff_t>(end));
  for (const auto& s : selections) {
    if (s.turn_index < end) out.selections.push_back(s);
  }
  return out;
}

std::vector<const Utterance*> Dialogue::last_utterances(std::size_t n) const {
  std::vector<const Utterance*> out;
  const std::size_t start = turns.size() > n ? turns.size() - n : 0;
  for (std::size_t i = start; i < turns.size(); ++i) out.push_back(&turns[i]);
  return out;
}

std::vector<const Utterance*> Dialogue::last_user_utterances(std::size_t n) const {
  std::vector<const Utterance*> out;
  for (auto it = turns.rbegin(); it != turns.rend() && out.size() < n; ++it) {
    if (it->speaker == Speaker::User) out.push_back(&*it);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void validate(const Utterance& u) {
  if (text::trim(u.text).empty()) throw InvalidArgument("utterance text is empty");
  if (u.asr_confidence) {
    if (u.speaker == Speaker::System)
      throw InvalidArgument("system utterance carries an ASR confidence");
    if (!(*u.asr_confidence >= 0.0 && *u.asr_confidence <= 1.0))
      throw InvalidArgument("asr_confidence outside [0,1]");
  }
}

void validate(const CandidateResponse& c) {
  if (text::trim(c.text).empty()) throw InvalidArgument("candidate text is empty");
  if (c.confidence && !(*c.confidence >= 0.0 && *c.confidence <= 1.0))
    throw InvalidArgument("candidate confidence outside [0,1]");
}

void validate(const SelectionRecord& s) {
  if (s.candidates.empty()) {
    if (s.policy_distribution) throw InvalidArgument("distribution without candidates");
    return;
  }
  if (s.chosen_index >= s.candidates.size()) throw InvalidArgument("chosen_index out of range");
  for (const auto& c : s.candidates) validate(c);
  if (s.policy_distribution) {
    const auto& p = *s.policy_distribution;
    if (p.size() != s.candidates.size())
      throw InvalidArgument("distribution length differs from candidate count");
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw InvalidArgument("negative probability in distribution");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("distribution does not sum to 1");
  }
}

void validate(const Dialogue& d) {
  std::size_t system_turns = 0;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    validate(d.turns[i]);
    if (d.turns[i].speaker == Speaker::System) ++system_turns;
    if (i >= 1 && d.turns[i].speaker == d.turns[i - 1].speaker)
      throw InvalidArgument("turns " + std::to_string(i - 1) + " and " + std::to_string(i) +
                            " share a speaker");
  }
  if (d.selections.size() > system_turns)
    throw InvalidArgument("more selection records than system turns");
  for (const auto& s : d.selections) {
    validate(s);
    if (s.turn_index >= d.turns.size() || d.turns[s.turn_index].speaker != Speaker::System)
      throw InvalidArgument("selection record does not point at a system turn");
  }
  if (d.final_score && !(*d.final_score >= 1.0 && *d.final_score <= 5.0))
    throw InvalidArgument("final_score outside [1,5]");
}

std::string to_string(Speaker s) { return s == Speaker::User ? "user" : "system"; }

Speaker speaker_from_string(const std::string& s) {
  if (s == "user" || s == "User") return Speaker::User;
  if (s == "system" || s == "System") return Speaker::System;
  throw InvalidArgument("unknown speaker '" + s + "'");
}

}  // namespace converse
