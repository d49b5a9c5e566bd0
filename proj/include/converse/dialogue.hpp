#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace converse {

using Rng = std::mt19937_64;

/// Derives an independent stream from a base seed and a stream index.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

enum class Speaker { User, System };

struct Utterance {
  Speaker speaker = Speaker::User;
  std::string text;
  std::optional<double> asr_confidence;

  static Utterance user(std::string text, std::optional<double> asr = std::nullopt);
  static Utterance system(std::string text);
};

struct CandidateResponse {
  std::string model_id;
  std::string text;
  bool priority = false;
  std::optional<double> confidence;
};

/// One policy decision. `turn_index` points at the system utterance it produced.
struct SelectionRecord {
  std::vector<CandidateResponse> candidates;
  std::optional<std::vector<double>> policy_distribution;
  std::size_t chosen_index = 0;
  bool was_priority = false;
  std::size_t turn_index = 0;

  const CandidateResponse& chosen() const { return candidates.at(chosen_index); }
  bool empty() const { return candidates.empty(); }
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> turns;
  std::vector<SelectionRecord> selections;
  std::optional<double> final_score;
  std::string policy_id;

  bool empty() const { return turns.empty(); }
  const Utterance* last_user() const;
  std::size_t last_user_index() const;  // throws NoUserUtterance
  std::size_t user_turn_count() const;
  std::size_t system_turn_count() const;

  /// Copy of the dialogue ending at turn `end` (exclusive), with the
  /// selections that produced turns inside the prefix.
  Dialogue prefix(std::size_t end) const;

  /// The last `n` utterances (all speakers), oldest first.
  std::vector<const Utterance*> last_utterances(std::size_t n) const;
  std::vector<const Utterance*> last_user_utterances(std::size_t n) const;
};

/// Throws InvalidArgument on the first violated invariant.
void validate(const Utterance& u);
void validate(const CandidateResponse& c);
void validate(const SelectionRecord& s);
void validate(const Dialogue& d);

std::string to_string(Speaker s);
Speaker speaker_from_string(const std::string& s);

}  // namespace converse
