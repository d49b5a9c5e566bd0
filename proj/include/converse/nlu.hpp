#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "converse/dialogue.hpp"
#include "converse/text.hpp"

namespace converse {

enum class DialogueAct {
  Accept,
  Reject,
  Request,
  Politics,
  GenericQuestion,
  PersonalQuestion,
  Statement,
  Greeting,
  Goodbye,
  Other,
};
inline constexpr std::size_t kNumDialogueActs = 10;

enum class Sentiment { Negative, Neutral, Positive };
inline constexpr std::size_t kNumSentiments = 3;

/// The abstract discourse state: one of 10 x 3 x 2 = 60 elements.
struct AbstractState {
  DialogueAct act = DialogueAct::Other;
  Sentiment sentiment = Sentiment::Neutral;
  bool generic = false;

  friend bool operator==(const AbstractState&, const AbstractState&) = default;

  /// Dense index in [0, 60): act-major, then sentiment, then generic.
  std::size_t index() const;
  static AbstractState from_index(std::size_t i);
};
inline constexpr std::size_t kNumAbstractStates = kNumDialogueActs * kNumSentiments * 2;

struct LexicalFlags {
  bool has_wh = false;
  bool has_intensifier = false;
  bool has_negation = false;
  bool has_profanity = false;
  bool is_confused = false;
};

/// Deterministic rule-based classifiers over a Lexicon.
class Nlu {
 public:
  Nlu() : Nlu(Lexicon::bundled()) {}
  explicit Nlu(Lexicon lexicon) : lex_(std::move(lexicon)) {}

  DialogueAct classify_dialogue_act(std::string_view text) const;
  Sentiment classify_sentiment(std::string_view text) const;
  bool is_generic(std::string_view text) const;
  LexicalFlags lexical_flags(std::string_view text) const;
  bool is_question(std::string_view text) const;

  /// Applies the three classifiers to the last user utterance.
  AbstractState abstract_state(const Dialogue& dialogue) const;
  AbstractState abstract_state(std::string_view last_user_text) const;

  const Lexicon& lexicon() const { return lex_; }

 private:
  Lexicon lex_;
};

/// Free-function forms over the bundled lexicon.
DialogueAct classify_dialogue_act(std::string_view text);
Sentiment classify_sentiment(std::string_view text);
bool is_generic(std::string_view text, const WordSet& stopwords);
LexicalFlags lexical_flags(std::string_view text);
AbstractState abstract_state(const Dialogue& dialogue);

std::string to_string(DialogueAct a);
std::string to_string(Sentiment s);
std::string to_string(const AbstractState& z);
DialogueAct dialogue_act_from_string(const std::string& s);
Sentiment sentiment_from_string(const std::string& s);

}  // namespace converse

template <>
struct std::hash<converse::AbstractState> {
  std::size_t operator()(const converse::AbstractState& z) const noexcept { return z.index(); }
};
