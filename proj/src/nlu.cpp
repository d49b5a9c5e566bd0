#include "converse/nlu.hpp"

#include <algorithm>

#include "converse/error.hpp"

namespace converse {

namespace {

constexpr std::array<const char*, kNumDialogueActs> kActNames = {
    "Accept",    "Reject",   "Request",  "Politics", "GenericQuestion",
    "PersonalQuestion", "Statement", "Greeting", "Goodbye",  "Other"};
constexpr std::array<const char*, kNumSentiments> kSentimentNames = {"Negative", "Neutral",
                                                                     "Positive"};

bool is_negation_token(const std::string& t, const WordSet& negations) {
  if (negations.count(t)) return true;
  return t.size() > 3 && t.compare(t.size() - 3, 3, "n't") == 0;
}

}  // namespace

std::size_t AbstractState::index() const {
  return (static_cast<std::size_t>(act) * kNumSentiments + static_cast<std::size_t>(sentiment)) *
             2 +
         (generic ? 1 : 0);
}

AbstractState AbstractState::from_index(std::size_t i) {
  if (i >= kNumAbstractStates) throw InvalidArgument("abstract state index out of range");
  AbstractState z;
  z.generic = (i % 2) == 1;
  i /= 2;
  z.sentiment = static_cast<Sentiment>(i % kNumSentiments);
  z.act = static_cast<DialogueAct>(i / kNumSentiments);
  return z;
}

bool Nlu::is_question(std::string_view text) const {
  if (text.find('?') != std::string_view::npos) return true;
  const auto tokens = text::tokenize(text);
  return !tokens.empty() && lex_.wh_words.count(tokens.front()) > 0;
}

DialogueAct Nlu::classify_dialogue_act(std::string_view raw) const {
  const auto tokens = text::tokenize(raw);
  if (tokens.empty()) return DialogueAct::Other;
  const auto joined = text::join(tokens);
  const auto& first = tokens.front();

  if (std::find(tokens.begin(), tokens.end(), "bye") != tokens.end() ||
      std::find(tokens.begin(), tokens.end(), "goodbye") != tokens.end() ||
      text::contains_phrase(joined, "see you"))
    return DialogueAct::Goodbye;

  if ((first == "hi" || first == "hello" || first == "hey") && tokens.size() <= 4)
    return DialogueAct::Greeting;

  static const WordSet kAccept = {"yes", "yeah", "sure", "ok", "okay", "yes please"};
  if (kAccept.count(joined) || first == "yes") return DialogueAct::Accept;

  static const WordSet kReject = {"no", "nope", "nah"};
  if (kReject.count(joined) || (first == "no" && tokens.size() > 1)) return DialogueAct::Reject;

  const bool has_wh = text::contains_any(tokens, lex_.wh_words);
  if (lex_.request_verbs.count(first) && !has_wh) return DialogueAct::Request;

  if (text::contains_any(tokens, lex_.political_keywords) ||
      text::contains_phrase(joined, "white house"))
    return DialogueAct::Politics;

  if (is_question(raw)) {
    if (std::find(tokens.begin(), tokens.end(), "you") != tokens.end() ||
        std::find(tokens.begin(), tokens.end(), "your") != tokens.end())
      return DialogueAct::PersonalQuestion;
    return DialogueAct::GenericQuestion;
  }

  if (tokens.size() >= 3) return DialogueAct::Statement;
  return DialogueAct::Other;
}

Sentiment Nlu::classify_sentiment(std::string_view raw) const {
  int vote = 0;
  for (const auto& t : text::tokenize(raw)) {
    if (lex_.positive_words.count(t)) ++vote;
    if (lex_.negative_words.count(t)) --vote;
  }
  if (vote > 0) return Sentiment::Positive;
  if (vote < 0) return Sentiment::Negative;
  return Sentiment::Neutral;
}

bool Nlu::is_generic(std::string_view raw) const {
  return converse::is_generic(raw, lex_.stopwords);
}

LexicalFlags Nlu::lexical_flags(std::string_view raw) const {
  const auto tokens = text::tokenize(raw);
  LexicalFlags f;
  f.has_wh = text::contains_any(tokens, lex_.wh_words);
  f.has_intensifier = text::contains_any(tokens, lex_.intensifiers);
  f.has_negation = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
    return is_negation_token(t, lex_.negations);
  });
  f.has_profanity = text::contains_any(tokens, lex_.profanity);
  f.is_confused = tokens.size() < 3 && text::contains_any(tokens, lex_.confusion_words);
  return f;
}

AbstractState Nlu::abstract_state(std::string_view text) const {
  return AbstractState{classify_dialogue_act(text), classify_sentiment(text), is_generic(text)};
}

AbstractState Nlu::abstract_state(const Dialogue& dialogue) const {
  const auto* u = dialogue.last_user();
  if (!u) throw NoUserUtterance("abstract_state needs a user utterance");
  return abstract_state(u->text);
}

namespace {
const Nlu& bundled_nlu() {
  static const Nlu nlu;
  return nlu;
}
}  // namespace

DialogueAct classify_dialogue_act(std::string_view text) {
  return bundled_nlu().classify_dialogue_act(text);
}
Sentiment classify_sentiment(std::string_view text) { return bundled_nlu().classify_sentiment(text); }
LexicalFlags lexical_flags(std::string_view text) { return bundled_nlu().lexical_flags(text); }
AbstractState abstract_state(const Dialogue& dialogue) {
  return bundled_nlu().abstract_state(dialogue);
}

bool is_generic(std::string_view raw, const WordSet& stopwords) {
  const auto tokens = text::tokenize(raw);
  return std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
    return t.size() < 3 || stopwords.count(t) > 0;
  });
}

std::string to_string(DialogueAct a) { return kActNames.at(static_cast<std::size_t>(a)); }
std::string to_string(Sentiment s) { return kSentimentNames.at(static_cast<std::size_t>(s)); }
std::string to_string(const AbstractState& z) {
  return "(" + to_string(z.act) + ", " + to_string(z.sentiment) + ", " +
         (z.generic ? "true" : "false") + ")";
}

DialogueAct dialogue_act_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kActNames.size(); ++i)
    if (s == kActNames[i]) return static_cast<DialogueAct>(i);
  throw InvalidArgument("unknown dialogue act '" + s + "'");
}

Sentiment sentiment_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kSentimentNames.size(); ++i)
    if (s == kSentimentNames[i]) return static_cast<Sentiment>(i);
  throw InvalidArgument("unknown sentiment '" + s + "'");
}

}  // namespace converse
