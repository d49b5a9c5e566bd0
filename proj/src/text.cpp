#include "converse/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>

#include "converse/error.hpp"

namespace converse::text {

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> tokenize_raw(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    // Bytes >= 0x80 are kept so UTF-8 words stay whole.
    if (std::isalnum(c) || c == '\'' || c >= 0x80) {
      cur.push_back(ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  // Quotes used as punctuation, not contractions.
  for (auto& t : out) {
    while (!t.empty() && t.front() == '\'') t.erase(t.begin());
    while (!t.empty() && t.back() == '\'') t.pop_back();
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const std::string& t) { return t.empty(); }),
            out.end());
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  auto tokens = tokenize_raw(s);
  for (auto& t : tokens) t = to_lower(t);
  return tokens;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

bool starts_with_word(const std::vector<std::string>& tokens, std::string_view word) {
  return !tokens.empty() && tokens.front() == word;
}

bool contains_any(const std::vector<std::string>& tokens, const WordSet& words) {
  return std::any_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return words.count(t) > 0; });
}

bool contains_phrase(std::string_view haystack, std::string_view phrase) {
  const auto hay = " " + join(tokenize(haystack)) + " ";
  const auto needle = " " + join(tokenize(phrase)) + " ";
  if (needle.size() <= 2) return false;
  return hay.find(needle) != std::string::npos;
}

WordSet load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open word list " + path.string());
  WordSet out;
  std::string line;
  while (std::getline(in, line)) {
    auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    out.insert(to_lower(w));
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace converse::text

namespace converse {

namespace {

WordSet make(std::initializer_list<const char*> words) {
  WordSet out;
  for (const char* w : words) out.insert(w);
  return out;
}

Lexicon build_bundled() {
  Lexicon lx;
  // Common English function words plus conversational fillers and
  // interjections, which carry no topic.
  lx.stopwords = make({
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
      "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
      "by", "can", "could", "did", "do", "does", "doing", "don't", "down", "during", "each", "few",
      "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "i'm", "if", "in", "into", "is", "it", "it's",
      "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now",
      "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
      "own", "same", "she", "should", "so", "some", "such", "than", "that", "that's", "the",
      "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
      "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what", "when",
      "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "you're",
      "your", "yours", "yourself", "yourselves", "let's", "let", "want", "get", "got", "go",
      "going", "know", "think", "really", "also", "well", "like", "yes", "yeah", "yep", "ok",
      "okay", "sure", "please", "thanks", "thank", "nope", "nah", "hi", "hello", "hey", "bye",
      "goodbye", "oh", "ah", "um", "uh", "hmm", "huh", "wow", "yay", "ugh", "meh", "boo", "tell",
      "say", "give", "show", "talk", "play", "something", "anything", "thing", "things", "one",
  });
  lx.wh_words = make({"what", "where", "when", "who", "whom", "whose", "why", "which", "how",
                      "what's", "where's", "who's", "how's", "when's", "why's"});
  lx.intensifiers = make({"amazingly", "crazy", "very", "really", "extremely", "totally",
                          "absolutely", "incredibly", "super", "so", "awfully", "terribly",
                          "insanely", "utterly", "highly", "truly", "remarkably", "exceptionally",
                          "completely", "ridiculously", "seriously", "deeply", "hugely"});
  lx.negations = make({"not", "no", "never", "nothing", "nobody", "none", "neither", "nor",
                       "nowhere", "cannot", "without"});
  lx.profanity = make({"fuck", "fucking", "fucked", "shit", "shitty", "damn", "damned", "bitch",
                       "bastard", "asshole", "crap", "dick", "piss", "pissed", "bullshit", "wtf",
                       "motherfucker", "cunt", "slut", "whore"});
  lx.confusion_words = make({"what", "silly", "stupid", "huh", "pardon", "confused", "confusing",
                             "sorry"});
  lx.political_keywords = make({
      "politics", "political", "politician", "politicians", "election", "elections", "president",
      "presidential", "trump", "obama", "clinton", "hillary", "biden", "congress", "senate",
      "senator", "democrat", "democrats", "republican", "republicans", "liberal", "conservative",
      "government", "vote", "voting", "voted", "campaign", "parliament", "policy", "policies",
      "immigration", "healthcare", "obamacare", "taxes", "white", "house", "gop", "eu", "uk",
      "brexit", "putin", "impeachment", "legislation", "governor", "mayor", "minister"});
  // "white"/"house" are only political as a pair; drop the singletons.
  lx.political_keywords.erase("white");
  lx.political_keywords.erase("house");
  lx.positive_words = make({
      "good", "great", "awesome", "amazing", "excellent", "fantastic", "wonderful", "love",
      "loved", "loves", "lovely", "like", "liked", "likes", "nice", "cool", "fun", "funny", "happy",
      "glad", "enjoy", "enjoyed", "enjoying", "best", "better", "beautiful", "brilliant", "perfect",
      "interesting", "fascinating", "wow", "yay", "thanks", "thank", "pleased", "delighted",
      "superb", "terrific", "excited", "exciting", "favorite", "favourite", "adore", "sweet",
      "smart", "clever", "impressive", "incredible", "outstanding", "pleasant", "positive",
      "correct", "well", "joy", "joyful", "cheerful", "hilarious",
      "lucky", "marvelous", "magnificent", "charming", "friendly", "helpful", "glorious", "neat",
      "splendid", "stunning", "thrilled", "grateful", "appreciate", "appreciated", "agree",
      "win", "winning", "won", "success", "successful", "proud", "relaxed", "calm", "peaceful",
      "safe", "healthy", "strong", "free", "fresh", "clean", "rich", "warm", "bright", "gorgeous",
      "cute", "adorable", "fabulous", "phenomenal", "remarkable", "refreshing", "inspiring",
      "inspired", "admire", "admirable", "yummy", "delicious", "tasty", "hooray", "bravo",
      "congratulations", "haha", "lol", "excellently", "nicely", "gladly", "happily", "thankful",
      "blessed", "enthusiastic", "optimistic", "hopeful", "satisfied", "comfortable", "pretty",
      "elegant", "genius", "legendary", "epic", "superior", "pleasing", "wise",
      "worthy", "valuable", "useful", "reliable", "honest", "brave", "generous", "gentle",
      "patient", "polite", "respect", "support", "supportive", "welcome", "wonderfully"});
  lx.negative_words = make({
      "bad", "terrible", "awful", "horrible", "hate", "hated", "hates", "stupid", "dumb", "boring",
      "bored", "annoying", "annoyed", "angry", "mad", "sad", "upset", "worst", "worse", "ugly",
      "disgusting", "gross", "sucks", "suck", "sucked", "lame", "silly", "idiot", "idiotic",
      "useless", "pointless", "ridiculous", "nonsense", "wrong", "poor", "pathetic", "crap",
      "shit", "damn", "fuck", "ugh", "meh", "boo", "nasty", "rude", "cruel", "evil",
      "scary", "afraid", "fear", "worried", "worry", "anxious", "depressed", "depressing",
      "lonely", "miserable", "unhappy", "disappointed", "disappointing", "frustrated",
      "frustrating", "confused", "confusing", "hurt", "pain", "painful", "sick", "tired", "weak",
      "fail", "failed", "failure", "lose", "lost", "losing", "broken", "dead", "die", "died",
      "kill", "killed", "war", "crime", "dirty", "fake", "liar", "lie", "lies", "lying",
      "shut", "hell", "jerk", "moron", "weird", "creepy", "crazy", "insane", "trash", "garbage",
      "waste", "wasted", "irritating", "offensive", "hostile", "bitter", "jealous", "guilty",
      "ashamed", "embarrassed", "embarrassing", "awkward", "inferior", "incompetent", "clueless",
      "nonsensical", "unfair", "unpleasant", "dreadful", "grim", "gloomy", "hopeless", "helpless",
      "worthless", "sorry", "regret", "shame", "disaster", "tragic", "tragedy", "horrific",
      "terrifying", "panic", "stress", "stressed", "stressful", "cry", "crying", "cried", "sadly",
      "unfortunately", "hateful", "disgusted", "furious", "outraged", "sucky", "meaningless",
      "incorrect", "false", "bogus", "absurd", "stinks", "stink", "yuck", "eww", "dull",
      "tedious", "mediocre", "inadequate", "lousy", "sloppy", "rotten", "filthy", "harsh",
      "violent", "threat", "danger", "dangerous", "damage", "damaged", "problem", "problems"});
  lx.request_verbs = make({"tell", "say", "play", "give", "talk", "show"});
  return lx;
}

}  // namespace

const Lexicon& Lexicon::bundled() {
  static const Lexicon lx = build_bundled();
  return lx;
}

}  // namespace converse
