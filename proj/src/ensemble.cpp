#include "converse/ensemble.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <cmath>
#include <future>
#include <limits>
#include "json.hpp"
#include <set>
#include <sstream>

#include "converse/error.hpp"

namespace converse {

namespace {

std::string last_user_text(const Dialogue& d) {
  const Utterance* u = d.last_user();
  if (!u) throw NoUserUtterance("dialogue has no user utterance");
  return u->text;
}

std::string normalized(std::string_view s) { return text::join(text::tokenize(s)); }

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InvalidArgument("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Fixtures

FixtureQABackend::FixtureQABackend(std::map<std::string, std::string> answers) {
  for (auto& [q, a] : answers) answers_[normalized(q)] = std::move(a);
}

FixtureQABackend FixtureQABackend::load(const std::filesystem::path& json_path) {
  return FixtureQABackend(read_json(json_path).get<std::map<std::string, std::string>>());
}

std::optional<std::string> FixtureQABackend::ask(const std::string& query) const {
  const std::string key = normalized(query);
  auto it = answers_.find(key);
  if (it == answers_.end()) return std::nullopt;
  return it->second;
}

FixtureSearchClient::FixtureSearchClient(std::map<std::string, std::vector<std::string>> results) {
  for (auto& [q, r] : results) results_[normalized(q)] = std::move(r);
}

FixtureSearchClient FixtureSearchClient::load(const std::filesystem::path& json_path) {
  return FixtureSearchClient(
      read_json(json_path).get<std::map<std::string, std::vector<std::string>>>());
}

std::vector<std::string> FixtureSearchClient::search(const std::string& query) const {
  auto it = results_.find(normalized(query));
  if (it == results_.end()) return {};
  return it->second;
}

double CosineSnippetScorer::score(std::string_view utterance, std::string_view snippet) const {
  return cosine(emb_->mean(text::tokenize(utterance)), emb_->mean(text::tokenize(snippet)));
}

// ---------------------------------------------------------------------------
// Retrieval

RetrievalIndex::RetrievalIndex(Corpus corpus, std::shared_ptr<const EmbeddingTable> emb)
    : corpus_(std::move(corpus)), emb_(std::move(emb)) {
  corpus_.validate();
  if (!emb_) throw InvalidArgument("retrieval index needs an embedding table");
  std::unordered_map<std::string, std::size_t> df;
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus_.size());
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    docs.push_back(item_tokens(i));
    std::set<std::string> uniq(docs.back().begin(), docs.back().end());
    for (const auto& w : uniq) ++df[w];
  }
  const double n = static_cast<double>(corpus_.size());
  for (const auto& [w, c] : df) idf_[w] = std::log(1.0 + n / static_cast<double>(c));
  item_vectors_.reserve(docs.size());
  for (const auto& toks : docs) item_vectors_.push_back(weighted_vector(toks));
}

std::vector<std::string> RetrievalIndex::item_tokens(std::size_t i) const {
  const auto& item = corpus_.items.at(i);
  if (item.keywords && !item.keywords->empty()) {
    std::vector<std::string> kw;
    for (const auto& k : *item.keywords)
      for (auto& t : text::tokenize(k)) kw.push_back(std::move(t));
    std::sort(kw.begin(), kw.end());
    return kw;
  }
  return text::tokenize(item.text);
}

double RetrievalIndex::idf(const std::string& word) const {
  auto it = idf_.find(word);
  return it == idf_.end() ? 1.0 : it->second;
}

Vector RetrievalIndex::weighted_vector(const std::vector<std::string>& tokens) const {
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(emb_->dim()));
  double total = 0.0;
  for (const auto& t : tokens) {
    if (!emb_->contains(t)) continue;
    const double w = idf(t);
    acc += w * emb_->lookup(t);
    total += w;
  }
  if (total > 0.0) acc /= total;
  return acc;
}

std::vector<RetrievalHit> retrieve_topk(const RetrievalIndex& index, const Dialogue& dialogue,
                                        std::size_t k, std::size_t window) {
  if (k == 0) throw InvalidArgument("k must be positive");
  std::vector<std::string> ctx;
  for (const Utterance* u : dialogue.last_utterances(window))
    for (auto& t : text::tokenize(u->text)) ctx.push_back(std::move(t));
  const Vector q = index.weighted_vector(ctx);

  const std::size_t n = index.corpus().size();
  std::vector<RetrievalHit> hits(n);
  for (std::size_t i = 0; i < n; ++i)
    hits[i] = {i, &index.corpus().items[i], cosine(q, index.item_vector(i))};
  const auto better = [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.index < b.index;
  };
  const std::size_t m = std::min(k, n);
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(m), hits.end(),
                    better);
  hits.resize(m);
  return hits;
}

bool trigger_matches(std::string_view utterance, const std::vector<std::string>& triggers) {
  const auto tokens = text::tokenize(utterance);
  const std::string lowered = text::to_lower(utterance);
  for (const auto& trig : triggers) {
    const std::string t = text::to_lower(text::trim(trig));
    if (t.empty()) continue;
    if (t.find(' ') != std::string::npos) {
      if (lowered.find(t) != std::string::npos) return true;
    } else if (std::find(tokens.begin(), tokens.end(), t) != tokens.end()) {
      return true;
    }
  }
  return false;
}

std::optional<CandidateResponse> keyword_gated_retrieve(const RetrievalIndex& index,
                                                        const Dialogue& dialogue,
                                                        const std::vector<std::string>& triggers,
                                                        const std::string& model_id) {
  const Utterance* u = dialogue.last_user();
  if (!u || !trigger_matches(u->text, triggers)) return std::nullopt;
  const auto hits = retrieve_topk(index, dialogue, 1);
  return CandidateResponse{model_id, hits.front().item->text, false, std::nullopt};
}

// ---------------------------------------------------------------------------
// Helpers

bool is_correct_sentence(std::string_view s) {
  const std::string t = text::trim(s);
  if (t.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(t.front()))) return false;
  const char last = t.back();
  if (last != '.' && last != '!' && last != '?') return false;
  if (t.find('*') != std::string::npos) return false;
  return text::tokenize(t).size() >= 2;
}

std::string preprocess_snippet(std::string_view snippet) {
  std::string s = replace_all(std::string(snippet), "\xE2\x80\xA6", " ");  // ellipsis glyph
  s = replace_all(std::move(s), "...", " ");
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    if (c == '|' || c == '#' || c == '*' || c == '~' || c == '^' || c == '_') c = ' ';
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cleaned.empty() && cleaned.back() != ' ') cleaned.push_back(' ');
      continue;
    }
    cleaned.push_back(c);
  }
  const auto end = cleaned.find_last_of(".!?");
  if (end == std::string::npos) return {};
  return text::trim(cleaned.substr(0, end + 1));
}

std::optional<std::size_t> priority_select_index(const std::vector<CandidateResponse>& candidates,
                                                 const std::vector<std::string>& precedence) {
  for (const auto& id : precedence)
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (candidates[i].priority && candidates[i].model_id == id) return i;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].priority) return i;
  return std::nullopt;
}

std::optional<CandidateResponse> priority_select(const std::vector<CandidateResponse>& candidates,
                                                 const std::vector<std::string>& precedence) {
  if (auto i = priority_select_index(candidates, precedence)) return candidates[*i];
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Alicebot

namespace {

const std::string kSocialbotName = "I am an Alexa Prize socialbot.";

std::vector<AliceRule> bundled_alice_rules() {
  const std::string age = "I was switched on this year, so I am still quite young.";
  const std::string home = "I live in the cloud, which is a nice place to be.";
  return {
      {"what is your name", kSocialbotName, true},
      {"what's your name", kSocialbotName, true},
      {"who are you", kSocialbotName, true},
      {"tell me your name", kSocialbotName, true},
      {"how old are you", age, true},
      {"what is your age", age, true},
      {"where are you from", home, true},
      {"where do you live", home, true},
      {"where are you", home, true},
      {"hello", "Hello there! How are you doing today?", false},
      {"hi", "Hi! What would you like to talk about?", false},
      {"how are you", "I am doing well, thank you for asking.", false},
      {"thank you", "You are welcome.", false},
      {"thanks", "You are welcome.", false},
      {"i have *", "Hurrah! Having * sounds great.", false},
      {"i like *", "What do you like about *?", false},
      {"i love *", "What do you love about *?", false},
      {"i am *", "How long have you been *?", false},
      {"do you like *", "I like * a lot, actually.", false},
      {"* is cool", "why do you think * is cool", false},
      {"tell me about *", "* is a topic I would love to chat about", false},
      {"what is *", "I am not sure what * is, but I would like to find out.", false},
      {"i think *", "Why do you think *?", false},
      {"are you *", "Would you prefer it if I were not *?", false},
      {"can you *", "I am not sure I can * yet.", false},
      {"* you", "We were talking about you, not me.", false},
  };
}

/// Matches tokens against a pattern with one optional wildcard. Returns the
/// capture (possibly empty) or nullopt.
std::optional<std::string> match_pattern(const std::vector<std::string>& pat,
                                         const std::vector<std::string>& toks) {
  const auto star = std::find(pat.begin(), pat.end(), "*");
  if (star == pat.end()) {
    if (pat == toks) return std::string();
    return std::nullopt;
  }
  const std::size_t pre = static_cast<std::size_t>(star - pat.begin());
  const std::size_t post = pat.size() - pre - 1;
  if (toks.size() < pre + post + 1) return std::nullopt;
  for (std::size_t i = 0; i < pre; ++i)
    if (pat[i] != toks[i] && pat[i] != "*") return std::nullopt;
  for (std::size_t i = 0; i < post; ++i) {
    const auto& p = pat[pat.size() - 1 - i];
    if (p != toks[toks.size() - 1 - i] && p != "*") return std::nullopt;
  }
  std::vector<std::string> cap(toks.begin() + static_cast<std::ptrdiff_t>(pre),
                               toks.end() - static_cast<std::ptrdiff_t>(post));
  return text::join(cap);
}

}  // namespace

Alicebot::Alicebot() : Alicebot(bundled_alice_rules(), "I see. Please go on") {}

Alicebot::Alicebot(std::vector<AliceRule> rules, std::string fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {
  for (const auto& r : rules_) {
    if (text::trim(r.pattern).empty()) throw InvalidArgument("empty Alicebot pattern");
    if (std::count(r.pattern.begin(), r.pattern.end(), '*') > 1)
      throw InvalidArgument("too many wildcards in '" + r.pattern + "'");
  }
}

CandidateResponse Alicebot::respond(std::string_view utterance) const {
  const auto toks = text::tokenize(utterance);
  const AliceRule* best = nullptr;
  std::string capture;
  std::size_t best_literals = 0;
  for (const auto& rule : rules_) {
    std::vector<std::string> pat;
    std::istringstream ss(text::to_lower(rule.pattern));
    for (std::string w; ss >> w;) pat.push_back(w);
    const auto cap = match_pattern(pat, toks);
    if (!cap) continue;
    const auto literals = static_cast<std::size_t>(
        std::count_if(pat.begin(), pat.end(), [](const std::string& w) { return w != "*"; }));
    if (!best || literals > best_literals) {
      best = &rule;
      capture = *cap;
      best_literals = literals;
    }
  }
  CandidateResponse out{name_, fallback_, false, 0.0};
  if (!best) return out;
  out.text = replace_all(best->response, "*", capture);
  out.priority = best->priority;
  const bool correct = is_correct_sentence(out.text);
  out.confidence = correct ? (out.priority ? 1.0 : 0.5) : 0.0;
  return out;
}

std::optional<CandidateResponse> Alicebot::generate(const Dialogue& d, Rng&) const {
  return respond(last_user_text(d));
}

// ---------------------------------------------------------------------------
// Elizabot

namespace {

std::vector<TemplateRule> bundled_eliza_rules() {
  return {
      {"i need (.*)", {"Why do you need {0}?", "Would it really help you to get {0}?"}},
      {"i am (.*)", {"Did you come to me because you are {0}"}},
      {"i'm (.*)", {"How does being {0} make you feel?", "How long have you been {0}?"}},
      {"what (.*)", {"Why do you ask?"}},
      {"why don't you (.*)", {"Do you really think I don't {0}?"}},
      {"why can't i (.*)", {"Do you think you should be able to {0}?"}},
      {"i can't (.*)", {"How do you know you can't {0}?"}},
      {"i feel (.*)", {"Do you often feel {0}?", "When do you usually feel {0}?"}},
      {"i think (.*)", {"Do you doubt {0}?", "Do you really think so?"}},
      {"because (.*)", {"Is that the real reason?", "What other reasons come to mind?"}},
      {"you are (.*)", {"What makes you think I am {0}?"}},
      {"my (.*)", {"Why do you say your {0}?", "Your {0}, tell me more."}},
      {"i want (.*)", {"What would it mean to you if you got {0}?"}},
      {"how (.*)", {"How do you suppose?", "Perhaps you can answer your own question."}},
      {"yes", {"You seem quite sure.", "OK, but can you elaborate a bit?"}},
      {"no", {"Why not?", "You are being a bit negative."}},
      {"(.*)",
       {"Please tell me more.", "Let's change focus a bit. Tell me about your family.",
        "Can you elaborate on that?", "I see. And what does that tell you?",
        "How does that make you feel?"}},
  };
}

std::unordered_map<std::string, std::string> bundled_reflections() {
  return {
      {"am", "are"},        {"was", "were"},      {"i", "you"},          {"i'd", "you would"},
      {"i've", "you have"}, {"i'll", "you will"}, {"i'm", "you are"},    {"my", "your"},
      {"are", "am"},        {"you've", "I have"}, {"you'll", "I will"},  {"your", "my"},
      {"yours", "mine"},    {"you", "me"},        {"me", "you"},         {"myself", "yourself"},
      {"you're", "I am"},   {"you'd", "I would"}, {"mine", "yours"},     {"yourself", "myself"},
  };
}

}  // namespace

Elizabot::Elizabot() : Elizabot(bundled_eliza_rules(), bundled_reflections()) {}

Elizabot::Elizabot(std::vector<TemplateRule> rules,
                   std::unordered_map<std::string, std::string> reflections)
    : reflections_(std::move(reflections)) {
  for (auto& r : rules) {
    if (r.responses.empty()) throw InvalidArgument("template rule without responses: " + r.pattern);
    try {
      rules_.push_back({std::regex(r.pattern, std::regex::icase | std::regex::ECMAScript),
                        std::move(r.responses)});
    } catch (const std::regex_error& e) {
      throw InvalidArgument("bad template pattern '" + r.pattern + "': " + e.what());
    }
  }
}

std::string Elizabot::reflect(std::string_view capture) const {
  std::vector<std::string> out;
  for (const auto& t : text::tokenize(capture)) {
    auto it = reflections_.find(t);
    out.push_back(it == reflections_.end() ? t : it->second);
  }
  return text::join(out);
}

std::optional<CandidateResponse> Elizabot::generate(const Dialogue& d, Rng& rng) const {
  const std::string input = normalized(last_user_text(d));
  for (const auto& rule : rules_) {
    std::smatch m;
    if (!std::regex_match(input, m, rule.re)) continue;
    std::string resp = pick(rule.responses, rng);
    if (m.size() > 1) resp = replace_all(resp, "{0}", reflect(m[1].str()));
    if (text::trim(resp).empty()) continue;
    return CandidateResponse{name_, resp, false, std::nullopt};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Initiatorbot

Initiatorbot::Initiatorbot() : Initiatorbot(bundled::initiator_phrases(), bundled::facts()) {}

Initiatorbot::Initiatorbot(std::vector<std::string> phrases, std::vector<std::string> facts)
    : phrases_(std::move(phrases)), facts_(std::move(facts)) {
  if (phrases_.empty()) throw InvalidArgument("Initiatorbot needs at least one phrase");
}

bool Initiatorbot::recently_triggered(const Dialogue& d) const {
  std::vector<std::size_t> recent;
  for (std::size_t i = d.turns.size(); i-- > 0 && recent.size() < 2;)
    if (d.turns[i].speaker == Speaker::System) recent.push_back(i);
  for (const auto& sel : d.selections) {
    if (sel.empty()) continue;
    if (std::find(recent.begin(), recent.end(), sel.turn_index) == recent.end()) continue;
    if (sel.chosen().model_id == name_) return true;
  }
  return false;
}

std::optional<CandidateResponse> Initiatorbot::generate(const Dialogue& d, Rng& rng) const {
  const std::string user = last_user_text(d);
  if (recently_triggered(d)) return std::nullopt;
  std::string phrase = pick(phrases_, rng);
  if (phrase.find(kFactSlot) != std::string::npos) {
    std::string fact = facts_.empty() ? std::string("the sky is blue") : pick(facts_, rng);
    while (!fact.empty() && (fact.back() == '.' || fact.back() == ' ')) fact.pop_back();
    if (fact.size() > 1 && std::isupper(static_cast<unsigned char>(fact[0])) &&
        std::islower(static_cast<unsigned char>(fact[1]))) {
      const auto first = text::to_lower(text::tokenize_raw(fact).front());
      if (nlu_.lexicon().stopwords.count(first))
        fact[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(fact[0])));
    }
    phrase = replace_all(phrase, kFactSlot, fact);
  }
  const bool greeting = nlu_.classify_dialogue_act(user) == DialogueAct::Greeting;
  return CandidateResponse{name_, phrase, greeting, std::nullopt};
}

// ---------------------------------------------------------------------------
// Storybot

namespace {
const WordSet kStoryRequestWords = {"say", "tell", "read", "narrate", "share", "give", "know"};
const WordSet kStoryTypeWords = {"story", "stories", "tale", "tales", "fable", "fables"};
}  // namespace

Storybot::Storybot() : Storybot(bundled::stories()) {}

Storybot::Storybot(std::vector<Story> stories) : stories_(std::move(stories)) {
  if (stories_.empty()) throw InvalidArgument("Storybot needs at least one story");
}

bool Storybot::triggered(std::string_view utterance) const {
  const auto toks = text::tokenize(utterance);
  return text::contains_any(toks, kStoryRequestWords) && text::contains_any(toks, kStoryTypeWords);
}

std::optional<CandidateResponse> Storybot::generate(const Dialogue& d, Rng& rng) const {
  if (!triggered(last_user_text(d))) return std::nullopt;
  const Story& s = pick(stories_, rng);
  return CandidateResponse{name_, kStoryPrefix + s.title + " " + s.body + " by " + s.author, true,
                           std::nullopt};
}

// ---------------------------------------------------------------------------
// Evibot

Evibot::Evibot(std::shared_ptr<const QABackend> qa, WordSet entity_lexicon)
    : qa_(std::move(qa)), entity_lexicon_(std::move(entity_lexicon)) {
  if (!qa_) throw InvalidArgument("Evibot needs a QA backend");
}

bool Evibot::is_valid(const std::optional<std::string>& answer) const {
  if (!answer) return false;
  const std::string t = text::trim(*answer);
  if (t.empty()) return false;
  static const std::set<std::string> markers = {"error", "unknown", "no_answer", "null"};
  return markers.count(text::to_lower(t)) == 0;
}

std::vector<std::string> Evibot::entity_subphrases(std::string_view utterance) const {
  const auto raw = text::tokenize_raw(utterance);
  const auto& stop = nlu_.lexicon().stopwords;
  std::vector<std::string> out;
  std::vector<std::string> span;
  const auto flush = [&] {
    if (!span.empty()) out.push_back(text::join(span));
    span.clear();
  };
  for (const auto& tok : raw) {
    const std::string low = text::to_lower(tok);
    const bool cap = std::isupper(static_cast<unsigned char>(tok.front())) && !stop.count(low);
    if (cap || entity_lexicon_.count(low))
      span.push_back(low);
    else
      flush();
  }
  flush();
  return out;
}

std::vector<std::string> Evibot::all_subphrases(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (std::size_t len = tokens.size(); len-- > 1;)
    for (std::size_t start = 0; start + len <= tokens.size(); ++start)
      out.push_back(text::join(std::vector<std::string>(
          tokens.begin() + static_cast<std::ptrdiff_t>(start),
          tokens.begin() + static_cast<std::ptrdiff_t>(start + len))));
  return out;
}

std::optional<CandidateResponse> Evibot::respond(std::string_view utterance) const {
  const auto toks = text::tokenize(utterance);
  const auto& lex = nlu_.lexicon();
  const bool has_wh = text::contains_any(toks, lex.wh_words);
  const bool only_stop = std::all_of(toks.begin(), toks.end(),
                                     [&](const std::string& t) { return lex.stopwords.count(t); });
  if (only_stop && !has_wh) return std::nullopt;

  const auto answer = [&](bool priority, const std::string& text) {
    return CandidateResponse{name_, text::trim(text), priority, std::nullopt};
  };
  try {
    const std::string query = text::join(toks);
    if (auto a = qa_->ask(query); is_valid(a)) return answer(has_wh, *a);
    if (!has_wh) return std::nullopt;
    std::set<std::string> tried = {query};
    for (const auto& sub : entity_subphrases(utterance)) {
      if (!tried.insert(sub).second) continue;
      if (auto a = qa_->ask(sub); is_valid(a)) return answer(true, *a);
    }
    for (const auto& sub : all_subphrases(toks)) {
      if (!tried.insert(sub).second) continue;
      if (auto a = qa_->ask(sub); is_valid(a)) return answer(true, *a);
    }
  } catch (const BackendUnavailable&) {
    return std::nullopt;
  }
  return std::nullopt;
}

std::optional<CandidateResponse> Evibot::generate(const Dialogue& d, Rng&) const {
  return respond(last_user_text(d));
}

// ---------------------------------------------------------------------------
// Retrieval models

RetrievalModel::RetrievalModel(std::string name, std::shared_ptr<const RetrievalIndex> index,
                               Options options)
    : name_(std::move(name)), index_(std::move(index)), opt_(std::move(options)) {
  if (!index_) throw InvalidArgument("retrieval model needs an index");
  if (opt_.k == 0) throw InvalidArgument("k must be positive");
}

std::optional<CandidateResponse> RetrievalModel::generate(const Dialogue& d, Rng&) const {
  const std::string user = last_user_text(d);
  if (!opt_.triggers.empty() && !trigger_matches(user, opt_.triggers)) return std::nullopt;
  const auto hits = retrieve_topk(*index_, d, opt_.k, opt_.window);
  const RetrievalHit* best = &hits.front();
  if (opt_.reranker) {
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& h : hits) {
      const double s = opt_.reranker->score(user, h.item->text);
      if (s > best_score) {
        best_score = s;
        best = &h;
      }
    }
  }
  return CandidateResponse{name_, best->item->text, false, std::nullopt};
}

EscapePlan::EscapePlan() : EscapePlan(bundled::escape_responses()) {}

EscapePlan::EscapePlan(std::vector<std::string> responses, CandidateScorer selector)
    : responses_(std::move(responses)), selector_(std::move(selector)) {
  if (responses_.empty()) throw InvalidArgument("escape plan needs responses");
}

CandidateResponse EscapePlan::respond(const Dialogue& d, Rng& rng) const {
  if (!selector_) return {name_, pick(responses_, rng), false, std::nullopt};
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < responses_.size(); ++i) {
    const double s = selector_(d, CandidateResponse{name_, responses_[i], false, std::nullopt});
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return {name_, responses_[best], false, std::nullopt};
}

std::optional<CandidateResponse> EscapePlan::generate(const Dialogue& d, Rng& rng) const {
  return respond(d, rng);
}

SearchSnippetModel::SearchSnippetModel(std::shared_ptr<const SearchClient> search,
                                       std::shared_ptr<const SnippetScorer> scorer)
    : search_(std::move(search)), scorer_(std::move(scorer)) {
  if (!search_ || !scorer_) throw InvalidArgument("search snippet model needs client and scorer");
}

std::optional<CandidateResponse> SearchSnippetModel::generate(const Dialogue& d, Rng&) const {
  const std::string user = last_user_text(d);
  std::vector<std::string> raw;
  try {
    raw = search_->search(user);
  } catch (const SearchUnavailable&) {
    return std::nullopt;
  }
  if (raw.size() > kMaxSnippets) raw.resize(kMaxSnippets);
  std::optional<std::string> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& s : raw) {
    std::string clean = preprocess_snippet(s);
    if (clean.empty()) continue;
    const double sc = scorer_->score(user, clean);
    if (sc > best_score) {
      best_score = sc;
      best = std::move(clean);
    }
  }
  if (!best) return std::nullopt;
  return CandidateResponse{name_, *best, false, std::nullopt};
}

// ---------------------------------------------------------------------------
// Ensemble

ResponseEnsemble::ResponseEnsemble(std::vector<std::shared_ptr<const ResponseModel>> models,
                                   bool parallel)
    : parallel_(parallel) {
  for (auto& m : models) add(std::move(m));
}

void ResponseEnsemble::add(std::shared_ptr<const ResponseModel> model) {
  if (!model) throw InvalidArgument("null response model");
  for (const auto& m : models_)
    if (m->name() == model->name()) throw InvalidArgument("duplicate model " + model->name());
  models_.push_back(std::move(model));
}

std::vector<std::string> ResponseEnsemble::model_ids() const {
  std::vector<std::string> ids;
  for (const auto& m : models_) ids.push_back(m->name());
  return ids;
}

std::vector<CandidateResponse> ResponseEnsemble::generate(const Dialogue& dialogue,
                                                          Rng& rng) const {
  const std::uint64_t base = rng();
  std::vector<std::optional<CandidateResponse>> results(models_.size());
  const auto run = [&](std::size_t i) {
    Rng local = derive_rng(base, i);
    auto c = models_[i]->generate(dialogue, local);
    if (c) {
      c->model_id = models_[i]->name();
      if (text::trim(c->text).empty()) c.reset();
    }
    results[i] = std::move(c);
  };
  if (parallel_) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = 0; i < models_.size(); ++i)
      jobs.push_back(std::async(std::launch::async, run, i));
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < models_.size(); ++i) run(i);
  }
  std::vector<CandidateResponse> out;
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  return out;
}

std::shared_ptr<const EmbeddingTable> bundled_embeddings(std::size_t dim) {
  return std::make_shared<const EmbeddingTable>(
      EmbeddingTable::hashed(bundled::vocabulary(), dim, 0));
}

EnsembleServices default_services(std::size_t embedding_dim) {
  EnsembleServices s;
  s.embeddings = bundled_embeddings(embedding_dim);
  s.qa = std::make_shared<FixtureQABackend>(bundled::qa_fixture());
  s.search = std::make_shared<FixtureSearchClient>(bundled::search_fixture());
  s.snippet_scorer = std::make_shared<CosineSnippetScorer>(s.embeddings);
  return s;
}

ResponseEnsemble make_default_ensemble(const EnsembleServices& services) {
  EnsembleServices s = services;
  if (!s.embeddings) s.embeddings = bundled_embeddings();
  if (!s.qa) s.qa = std::make_shared<FixtureQABackend>(bundled::qa_fixture());
  if (!s.search) s.search = std::make_shared<FixtureSearchClient>(bundled::search_fixture());
  if (!s.snippet_scorer) s.snippet_scorer = std::make_shared<CosineSnippetScorer>(s.embeddings);

  const auto index = [&](const std::vector<std::string>& texts, const std::string& src) {
    return std::make_shared<const RetrievalIndex>(Corpus::from_texts(texts, src), s.embeddings);
  };
  ResponseEnsemble e;
  e.add(std::make_shared<Alicebot>());
  e.add(std::make_shared<Elizabot>());
  e.add(std::make_shared<Initiatorbot>());
  e.add(std::make_shared<Storybot>());
  e.add(std::make_shared<Evibot>(s.qa));
  e.add(std::make_shared<RetrievalModel>(model_ids::kFactGenerator,
                                         index(bundled::facts(), "facts"),
                                         RetrievalModel::Options{1, {}, nullptr}));
  e.add(std::make_shared<RetrievalModel>(
      model_ids::kTrump, index(bundled::trump_quotes(), "trump"),
      RetrievalModel::Options{1, bundled::trump_triggers(), nullptr}));
  e.add(std::make_shared<RetrievalModel>(
      model_ids::kGameOfThrones, index(bundled::got_quotes(), "got"),
      RetrievalModel::Options{1, bundled::got_triggers(), nullptr}));
  e.add(std::make_shared<RetrievalModel>(model_ids::kSubtitles,
                                         index(bundled::subtitle_replies(), "subtitles"),
                                         RetrievalModel::Options{20, {}, s.snippet_scorer}));
  e.add(std::make_shared<SearchSnippetModel>(s.search, s.snippet_scorer));
  e.add(std::make_shared<EscapePlan>(bundled::escape_responses(), s.escape_selector));
  return e;
}

std::vector<std::string> default_model_ids() {
  return {model_ids::kAlicebot,      model_ids::kElizabot,       model_ids::kInitiatorbot,
          model_ids::kStorybot,      model_ids::kEvibot,         model_ids::kFactGenerator,
          model_ids::kTrump,         model_ids::kGameOfThrones,  model_ids::kSubtitles,
          model_ids::kSearchSnippets, model_ids::kEscapePlan};
}

}  // namespace converse
