#include "converse/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "converse/error.hpp"

namespace converse {

// ---------------------------------------------------------------------------
// Similarity metrics

namespace {

std::vector<const Vector*> known_vectors(const std::vector<std::string>& toks,
                                         const EmbeddingTable& emb) {
  std::vector<const Vector*> out;
  for (const auto& t : toks)
    if (emb.contains(t)) out.push_back(&emb.lookup(t));
  return out;
}

Vector extrema_vector(const std::vector<const Vector*>& vs) {
  Vector out = *vs.front();
  for (std::size_t k = 1; k < vs.size(); ++k)
    for (Eigen::Index i = 0; i < out.size(); ++i)
      if (std::abs((*vs[k])[i]) > std::abs(out[i])) out[i] = (*vs[k])[i];
  return out;
}

double directed_greedy(const std::vector<const Vector*>& a, const std::vector<const Vector*>& b) {
  double total = 0.0;
  for (const Vector* x : a) {
    double best = -1.0;
    for (const Vector* y : b) best = std::max(best, cosine(*x, *y));
    total += best;
  }
  return total / static_cast<double>(a.size());
}

}  // namespace

SimilarityMetrics similarity_metrics(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b,
                                     const EmbeddingTable& emb) {
  const auto va = known_vectors(a, emb);
  const auto vb = known_vectors(b, emb);
  if (va.empty() || vb.empty()) return {};
  SimilarityMetrics m;
  m.average = cosine(emb.mean(a), emb.mean(b));
  m.extrema = cosine(extrema_vector(va), extrema_vector(vb));
  m.greedy = 0.5 * (directed_greedy(va, vb) + directed_greedy(vb, va));
  return m;
}

// ---------------------------------------------------------------------------
// Coarse POS tagger: closed-class lexicon, common open-class words, suffix rules.

namespace {

const std::unordered_map<std::string, PosTag>& pos_lexicon() {
  static const std::unordered_map<std::string, PosTag> lex = [] {
    std::unordered_map<std::string, PosTag> m;
    const auto add = [&](PosTag t, const char* words) {
      std::istringstream ss(words);
      for (std::string w; ss >> w;) m.emplace(w, t);
    };
    add(PosTag::Pron,
        "i me my mine myself you your yours yourself he him his himself she her hers herself it "
        "its itself we us our ours ourselves they them their theirs themselves who whom whose "
        "what which this that these those anybody anyone anything everybody everyone everything "
        "nobody nothing somebody someone something i'm you're it's i've i'd i'll we're they're "
        "that's what's there's he's she's");
    add(PosTag::Det, "a an the some any no every each either neither all both few many much "
                     "several another such");
    add(PosTag::Prep,
        "about above across after against along among around at before behind below beneath "
        "beside between beyond by despite down during except for from in inside into like near "
        "of off on onto out outside over past since through throughout till to toward towards "
        "under until up upon with within without and but or nor so yet because although if "
        "unless while whereas than");
    add(PosTag::Adv,
        "very really quite too also just only even still already always never sometimes often "
        "usually here there now then today tomorrow yesterday soon later again almost maybe "
        "perhaps probably definitely certainly not ever how when where why well actually "
        "rather pretty so yes no");
    add(PosTag::Verb,
        "is am are was were be been being have has had having do does did done doing can could "
        "will would shall should may might must go goes went gone going get gets got make made "
        "know knew known think thought take took see saw seen come came want wanted look use "
        "find found give gave tell told work call try ask need feel felt become leave put mean "
        "keep let begin seem help talk turn start show hear play run move like love live believe "
        "bring happen write sit stand lose pay meet include continue set learn change lead "
        "understand watch follow stop create speak read spend grow open walk win offer remember "
        "consider appear buy wait serve die send expect build stay fall cut reach kill remain "
        "say said hate enjoy eat drink sleep sing dance listen don't can't won't isn't aren't "
        "wasn't didn't doesn't");
    add(PosTag::Adj,
        "good bad new old great little big small large long short high low right wrong young "
        "important different same able nice happy sad funny interesting boring cool awesome "
        "amazing terrible horrible beautiful ugly real whole sure free full best better worst "
        "worse early late hard easy strong weak true false possible impossible dark light hot "
        "cold stupid silly smart crazy weird favorite tired busy ready");
    add(PosTag::Num, "zero one two three four five six seven eight nine ten eleven twelve "
                     "twenty thirty hundred thousand million billion first second third");
    add(PosTag::Other, "oh ah hmm um uh wow hey hi hello bye goodbye okay ok please thanks yeah "
                       "nope nah yay ugh meh");
    return m;
  }();
  return lex;
}

bool ends_with(const std::string& s, std::string_view suf) {
  return s.size() > suf.size() + 1 && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

PosTag coarse_pos_tag(const std::string& w) {
  if (w.empty()) return PosTag::Other;
  const auto& lex = pos_lexicon();
  if (auto it = lex.find(w); it != lex.end()) return it->second;
  if (std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); }))
    return PosTag::Num;
  if (std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::ispunct(c); }))
    return PosTag::Punct;
  if (ends_with(w, "ly")) return PosTag::Adv;
  if (ends_with(w, "ing") || ends_with(w, "ed") || ends_with(w, "ize") || ends_with(w, "ise"))
    return PosTag::Verb;
  for (std::string_view suf : {"ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish"})
    if (ends_with(w, suf)) return PosTag::Adj;
  return PosTag::Noun;
}

std::vector<PosTag> pos_tags(std::string_view text) {
  std::vector<PosTag> tags;
  for (const auto& t : text::tokenize(text)) tags.push_back(coarse_pos_tag(t));
  const std::string trimmed = text::trim(text);
  if (!trimmed.empty() && std::ispunct(static_cast<unsigned char>(trimmed.back())))
    tags.push_back(PosTag::Punct);
  return tags;
}

std::string to_string(PosTag t) {
  static const char* names[] = {"NOUN", "VERB", "ADJ", "ADV",   "PRON",
                                "DET",  "PREP", "NUM", "PUNCT", "OTHER"};
  return names[static_cast<int>(t)];
}

// ---------------------------------------------------------------------------
// Layout

FeatureLayout::FeatureLayout(FeatureConfig config) : config_(std::move(config)) {
  if (config_.embedding_dim == 0) throw InvalidArgument("embedding_dim must be positive");
  if (config_.model_ids.empty()) throw InvalidArgument("layout needs at least one model id");
  if (config_.pos_buckets == 0) throw InvalidArgument("pos_buckets must be positive");
  const std::set<std::string> uniq(config_.model_ids.begin(), config_.model_ids.end());
  if (uniq.size() != config_.model_ids.size()) throw InvalidArgument("duplicate model ids");

  const std::size_t d = config_.embedding_dim;
  const std::size_t m = config_.model_ids.size();
  const auto add = [&](const std::string& name, std::size_t len, bool binary) {
    groups_.push_back({name, total_dim_, len, binary});
    total_dim_ += len;
  };
  add("response_embedding", d, false);
  add("last_utterance_embedding", d, false);
  add("context_embedding", d, false);
  add("user_context_embedding", d, false);
  add("similarities", kNumSimilarities, false);
  add("model_class", m, true);
  add("pos_bucket", config_.pos_buckets, true);
  add("act_model", kNumDialogueActs * m, true);
  add("binary", kNumBinaries, true);
  add("unigrams", config_.unigrams.size(), true);
}

const FeatureGroup& FeatureLayout::group(const std::string& name) const {
  for (const auto& g : groups_)
    if (g.name == name) return g;
  throw InvalidArgument("no feature group named " + name);
}

std::size_t FeatureLayout::model_index(const std::string& model_id) const {
  const auto& ids = config_.model_ids;
  auto it = std::find(ids.begin(), ids.end(), model_id);
  if (it == ids.end()) throw LayoutMismatch("model '" + model_id + "' is not in the feature layout");
  return static_cast<std::size_t>(it - ids.begin());
}

nlohmann::json FeatureLayout::to_json() const {
  nlohmann::json g = nlohmann::json::array();
  for (const auto& x : groups_)
    g.push_back({{"name", x.name}, {"offset", x.offset}, {"length", x.length}, {"binary", x.binary}});
  return {{"version", 1},
          {"embedding_dim", config_.embedding_dim},
          {"model_ids", config_.model_ids},
          {"pos_buckets", config_.pos_buckets},
          {"unigrams", config_.unigrams},
          {"groups", g},
          {"total_dim", total_dim_}};
}

FeatureLayout FeatureLayout::from_json(const nlohmann::json& j) {
  FeatureConfig c;
  try {
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    c.pos_buckets = j.at("pos_buckets").get<std::size_t>();
    c.unigrams = j.at("unigrams").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw LayoutMismatch(std::string("malformed layout: ") + e.what());
  }
  FeatureLayout layout(std::move(c));
  if (j.contains("total_dim") && j["total_dim"].get<std::size_t>() != layout.total_dim())
    throw LayoutMismatch("serialized layout total_dim disagrees with its configuration");
  if (j.contains("groups")) {
    const auto& g = j["groups"];
    if (g.size() != layout.groups_.size()) throw LayoutMismatch("group count mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto& e = layout.groups_[i];
      if (g[i].at("name") != e.name || g[i].at("offset") != e.offset ||
          g[i].at("length") != e.length)
        throw LayoutMismatch("group '" + e.name + "' disagrees with serialized layout");
    }
  }
  return layout;
}

bool operator==(const FeatureLayout& a, const FeatureLayout& b) {
  return a.config_.embedding_dim == b.config_.embedding_dim &&
         a.config_.model_ids == b.config_.model_ids &&
         a.config_.pos_buckets == b.config_.pos_buckets && a.config_.unigrams == b.config_.unigrams;
}

// ---------------------------------------------------------------------------
// Extraction

std::set<std::string> named_entities(std::string_view text, const WordSet& stopwords) {
  std::set<std::string> out;
  for (const auto& tok : text::tokenize_raw(text)) {
    if (!std::isupper(static_cast<unsigned char>(tok.front()))) continue;
    const auto low = text::to_lower(tok);
    if (!stopwords.count(low)) out.insert(low);
  }
  return out;
}

std::set<std::string> bigrams(const std::vector<std::string>& tokens) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.insert(tokens[i] + ' ' + tokens[i + 1]);
  return out;
}

namespace {

std::vector<std::string> content_words(const std::vector<std::string>& toks, const WordSet& stop) {
  std::vector<std::string> out;
  for (const auto& t : toks)
    if (!stop.count(t)) out.push_back(t);
  return out;
}

template <typename A, typename B>
bool intersects(const A& a, const B& b) {
  for (const auto& x : a)
    if (b.count(x)) return true;
  return false;
}

}  // namespace

FeatureExtractor::FeatureExtractor(FeatureLayout layout, std::shared_ptr<const EmbeddingTable> emb,
                                   Nlu nlu)
    : layout_(std::move(layout)), emb_(std::move(emb)), nlu_(std::move(nlu)) {
  if (!emb_) throw InvalidArgument("feature extractor needs an embedding table");
  if (emb_->dim() != layout_.config().embedding_dim)
    throw LayoutMismatch("embedding table has dimension " + std::to_string(emb_->dim()) +
                         " but the layout expects " +
                         std::to_string(layout_.config().embedding_dim));
}

DialogueContext FeatureExtractor::context(const Dialogue& dialogue) const {
  const auto& stop = nlu_.lexicon().stopwords;
  DialogueContext c;
  if (const Utterance* u = dialogue.last_user()) c.last_user_text = u->text;
  c.last_user = text::tokenize(c.last_user_text);
  c.last_user_content = content_words(c.last_user, stop);
  std::string context_raw;
  for (const Utterance* u : dialogue.last_utterances(kRetrievalContextWindow)) {
    for (auto& t : text::tokenize(u->text)) c.context.push_back(std::move(t));
    context_raw += u->text + " ";
  }
  c.context_content = content_words(c.context, stop);
  for (const Utterance* u : dialogue.last_user_utterances(3))
    for (auto& t : text::tokenize(u->text)) c.user3.push_back(std::move(t));
  c.last_user_mean = emb_->mean(c.last_user);
  c.context_mean = emb_->mean(c.context);
  c.user3_mean = emb_->mean(c.user3);
  c.act = nlu_.classify_dialogue_act(c.last_user_text);
  c.flags = nlu_.lexical_flags(c.last_user_text);
  c.last_user_bigrams = bigrams(c.last_user);
  for (const Utterance* u : dialogue.last_utterances(kRetrievalContextWindow))
    for (auto& b : bigrams(text::tokenize(u->text))) c.context_bigrams.insert(std::move(b));
  c.last_user_entities = named_entities(c.last_user_text, stop);
  c.context_entities = named_entities(context_raw, stop);
  c.user_turns = dialogue.user_turn_count();
  return c;
}

Vector FeatureExtractor::scoring_features(const DialogueContext& c,
                                          const CandidateResponse& cand) const {
  const auto& cfg = layout_.config();
  const auto& lex = nlu_.lexicon();
  const std::size_t model = layout_.model_index(cand.model_id);
  const std::size_t d = cfg.embedding_dim;

  Vector x = Vector::Zero(static_cast<Eigen::Index>(layout_.total_dim()));
  const auto put = [&](const std::string& group, std::size_t i, double v) {
    const auto& g = layout_.group(group);
    x[static_cast<Eigen::Index>(g.offset + i)] = v;
  };
  const auto put_vec = [&](const std::string& group, const Vector& v) {
    const auto& g = layout_.group(group);
    x.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(d)) = v;
  };

  const auto resp = text::tokenize(cand.text);
  const auto resp_content = content_words(resp, lex.stopwords);
  put_vec("response_embedding", emb_->mean(resp));
  put_vec("last_utterance_embedding", c.last_user_mean);
  put_vec("context_embedding", c.context_mean);
  put_vec("user_context_embedding", c.user3_mean);

  const std::vector<const std::vector<std::string>*> sides = {
      &c.last_user, &c.context, &c.user3, &c.last_user_content, &c.context_content};
  std::size_t s = 0;
  for (std::size_t k = 0; k < sides.size(); ++k) {
    const bool content = k >= 3;
    const auto m = similarity_metrics(content ? resp_content : resp, *sides[k], *emb_);
    put("similarities", s++, m.average);
    put("similarities", s++, m.extrema);
    put("similarities", s++, m.greedy);
  }

  put("model_class", model, 1.0);

  std::string tag_seq;
  for (PosTag t : pos_tags(cand.text)) tag_seq += to_string(t) + ' ';
  put("pos_bucket", text::fnv1a(tag_seq) % cfg.pos_buckets, 1.0);

  put("act_model", static_cast<std::size_t>(c.act) * layout_.num_models() + model, 1.0);

  const WordSet user_content(c.last_user_content.begin(), c.last_user_content.end());
  const auto resp_bigrams = bigrams(resp);
  const auto resp_entities = named_entities(cand.text, lex.stopwords);
  const auto resp_flags = nlu_.lexical_flags(cand.text);
  const double binaries[FeatureLayout::kNumBinaries] = {
      static_cast<double>(intersects(resp_content, user_content)),
      static_cast<double>(intersects(resp_bigrams, c.last_user_bigrams)),
      static_cast<double>(intersects(resp_bigrams, c.context_bigrams)),
      static_cast<double>(intersects(resp_entities, c.last_user_entities)),
      static_cast<double>(intersects(resp_entities, c.context_entities)),
      static_cast<double>(nlu_.is_generic(cand.text)),
      static_cast<double>(resp_flags.has_wh),
      static_cast<double>(c.flags.has_wh),
      static_cast<double>(resp_flags.has_intensifier),
      static_cast<double>(c.flags.has_intensifier),
      static_cast<double>(resp_flags.has_negation),
      static_cast<double>(!resp_content.empty()),
  };
  for (std::size_t i = 0; i < FeatureLayout::kNumBinaries; ++i) put("binary", i, binaries[i]);

  const WordSet resp_set(resp.begin(), resp.end());
  for (std::size_t i = 0; i < cfg.unigrams.size(); ++i)
    put("unigrams", i, resp_set.count(cfg.unigrams[i]) ? 1.0 : 0.0);
  return x;
}

Vector FeatureExtractor::scoring_features(const Dialogue& dialogue,
                                          const CandidateResponse& candidate) const {
  return scoring_features(context(dialogue), candidate);
}

std::vector<Vector> FeatureExtractor::scoring_features(
    const Dialogue& dialogue, const std::vector<CandidateResponse>& candidates) const {
  const auto ctx = context(dialogue);
  std::vector<Vector> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(scoring_features(ctx, c));
  return out;
}

// ---------------------------------------------------------------------------
// Reward features

Vector reward_features(const Dialogue& dialogue, const CandidateResponse& candidate,
                       const Vector& amt_probs, bool is_priority, const Nlu& nlu) {
  namespace rs = reward_slots;
  if (amt_probs.size() != 5) throw InvalidArgument("AMT probability vector must have 5 entries");
  Vector f = Vector::Zero(kRewardFeatureDim);
  if (is_priority) {
    f[rs::kPriority] = 1.0;
  } else {
    f.segment(rs::kAmt, 5) = amt_probs;
  }
  f[rs::kGenericResponse] = nlu.is_generic(candidate.text) ? 1.0 : 0.0;
  const double rlen = static_cast<double>(text::tokenize(candidate.text).size());
  f[rs::kResponseLength] = rlen;
  f[rs::kResponseLength + 1] = std::sqrt(rlen);

  const Utterance* u = dialogue.last_user();
  const std::string user = u ? u->text : std::string();
  const auto flags = nlu.lexical_flags(user);
  const DialogueAct act = nlu.classify_dialogue_act(user);
  std::size_t act_slot = 2;  // statement
  if (flags.has_profanity)
    act_slot = 3;
  else if (act == DialogueAct::Request)
    act_slot = 0;
  else if (act == DialogueAct::GenericQuestion || act == DialogueAct::PersonalQuestion ||
           nlu.is_question(user))
    act_slot = 1;
  f[rs::kUserAct + act_slot] = 1.0;

  f[rs::kSentiment + static_cast<std::size_t>(nlu.classify_sentiment(user))] = 1.0;
  f[rs::kGenericUser] = nlu.is_generic(user) ? 1.0 : 0.0;
  const double ulen = static_cast<double>(text::tokenize(user).size());
  f[rs::kUserLength] = ulen;
  f[rs::kUserLength + 1] = std::sqrt(ulen);
  f[rs::kConfused] = flags.is_confused ? 1.0 : 0.0;
  const double n = static_cast<double>(std::max<std::size_t>(1, dialogue.user_turn_count()));
  f[rs::kTurns] = n;
  f[rs::kTurns + 1] = std::sqrt(n);
  f[rs::kTurns + 2] = std::log(n);
  return f;
}

// ---------------------------------------------------------------------------
// Logistic selector

namespace {
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

double LogisticSelector::probability(const Vector& x) const {
  if (!trained()) throw InvalidArgument("logistic selector is not trained");
  if (x.size() != w_.size()) throw LayoutMismatch("feature dimension mismatch");
  return sigmoid(w_.dot(x) + b_);
}

LogisticSelector LogisticSelector::fit(const std::vector<Vector>& x, const std::vector<int>& y,
                                       double l2, double lr, std::size_t epochs) {
  if (x.empty()) throw EmptySplit("logistic selector needs training data");
  if (x.size() != y.size()) throw InvalidArgument("feature/label count mismatch");
  const auto dim = x.front().size();
  Vector w = Vector::Zero(dim);
  double b = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    Vector gw = l2 * w;
    double gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double err = sigmoid(w.dot(x[i]) + b) - static_cast<double>(y[i] != 0);
      gw.noalias() += (err / n) * x[i];
      gb += err / n;
    }
    w -= lr * gw;
    b -= lr * gb;
  }
  return LogisticSelector(std::move(w), b);
}

nlohmann::json LogisticSelector::to_json() const {
  return {{"weights", std::vector<double>(w_.data(), w_.data() + w_.size())}, {"bias", b_}};
}

LogisticSelector LogisticSelector::from_json(const nlohmann::json& j) {
  auto w = j.at("weights").get<std::vector<double>>();
  return LogisticSelector(Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size())),
                          j.at("bias").get<double>());
}

CandidateScorer make_feature_scorer(std::shared_ptr<const FeatureExtractor> extractor,
                                    std::function<double(const Vector&)> score) {
  return [extractor = std::move(extractor), score = std::move(score)](
             const Dialogue& d, const CandidateResponse& c) {
    return score(extractor->scoring_features(d, c));
  };
}

}  // namespace converse
