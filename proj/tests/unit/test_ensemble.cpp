#include <algorithm>
#include <cmath>
#include <numeric>

#include "converse/ensemble.hpp"
#include "converse/error.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace converse;
using testutil::said;

namespace {

/// Records every query; answers from a fixed map.
class RecordingQA : public QABackend {
 public:
  explicit RecordingQA(std::map<std::string, std::string> a, bool down = false)
      : answers_(std::move(a)), down_(down) {}
  std::optional<std::string> ask(const std::string& q) const override {
    if (down_) throw BackendUnavailable("offline");
    queries.push_back(q);
    auto it = answers_.find(q);
    if (it == answers_.end()) return std::nullopt;
    return it->second;
  }
  mutable std::vector<std::string> queries;

 private:
  std::map<std::string, std::string> answers_;
  bool down_;
};

class FailingSearch : public SearchClient {
 public:
  std::vector<std::string> search(const std::string&) const override {
    throw SearchUnavailable("offline");
  }
};

std::shared_ptr<const EmbeddingTable> random_embeddings(const std::vector<std::string>& vocab,
                                                        std::size_t dim, std::uint64_t seed) {
  return std::make_shared<const EmbeddingTable>(EmbeddingTable::hashed(vocab, dim, seed));
}

/// Independent re-implementation of the retrieval score for the oracle.
double oracle_similarity(const std::vector<std::string>& ctx, const std::vector<std::string>& doc,
                         const RetrievalIndex& index) {
  const auto& emb = index.embeddings();
  const auto wmean = [&](const std::vector<std::string>& toks) {
    std::vector<double> acc(emb.dim(), 0.0);
    double total = 0.0;
    for (const auto& t : toks) {
      if (!emb.contains(t)) continue;
      const double w = index.idf(t);
      const auto& v = emb.lookup(t);
      for (std::size_t i = 0; i < emb.dim(); ++i) acc[i] += w * v[static_cast<Eigen::Index>(i)];
      total += w;
    }
    if (total > 0)
      for (auto& a : acc) a /= total;
    return acc;
  };
  const auto a = wmean(ctx), b = wmean(doc);
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("priority_select follows precedence") {
    std::vector<CandidateResponse> c = {{"Evibot", "e", true, {}},
                                        {"Storybot", "s", true, {}},
                                        {"Alicebot", "a", false, {}}};
    CHECK(priority_select(c, {"Storybot", "Evibot"})->model_id == "Storybot");
    c[1].priority = false;
    CHECK(priority_select(c, {"Storybot", "Evibot"})->model_id == "Evibot");
    c[0].priority = false;
    CHECK_FALSE(priority_select(c, {"Storybot", "Evibot"}).has_value());
    c[2].priority = true;
    CHECK(priority_select(c, {"Storybot"})->model_id == "Alicebot");
  }

  TEST_CASE("alicebot confidence rules") {
    Alicebot bot;
    auto r = bot.respond("what is your name");
    CHECK(r.priority);
    CHECK(r.text == "I am an Alexa Prize socialbot.");
    CHECK(*r.confidence == 1.0);
    r = bot.respond("pizza is cool");
    CHECK_FALSE(r.priority);
    CHECK(r.text == "why do you think pizza is cool");
    CHECK(*r.confidence == 0.0);
    r = bot.respond("I have two rabbits");
    CHECK(r.text == "Hurrah! Having two rabbits sounds great.");
    CHECK(*r.confidence == 0.5);
    r = bot.respond("zebra crossing");
    CHECK(*r.confidence == 0.0);
    CHECK_FALSE(r.priority);
  }

  TEST_CASE("correct-sentence heuristic") {
    CHECK(is_correct_sentence("That is fine."));
    CHECK_FALSE(is_correct_sentence("that is fine"));
    CHECK_FALSE(is_correct_sentence("1 thing."));
    CHECK_FALSE(is_correct_sentence("Hello."));
    CHECK_FALSE(is_correct_sentence("I like * a lot."));
  }

  TEST_CASE("elizabot templates and reflections") {
    Elizabot bot;
    Rng rng(1);
    CHECK(bot.generate(said("I am tired"), rng)->text == "Did you come to me because you are tired");
    CHECK(bot.generate(said("What happened"), rng)->text == "Why do you ask?");
    CHECK(bot.reflect("my dog") == "your dog");
    CHECK(bot.reflect("I'd go") == "you would go");
    CHECK(bot.reflect("your car") == "my car");
    const auto r = bot.generate(said("I am walking my dog"), rng);
    CHECK(r->text == "Did you come to me because you are walking your dog");
    CHECK_FALSE(r->priority);
  }

  TEST_CASE("initiatorbot gating") {
    Initiatorbot bot;
    Rng rng(3);
    CHECK(bot.phrases().size() == 40);
    auto r = bot.generate(said("hi"), rng);
    REQUIRE(r);
    CHECK(r->priority);
    r = bot.generate(said("cats are nice"), rng);
    REQUIRE(r);
    CHECK_FALSE(r->priority);

    Dialogue d = testutil::user_first({"hi", "Did you know cats purr?", "cool"});
    SelectionRecord s;
    s.candidates = {{model_ids::kInitiatorbot, d.turns[1].text, true, {}}};
    s.turn_index = 1;
    d.selections.push_back(s);
    CHECK_FALSE(bot.generate(d, rng).has_value());
    d.turns.push_back(Utterance::system("ok"));
    d.turns.push_back(Utterance::user("and"));
    CHECK_FALSE(bot.generate(d, rng).has_value());  // two system turns ago
    d.turns.push_back(Utterance::system("fine"));
    d.turns.push_back(Utterance::user("then"));
    CHECK(bot.generate(d, rng).has_value());
  }

  TEST_CASE("initiator fact slot is filled") {
    Initiatorbot bot({"Did you know that <fact>?"}, {"The moon is far away."});
    Rng rng(0);
    CHECK(bot.generate(said("ok"), rng)->text == "Did you know that the moon is far away?");
  }

  TEST_CASE("storybot trigger needs both word classes") {
    Storybot bot;
    Rng rng(0);
    const auto r = bot.generate(said("tell me a story"), rng);
    REQUIRE(r);
    CHECK(r->priority);
    CHECK(r->text.rfind(kStoryPrefix, 0) == 0);
    CHECK_FALSE(bot.generate(said("tell me the time"), rng));
    CHECK_FALSE(bot.generate(said("story"), rng));
  }

  TEST_CASE("evibot procedure") {
    auto qa = std::make_shared<RecordingQA>(std::map<std::string, std::string>{
        {"who is einstein", "Albert Einstein was a physicist."},
        {"the weather is nice", "It is sunny."},
        {"star wars", "Star Wars is a film series."},
        {"what time is it", "ERROR"}});
    Evibot bot(qa);
    auto r = bot.respond("who is Einstein");
    REQUIRE(r);
    CHECK(r->priority);
    CHECK(r->text == "Albert Einstein was a physicist.");

    CHECK_FALSE(bot.respond("the of and"));

    r = bot.respond("the weather is nice");
    REQUIRE(r);
    CHECK_FALSE(r->priority);

    // Invalid full answer and no wh-word: no retry.
    qa->queries.clear();
    CHECK_FALSE(bot.respond("cats like milk"));
    CHECK(qa->queries.size() == 1);

    // Entity span first, then longest sub-phrases.
    qa->queries.clear();
    r = bot.respond("what do you think about Star Wars");
    REQUIRE(r);
    CHECK(r->priority);
    CHECK(qa->queries.at(0) == "what do you think about star wars");
    CHECK(qa->queries.at(1) == "star wars");

    CHECK_FALSE(bot.is_valid(std::string("ERROR")));
    CHECK_FALSE(bot.is_valid(std::string("  ")));
    CHECK_FALSE(bot.is_valid(std::nullopt));

    Evibot down(std::make_shared<RecordingQA>(std::map<std::string, std::string>{}, true));
    CHECK_FALSE(down.respond("who is Einstein"));
  }

  TEST_CASE("all sub-phrases are longest first") {
    const auto s = Evibot::all_subphrases({"a", "b", "c"});
    CHECK(s == std::vector<std::string>{"a b", "b c", "a", "b", "c"});
  }

  TEST_CASE("retrieval of identical context") {
    const auto emb = bundled_embeddings(16);
    RetrievalIndex index(Corpus::from_texts({"i like green apples", "dogs bark loudly",
                                             "the sun is hot"},
                                            "t"),
                         emb);
    const auto hits = retrieve_topk(index, said("dogs bark loudly"), 3);
    CHECK(hits.front().index == 1);
    CHECK(hits.front().similarity == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("all-OOV context keeps corpus order") {
    const auto emb = bundled_embeddings(8);
    RetrievalIndex index(Corpus::from_texts({"dogs bark", "cats purr", "birds sing"}, "t"), emb);
    const auto hits = retrieve_topk(index, said("qqqzzz xxyyww"), 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(hits[i].index == i);
      CHECK(hits[i].similarity == 0.0);
    }
  }

  TEST_CASE("retrieval matches exhaustive scan oracle") {
    Rng rng(11);
    std::vector<std::string> vocab;
    for (int i = 0; i < 300; ++i) vocab.push_back("w" + std::to_string(i));
    const auto emb = random_embeddings(vocab, 12, 5);
    for (std::size_t n : {1u, 7u, 50u, 400u}) {
      std::vector<std::string> texts;
      std::uniform_int_distribution<std::size_t> pick(0, vocab.size() + 20);
      std::uniform_int_distribution<int> len(1, 6);
      for (std::size_t i = 0; i < n; ++i) {
        std::string t;
        for (int k = len(rng); k > 0; --k) {
          const auto w = pick(rng);
          t += (w < vocab.size() ? vocab[w] : "oov" + std::to_string(w)) + " ";
        }
        texts.push_back(t);
      }
      if (n > 3) texts[3] = texts[1];  // exact duplicate exercises the tie-break
      RetrievalIndex index(Corpus::from_texts(texts, "r"), emb);
      Dialogue d = testutil::user_first({texts[0], "w1 w2", "w3 oov5"});

      std::vector<std::string> ctx;
      for (const auto& u : d.turns)
        for (auto& t : text::tokenize(u.text)) ctx.push_back(t);
      std::vector<std::pair<double, std::size_t>> oracle;
      for (std::size_t i = 0; i < n; ++i)
        oracle.push_back({oracle_similarity(ctx, text::tokenize(texts[i]), index), i});
      std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      const auto hits = retrieve_topk(index, d, n);
      REQUIRE(hits.size() == n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(hits[i].index == oracle[i].second);
        CHECK(hits[i].similarity == doctest::Approx(oracle[i].first).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("keyword gating") {
    const auto emb = bundled_embeddings(16);
    RetrievalIndex trump(Corpus::from_texts(bundled::trump_quotes(), "trump"), emb);
    CHECK_FALSE(keyword_gated_retrieve(trump, said("i like cheese"), bundled::trump_triggers(),
                                       model_ids::kTrump));
    const auto r = keyword_gated_retrieve(trump, said("what about trump"),
                                          bundled::trump_triggers(), model_ids::kTrump);
    REQUIRE(r);
    CHECK(r->text == retrieve_topk(trump, said("what about trump"), 1).front().item->text);

    RetrievalIndex got(Corpus::from_texts(bundled::got_quotes(), "got"), emb);
    CHECK(keyword_gated_retrieve(got, said("i like jon snow"), {"jon snow"}, "G"));
    CHECK_FALSE(keyword_gated_retrieve(got, said("i like jon"), {"jon snow"}, "G"));
    CHECK(trigger_matches("I LIKE Jon Snow", {"jon snow"}));
    CHECK_FALSE(trigger_matches("trumpet", {"trump"}));
  }

  TEST_CASE("escape plan") {
    EscapePlan plan;
    CHECK(plan.responses().size() == 35);
    Rng a(9), b(9);
    CHECK(plan.respond(said("x"), a).text == plan.respond(said("x"), b).text);

    // Selector-driven choice equals brute-force argmax over all 35.
    CandidateScorer sel = [](const Dialogue&, const CandidateResponse& c) {
      return static_cast<double>(text::fnv1a(c.text) % 1000);
    };
    EscapePlan trained(bundled::escape_responses(), sel);
    std::size_t best = 0;
    for (std::size_t i = 1; i < 35; ++i)
      if (sel(said("x"), {"", bundled::escape_responses()[i], false, {}}) >
          sel(said("x"), {"", bundled::escape_responses()[best], false, {}}))
        best = i;
    CHECK(trained.respond(said("x"), a).text == bundled::escape_responses()[best]);
    CHECK_FALSE(trained.respond(said("x"), a).priority);
  }

  TEST_CASE("snippet preprocessing") {
    CHECK(preprocess_snippet("A. B. C incompl") == "A. B.");
    CHECK(preprocess_snippet("Mar 23, 2017 ... Learning how to") == "");
    CHECK(preprocess_snippet("Cats | sleep a lot... They are cute!") == "Cats sleep a lot They are cute!");
  }

  TEST_CASE("search snippet model") {
    const auto emb = bundled_embeddings(16);
    auto scorer = std::make_shared<CosineSnippetScorer>(emb);
    auto search = std::make_shared<FixtureSearchClient>(
        std::map<std::string, std::vector<std::string>>{
            {"dogs bark loudly", {"The sun is hot.", "dogs bark loudly.", "Fragment without end"}},
            {"nothing", {}}});
    SearchSnippetModel model(search, scorer);
    Rng rng(0);
    CHECK(model.generate(said("dogs bark loudly"), rng)->text == "dogs bark loudly.");
    CHECK_FALSE(model.generate(said("nothing"), rng));
    SearchSnippetModel down(std::make_shared<FailingSearch>(), scorer);
    CHECK_FALSE(down.generate(said("dogs"), rng));
  }

  TEST_CASE("default ensemble is deterministic and sound") {
    const auto services = default_services(16);
    const auto ens = make_default_ensemble(services);
    CHECK(ens.model_ids() == default_model_ids());
    for (const char* u : {"hi", "tell me a story", "who is einstein", "i hate trump",
                          "what is your name", "cats are nice", "the of and"}) {
      Rng a(42), b(42);
      const auto c1 = ens.generate(said(u), a);
      const auto c2 = ens.generate(said(u), b);
      REQUIRE(c1.size() == c2.size());
      for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].text == c2[i].text);
      CHECK(std::any_of(c1.begin(), c1.end(),
                        [](const auto& c) { return c.model_id == model_ids::kEscapePlan; }));
      for (const auto& c : c1) {
        CHECK_NOTHROW(validate(c));
        if (c.model_id != model_ids::kStorybot) CHECK(c.text.find(kStoryPrefix) == std::string::npos);
      }
    }
  }

  TEST_CASE("parallel ensemble equals sequential") {
    const auto services = default_services(16);
    auto seq = make_default_ensemble(services);
    std::vector<std::shared_ptr<const ResponseModel>> models;
    for (std::size_t i = 0; i < seq.size(); ++i)
      models.push_back(std::shared_ptr<const ResponseModel>(&seq.model(i), [](auto*) {}));
    ResponseEnsemble par(models, true);
    Rng a(5), b(5);
    const auto c1 = seq.generate(said("what do you think about star wars"), a);
    const auto c2 = par.generate(said("what do you think about star wars"), b);
    REQUIRE(c1.size() == c2.size());
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].text == c2[i].text);
  }
}
