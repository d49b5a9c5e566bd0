#include <set>

#include "converse/error.hpp"
#include "converse/nlu.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace converse;

TEST_SUITE("dialogue") {
  TEST_CASE("utterance and dialogue validation") {
    CHECK_THROWS_AS(validate(Utterance::user("   ")), InvalidArgument);
    Utterance sys = Utterance::system("hello");
    sys.asr_confidence = 0.5;
    CHECK_THROWS_AS(validate(sys), InvalidArgument);
    CHECK_THROWS_AS(validate(Utterance::user("hi", 1.5)), InvalidArgument);
    CHECK_NOTHROW(validate(Utterance::user("hi", 0.2)));

    Dialogue d = testutil::user_first({"hi", "hello", "how are you"});
    CHECK_NOTHROW(validate(d));
    d.turns.push_back(Utterance::user("again"));
    CHECK_THROWS_AS(validate(d), InvalidArgument);
    d.turns.pop_back();
    d.final_score = 5.5;
    CHECK_THROWS_AS(validate(d), InvalidArgument);
  }

  TEST_CASE("selection record distribution invariants") {
    SelectionRecord s;
    s.candidates = {{"A", "x", false, {}}, {"B", "y", false, {}}};
    s.policy_distribution = std::vector<double>{0.5, 0.5};
    CHECK_NOTHROW(validate(s));
    s.policy_distribution = std::vector<double>{0.5, 0.6};
    CHECK_THROWS_AS(validate(s), InvalidArgument);
    s.policy_distribution = std::vector<double>{1.5, -0.5};
    CHECK_THROWS_AS(validate(s), InvalidArgument);
    s.policy_distribution = std::vector<double>{1.0};
    CHECK_THROWS_AS(validate(s), InvalidArgument);
    s.policy_distribution.reset();
    s.chosen_index = 2;
    CHECK_THROWS_AS(validate(s), InvalidArgument);
  }

  TEST_CASE("prefix keeps selections inside the prefix") {
    Dialogue d = testutil::user_first({"a", "b", "c", "d", "e"});
    SelectionRecord s1, s2;
    s1.candidates = {{"A", "b", false, {}}};
    s1.turn_index = 1;
    s2.candidates = {{"A", "d", false, {}}};
    s2.turn_index = 3;
    d.selections = {s1, s2};
    const Dialogue p = d.prefix(3);
    CHECK(p.turns.size() == 3);
    CHECK(p.selections.size() == 1);
    CHECK(p.last_user()->text == "c");
    CHECK(d.last_user_utterances(2).front()->text == "c");
  }

  TEST_CASE("derived rng streams differ and repeat") {
    Rng a = derive_rng(7, 0), b = derive_rng(7, 1), c = derive_rng(7, 0);
    const auto x = a();
    CHECK(x != b());
    CHECK(x == c());
  }
}

TEST_SUITE("nlu") {
  TEST_CASE("dialogue act examples") {
    CHECK(classify_dialogue_act("yes please") == DialogueAct::Accept);
    CHECK(classify_dialogue_act("goodbye") == DialogueAct::Goodbye);
    CHECK(classify_dialogue_act("") == DialogueAct::Other);
    CHECK(classify_dialogue_act("ok see you later") == DialogueAct::Goodbye);
    CHECK(classify_dialogue_act("hello there") == DialogueAct::Greeting);
    CHECK(classify_dialogue_act("hello there my good old friend") != DialogueAct::Greeting);
    CHECK(classify_dialogue_act("no thanks") == DialogueAct::Reject);
    CHECK(classify_dialogue_act("nope") == DialogueAct::Reject);
    CHECK(classify_dialogue_act("tell me a story") == DialogueAct::Request);
    CHECK(classify_dialogue_act("tell me what time it is") != DialogueAct::Request);
    CHECK(classify_dialogue_act("what do you think of the president") == DialogueAct::Politics);
    CHECK(classify_dialogue_act("what is your favorite color") == DialogueAct::PersonalQuestion);
    CHECK(classify_dialogue_act("where is paris") == DialogueAct::GenericQuestion);
    CHECK(classify_dialogue_act("paris is nice?") == DialogueAct::GenericQuestion);
    CHECK(classify_dialogue_act("cats are nice") == DialogueAct::Statement);
    CHECK(classify_dialogue_act("pizza") == DialogueAct::Other);
  }

  TEST_CASE("sentiment and genericness") {
    CHECK(classify_sentiment("i love this") == Sentiment::Positive);
    CHECK(classify_sentiment("this is stupid") == Sentiment::Negative);
    CHECK(classify_sentiment("the") == Sentiment::Neutral);
    const auto& stop = Lexicon::bundled().stopwords;
    CHECK(is_generic("what is it", stop));
    CHECK_FALSE(is_generic("quantum physics", stop));
    CHECK(is_generic("", stop));
  }

  TEST_CASE("lexical flags") {
    auto f = lexical_flags("what");
    CHECK(f.has_wh);
    CHECK(f.is_confused);
    CHECK(lexical_flags("amazingly good").has_intensifier);
    CHECK(lexical_flags("i can not").has_negation);
    CHECK(lexical_flags("i don't know").has_negation);
    CHECK_FALSE(lexical_flags("what a silly thing to say").is_confused);
  }

  TEST_CASE("abstract state examples") {
    CHECK(abstract_state(testutil::said("hello")) ==
          AbstractState{DialogueAct::Greeting, Sentiment::Neutral, true});
    CHECK(abstract_state(testutil::said("i hate politics")) ==
          AbstractState{DialogueAct::Politics, Sentiment::Negative, false});
    CHECK(abstract_state(testutil::said("tell me a story")) ==
          AbstractState{DialogueAct::Request, Sentiment::Neutral, false});
    Dialogue none;
    none.turns.push_back(Utterance::system("welcome"));
    CHECK_THROWS_AS(abstract_state(none), NoUserUtterance);
  }

  TEST_CASE("state index round trip") {
    for (std::size_t i = 0; i < kNumAbstractStates; ++i)
      CHECK(AbstractState::from_index(i).index() == i);
    CHECK_THROWS_AS(AbstractState::from_index(60), InvalidArgument);
  }

  TEST_CASE("every abstract state is reachable") {
    // One witness per act for each generic flag; sentiment comes from an
    // appended stop-word interjection ("wow" positive, "ugh" negative).
    struct Witness {
      const char* generic;
      const char* specific;
    };
    const Witness witnesses[] = {
        {"yes", "yes i adore pasta"},          // Accept
        {"no", "no i dislike pasta"},          // Reject
        {"tell me", "tell me a story"},        // Request
        {"eu", "i hate politics"},             // Politics
        {"what is it", "where is paris"},      // GenericQuestion
        {"what about you", "where do you live"},  // PersonalQuestion
        {"it is that", "cats are nice"},       // Statement
        {"hello", "hello robot"},              // Greeting
        {"bye", "bye friend"},                 // Goodbye
        {"oh", "pizza"},                       // Other
    };
    Nlu nlu;
    std::set<std::size_t> seen;
    for (const auto& w : witnesses) {
      for (const char* base : {w.generic, w.specific}) {
        for (const char* tail : {"", " wow", " ugh"}) {
          const std::string s = std::string(base) + tail;
          seen.insert(nlu.abstract_state(s).index());
        }
      }
    }
    // Sentiment on specific witnesses may collide; sweep neutral variants
    // with explicit lexicon words for the remaining combinations.
    for (const auto& w : witnesses) {
      for (const char* tail : {" wow wow", " ugh ugh", " wonderful", " awful"}) {
        seen.insert(nlu.abstract_state(std::string(w.specific) + tail).index());
      }
    }
    for (std::size_t i = 0; i < kNumAbstractStates; ++i) {
      CAPTURE(to_string(AbstractState::from_index(i)));
      CHECK(seen.count(i) == 1);
    }
  }

  TEST_CASE("classifiers are deterministic") {
    for (const char* s : {"what is your name", "i love cats", "no way", "hmm"}) {
      CHECK(abstract_state(testutil::said(s)) == abstract_state(testutil::said(s)));
    }
  }
}
