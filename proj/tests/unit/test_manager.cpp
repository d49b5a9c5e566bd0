#include "converse/error.hpp"
#include "converse/manager.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace converse;
using testutil::CannedModel;

namespace {

ResponseEnsemble canned(bool with_priority) {
  ResponseEnsemble e;
  e.add(std::make_shared<CannedModel>("Alicebot", "i like talking to you"));
  e.add(std::make_shared<CannedModel>("Elizabot", "why do you say that?"));
  e.add(std::make_shared<CannedModel>("BoWEscapePlan", "let us talk about movies"));
  if (with_priority) e.add(std::make_shared<CannedModel>("Storybot", "once upon a time", true));
  return e;
}

}  // namespace

TEST_SUITE("manager") {
  TEST_CASE("low ASR confidence asks the user to repeat") {
    const auto ex = testutil::default_extractor(16);
    Dialogue d;
    d.turns.push_back(Utterance::user("mumble", 0.1));
    Rng rng(1);
    const auto r = manager_step(d, canned(false), *ex, RandomPolicy(), ManagerConfig(), rng);
    CHECK(r.response.text == ManagerConfig().repeat_phrase);
    CHECK(r.selection.empty());
    apply(d, r);
    CHECK(d.turns.size() == 2);
    CHECK(d.selections.empty());
  }

  TEST_CASE("priority candidate overrides the policy") {
    const auto ex = testutil::default_extractor(16);
    Dialogue d = testutil::said("tell me a story");
    Rng rng(2);
    const auto r = manager_step(d, canned(true), *ex, RandomPolicy(), ManagerConfig(), rng);
    CHECK(r.response.text == "once upon a time");
    CHECK(r.selection.was_priority);
    CHECK_FALSE(r.selection.policy_distribution.has_value());
    CHECK_FALSE(is_policy_selection(r.selection));
  }

  TEST_CASE("greedy policy takes the top score and records its distribution") {
    const auto ex = testutil::default_extractor(16);
    Rng init(3);
    ScoringNet net(ex->layout(), 8, 4, init);
    std::normal_distribution<double> g(0.0, 0.5);
    for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()[i] += g(init);
    const NetPolicy greedy(PolicyVariant::GreedyActionValue, net);
    Dialogue d = testutil::user_first({"do you like movies"}, "m");
    Rng rng(4);
    const auto r = manager_step(d, canned(false), *ex, greedy, ManagerConfig(), rng);
    REQUIRE(r.scores.size() == 3);
    const auto best = static_cast<std::size_t>(std::max_element(r.scores.begin(), r.scores.end()) -
                                               r.scores.begin());
    CHECK(r.selection.chosen_index == best);
    CHECK(r.selection.policy_distribution->at(best) == 1.0);
    CHECK(r.selection.turn_index == 1);
    apply(d, r);
    CHECK(d.turns.back().text == r.selection.chosen().text);
    CHECK_NOTHROW(validate(d));
  }

  TEST_CASE("stochastic runs replay under the same seed") {
    const auto ex = testutil::default_extractor(16);
    const auto ens = make_default_ensemble(default_services(16));
    std::vector<std::string> a, b;
    for (auto* out : {&a, &b}) {
      Rng rng(9);
      Dialogue d = testutil::said("what do you think about star wars");
      for (const char* u : {"ok", "who is einstein", "bye"}) {
        const auto r = manager_step(d, ens, *ex, RandomPolicy(), ManagerConfig(), rng);
        out->push_back(r.response.text);
        apply(d, r);
        d.turns.push_back(Utterance::user(u));
      }
    }
    CHECK(a == b);
  }

  TEST_CASE("errors") {
    const auto ex = testutil::default_extractor(16);
    Rng rng(0);
    Dialogue sys;
    sys.turns.push_back(Utterance::system("hi"));
    CHECK_THROWS_AS(manager_step(sys, canned(false), *ex, RandomPolicy(), {}, rng), NoUserUtterance);
    ResponseEnsemble mute;
    mute.add(std::make_shared<CannedModel>("Alicebot", ""));
    CHECK_THROWS_AS(manager_step(testutil::said("hi"), mute, *ex, RandomPolicy(), {}, rng), EmptyCandidateSet);
    nlohmann::json bad = {{"asr_threshold", 2.0}};
    CHECK_THROWS_AS(ManagerConfig::from_json(bad, {}), InvalidArgument);
  }
}
