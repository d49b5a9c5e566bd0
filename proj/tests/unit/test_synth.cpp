#include <filesystem>

#include "converse/error.hpp"
#include "converse/synth.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace converse;

TEST_SUITE("synth") {
  TEST_CASE("planted rule covers labels 1..5") {
    synth::PlantedRule r{0, 1, -0.5, 0.5};
    CHECK(r.label((Vector(2) << -1, 0).finished()) == 1);
    CHECK(r.label((Vector(2) << 0, 0).finished()) == 2);
    CHECK(r.label((Vector(2) << 1, 0).finished()) == 3);
    CHECK(r.label((Vector(2) << -1, 1).finished()) == 3);
    CHECK(r.label((Vector(2) << 1, 1).finished()) == 5);
    const auto back = synth::PlantedRule::from_json(r.to_json());
    CHECK(back.high == 0.5);
    CHECK(back.overlap_index == 1);
  }

  TEST_CASE("world generation is deterministic and consistent") {
    const auto ex = testutil::default_extractor(16);
    synth::SynthConfig cfg;
    cfg.contexts = 40;
    cfg.store_contexts = 30;
    cfg.dialogues = 10;
    cfg.seed = 4;
    const auto w = synth::make_world(*ex, cfg);
    CHECK(w.amt.size() == 40 * cfg.models.size());
    CHECK(w.store.size() == 30);
    CHECK(w.store.consistent(ex->nlu()));
    CHECK(w.dialogues.size() == 10);
    CHECK(w.heuristic_preference.size() == cfg.models.size());
    for (const auto& d : w.dialogues) {
      CHECK_NOTHROW(validate(d));
      REQUIRE(d.final_score.has_value());
      CHECK(*d.final_score >= 1.0);
      CHECK(*d.final_score <= 5.0);
      for (const auto& s : d.selections) CHECK(s.policy_distribution->size() == cfg.models.size());
    }
    const auto again = synth::make_world(*ex, cfg);
    for (std::size_t i = 0; i < w.amt.size(); ++i) CHECK(to_json(w.amt[i]) == to_json(again.amt[i]));
    for (std::size_t i = 0; i < w.dialogues.size(); ++i) CHECK(to_json(w.dialogues[i]) == to_json(again.dialogues[i]));

    cfg.label_noise = 0.0;
    const auto clean = synth::make_world(*ex, cfg);
    const synth::PlantedOutcome outcome(clean.rule);
    for (const auto& r : clean.amt) {
      const Vector x = ex->scoring_features(r.example.context, r.example.candidate);
      CHECK(r.example.label == clean.rule.label(x));
    }
    const auto& rec = clean.store.at(0);
    CHECK(outcome.class_probs(rec, 0).sum() == 1.0);

    const auto dir = std::filesystem::temp_directory_path() / "converse_synth_test";
    std::filesystem::remove_all(dir);
    synth::write_world(dir, w, cfg);
    for (const char* f : {"amt.jsonl", "dialogues.jsonl", "world.json", "store/index.json"})
      CHECK(std::filesystem::exists(dir / f));
    CHECK(DialogueLog::read(dir / "dialogues.jsonl").size() == 10);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("config validation") {
    nlohmann::json j = {{"models", nlohmann::json::array()}};
    CHECK_THROWS_AS(synth::SynthConfig::from_json(j, {}), InvalidArgument);
    const auto c = synth::SynthConfig::from_json({{"seed", 9}, {"dialogues", 3}}, {});
    CHECK(c.seed == 9);
    CHECK(c.dialogues == 3);
  }
}
