#pragma once

#include <map>
#include <string>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/features.hpp"
#include "converse/io.hpp"
#include "converse/mdp.hpp"
#include "json.hpp"

namespace converse::synth {

/// Label = 1 + 2 * [content overlap] + number of similarity thresholds passed.
struct PlantedRule {
  std::size_t similarity_index = 0;  // feature offset of the response/last-user average similarity
  std::size_t overlap_index = 0;     // feature offset of the content-overlap bit
  double low = 0.0, high = 0.0;      // similarity thresholds

  int label(const Vector& x) const;
  nlohmann::json to_json() const;
  static PlantedRule from_json(const nlohmann::json& j);
};

/// How often a synthetic model stays on topic or answers generically.
struct ModelProfile {
  std::string model_id;
  double on_topic = 0.0;
  double generic = 0.0;
};

struct SynthConfig {
  std::size_t contexts = 600;               // AMT contexts
  std::size_t store_contexts = 300;         // histories for the simulator store
  std::size_t dialogues = 200;              // logged conversations
  std::size_t max_system_turns = 6;
  double label_noise = 0.1;
  std::vector<ModelProfile> models = default_profiles();
  std::uint64_t seed = 0;

  static std::vector<ModelProfile> default_profiles();
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j, SynthConfig base);
};

/// A random user-initiated context of 1..3 user turns.
Dialogue random_context(Rng& rng, std::size_t max_user_turns = 3);
/// A synthetic response in the style of one profile.
CandidateResponse random_candidate(const Dialogue& context, const ModelProfile& profile, Rng& rng);
/// One candidate per profile, in profile order.
std::vector<CandidateResponse> candidates_for(const Dialogue& context, const std::vector<ModelProfile>& profiles,
                                              Rng& rng);

/// Similarity thresholds at the terciles of the generated candidates.
PlantedRule fit_rule(const FeatureLayout& layout, const std::vector<Vector>& sample);

/// Class distribution of the planted rule: all mass on the planted label.
class PlantedOutcome : public OutcomeModel {
 public:
  explicit PlantedOutcome(PlantedRule rule) : rule_(rule) {}
  Vector class_probs(const HistoryRecord& record, std::size_t action) const override;
  const PlantedRule& rule() const { return rule_; }

 private:
  PlantedRule rule_;
};

struct PlantedWorld {
  PlantedRule rule;
  std::vector<AMTRecord> amt;        // planted labels with noise
  std::vector<Dialogue> dialogues;   // random-behaviour logs with final scores
  HistoryStore store;                // synthetic candidates, cached features
  std::vector<std::string> heuristic_preference;  // models by mean planted label, best first
};

PlantedWorld make_world(const FeatureExtractor& extractor, const SynthConfig& config);

/// Writes amt.jsonl, dialogues.jsonl, store/ and world.json into `dir`.
void write_world(const std::filesystem::path& dir, const PlantedWorld& world, const SynthConfig& config);

}  // namespace converse::synth
