#pragma once

#include <string>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/ensemble.hpp"
#include "converse/features.hpp"
#include "converse/policy.hpp"
#include "json.hpp"

namespace converse {

struct ManagerConfig {
  double asr_threshold = 0.3;
  std::vector<std::string> precedence = {"Storybot", "Evibot", "Initiatorbot", "Alicebot"};
  std::string repeat_phrase = "Sorry, could you repeat that?";

  nlohmann::json to_json() const;
  static ManagerConfig from_json(const nlohmann::json& j, ManagerConfig base);
};

struct ManagerResult {
  Utterance response;
  SelectionRecord selection;  // empty for the repeat request
  std::vector<double> scores;  // policy-side scores per candidate, when available
};

/// One system turn: ASR gate, then the priority override, then the policy.
/// A missing ASR confidence counts as 1.
ManagerResult manager_step(const Dialogue& dialogue, const ResponseEnsemble& ensemble,
                           const FeatureExtractor& extractor, const Policy& policy,
                           const ManagerConfig& config, Rng& rng);

/// Appends the response and, when non-empty, its selection record.
void apply(Dialogue& dialogue, const ManagerResult& result);

}  // namespace converse
