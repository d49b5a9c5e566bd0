#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <string>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/reward.hpp"
#include "converse/scoring.hpp"
#include "json.hpp"

namespace converse {

inline constexpr int kDialogueSchemaVersion = 1;

nlohmann::json to_json(const Utterance& u);
nlohmann::json to_json(const CandidateResponse& c);
nlohmann::json to_json(const SelectionRecord& s);
nlohmann::json to_json(const Dialogue& d);
Utterance utterance_from_json(const nlohmann::json& j);
CandidateResponse candidate_from_json(const nlohmann::json& j);
SelectionRecord selection_from_json(const nlohmann::json& j);
/// Parses and validates; throws InvalidArgument or json exceptions.
Dialogue dialogue_from_json(const nlohmann::json& j);

/// Append-only JSONL store of dialogues; appends are serialised by a mutex.
class DialogueLog {
 public:
  explicit DialogueLog(std::filesystem::path path);
  void append(const Dialogue& d);
  const std::filesystem::path& path() const { return path_; }

  /// Reads every line; SchemaError carries the offending line number.
  static std::vector<Dialogue> read(const std::filesystem::path& path);
  static std::vector<Dialogue> read(std::istream& in);
  static void write(const std::filesystem::path& path, const std::vector<Dialogue>& dialogues);

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

/// One crowd-sourced rating line.
struct AMTRecord {
  std::string dialogue_id;
  AMTExample example;
};

nlohmann::json to_json(const AMTRecord& r);
AMTRecord amt_record_from_json(const nlohmann::json& j);

struct AMTSplits {
  std::vector<AMTExample> train, dev, test;
};

enum class Split { Train, Dev, Test };
/// 70/12/18 by a hash of the dialogue id, so a context never straddles splits.
Split split_of(const std::string& dialogue_id);

AMTSplits ingest_amt(const std::filesystem::path& path, const Nlu& nlu = Nlu());
AMTSplits ingest_amt(std::istream& in, const Nlu& nlu = Nlu());
void write_amt(const std::filesystem::path& path, const std::vector<AMTRecord>& records);

std::vector<RewardExample> read_reward_examples(const std::filesystem::path& path);
void write_reward_examples(const std::filesystem::path& path, const std::vector<RewardExample>& data);

/// Calls `fn(json, line_number)` for each non-blank line; wraps parse errors in SchemaError.
void for_each_jsonl(std::istream& in, const std::function<void(const nlohmann::json&, std::size_t)>& fn);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace converse
