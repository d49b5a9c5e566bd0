#include "converse/io.hpp"

#include <fstream>
#include <sstream>

#include "converse/error.hpp"
#include "converse/text.hpp"

namespace converse {

nlohmann::json to_json(const Utterance& u) {
  nlohmann::json j = {{"speaker", to_string(u.speaker)}, {"text", u.text}};
  if (u.asr_confidence) j["asr_confidence"] = *u.asr_confidence;
  return j;
}

nlohmann::json to_json(const CandidateResponse& c) {
  nlohmann::json j = {{"model_id", c.model_id}, {"text", c.text}, {"priority", c.priority}};
  if (c.confidence) j["confidence"] = *c.confidence;
  return j;
}

nlohmann::json to_json(const SelectionRecord& s) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : s.candidates) cands.push_back(to_json(c));
  nlohmann::json j = {{"candidates", cands},
                      {"chosen_index", s.chosen_index},
                      {"was_priority", s.was_priority},
                      {"turn_index", s.turn_index}};
  if (s.policy_distribution) j["policy_distribution"] = *s.policy_distribution;
  return j;
}

nlohmann::json to_json(const Dialogue& d) {
  nlohmann::json turns = nlohmann::json::array(), sels = nlohmann::json::array();
  for (const auto& u : d.turns) turns.push_back(to_json(u));
  for (const auto& s : d.selections) sels.push_back(to_json(s));
  nlohmann::json j = {{"v", kDialogueSchemaVersion}, {"id", d.id},        {"policy_id", d.policy_id},
                      {"turns", turns},              {"selections", sels}};
  j["final_score"] = d.final_score ? nlohmann::json(*d.final_score) : nlohmann::json(nullptr);
  return j;
}

Utterance utterance_from_json(const nlohmann::json& j) {
  Utterance u;
  u.speaker = speaker_from_string(j.at("speaker").get<std::string>());
  u.text = j.at("text").get<std::string>();
  if (j.contains("asr_confidence") && !j["asr_confidence"].is_null())
    u.asr_confidence = j["asr_confidence"].get<double>();
  return u;
}

CandidateResponse candidate_from_json(const nlohmann::json& j) {
  CandidateResponse c;
  c.model_id = j.at("model_id").get<std::string>();
  c.text = j.at("text").get<std::string>();
  c.priority = j.value("priority", false);
  if (j.contains("confidence") && !j["confidence"].is_null()) c.confidence = j["confidence"].get<double>();
  return c;
}

SelectionRecord selection_from_json(const nlohmann::json& j) {
  SelectionRecord s;
  for (const auto& c : j.at("candidates")) s.candidates.push_back(candidate_from_json(c));
  s.chosen_index = j.value("chosen_index", std::size_t{0});
  s.was_priority = j.value("was_priority", false);
  s.turn_index = j.value("turn_index", std::size_t{0});
  if (j.contains("policy_distribution") && !j["policy_distribution"].is_null())
    s.policy_distribution = j["policy_distribution"].get<std::vector<double>>();
  return s;
}

Dialogue dialogue_from_json(const nlohmann::json& j) {
  if (j.contains("v") && j["v"].get<int>() != kDialogueSchemaVersion)
    throw InvalidArgument("unsupported dialogue schema version");
  Dialogue d;
  d.id = j.value("id", "");
  d.policy_id = j.value("policy_id", "");
  for (const auto& u : j.at("turns")) d.turns.push_back(utterance_from_json(u));
  if (j.contains("selections"))
    for (const auto& s : j["selections"]) d.selections.push_back(selection_from_json(s));
  if (j.contains("final_score") && !j["final_score"].is_null())
    d.final_score = j["final_score"].get<double>();
  validate(d);
  return d;
}

void for_each_jsonl(std::istream& in,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("malformed JSON: ") + e.what(), n);
    }
    try {
      fn(j, n);
    } catch (const SchemaError&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(e.what(), n);
    } catch (const Error& e) {
      throw SchemaError(e.what(), n);
    }
  }
}

DialogueLog::DialogueLog(std::filesystem::path path) : path_(std::move(path)) {}

void DialogueLog::append(const Dialogue& d) {
  validate(d);
  const std::string line = to_json(d).dump() + "\n";
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw InvalidArgument("cannot append to " + path_.string());
  out << line;
}

std::vector<Dialogue> DialogueLog::read(std::istream& in) {
  std::vector<Dialogue> out;
  for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) { out.push_back(dialogue_from_json(j)); });
  return out;
}

std::vector<Dialogue> DialogueLog::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read(in);
}

void DialogueLog::write(const std::filesystem::path& path, const std::vector<Dialogue>& dialogues) {
  std::ostringstream s;
  for (const auto& d : dialogues) s << to_json(d).dump() << '\n';
  write_text(path, s.str());
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const AMTRecord& r) {
  nlohmann::json ctx = nlohmann::json::array();
  for (const auto& u : r.example.context.turns) ctx.push_back(to_json(u));
  return {{"dialogue_id", r.dialogue_id},
          {"context", ctx},
          {"candidate", r.example.candidate.text},
          {"model_id", r.example.candidate.model_id},
          {"label", r.example.label}};
}

AMTRecord amt_record_from_json(const nlohmann::json& j) {
  AMTRecord r;
  for (const auto& u : j.at("context")) r.example.context.turns.push_back(utterance_from_json(u));
  if (r.example.context.turns.empty()) throw InvalidArgument("empty AMT context");
  r.example.candidate.text = j.at("candidate").get<std::string>();
  r.example.candidate.model_id = j.at("model_id").get<std::string>();
  r.example.label = j.at("label").get<int>();
  if (j.contains("dialogue_id")) {
    r.dialogue_id = j["dialogue_id"].get<std::string>();
  } else {
    std::string key;
    for (const auto& u : r.example.context.turns) key += u.text + "\n";
    r.dialogue_id = std::to_string(text::fnv1a(key));
  }
  r.example.context.id = r.dialogue_id;
  validate(r.example.context);
  validate(r.example.candidate);
  return r;
}

Split split_of(const std::string& dialogue_id) {
  const auto b = text::fnv1a(dialogue_id) % 100;
  if (b < 70) return Split::Train;
  if (b < 82) return Split::Dev;
  return Split::Test;
}

AMTSplits ingest_amt(std::istream& in, const Nlu& nlu) {
  std::vector<AMTRecord> records;
  for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
    records.push_back(amt_record_from_json(j));
    const int label = records.back().example.label;
    if (label < 1 || label > 5) throw InvalidArgument("label outside 1..5");
  });
  if (records.empty()) throw SchemaError("AMT file has no records", 0);
  std::vector<AMTExample> examples;
  for (const auto& r : records) examples.push_back(r.example);
  examples = preprocess_labels(std::move(examples), nlu);
  AMTSplits out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (split_of(records[i].dialogue_id)) {
      case Split::Train: out.train.push_back(examples[i]); break;
      case Split::Dev: out.dev.push_back(examples[i]); break;
      case Split::Test: out.test.push_back(examples[i]); break;
    }
  }
  return out;
}

AMTSplits ingest_amt(const std::filesystem::path& path, const Nlu& nlu) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return ingest_amt(in, nlu);
}

void write_amt(const std::filesystem::path& path, const std::vector<AMTRecord>& records) {
  std::ostringstream s;
  for (const auto& r : records) s << to_json(r).dump() << '\n';
  write_text(path, s.str());
}

std::vector<RewardExample> read_reward_examples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<RewardExample> out;
  for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
    out.push_back(reward_example_from_json(j));
  });
  return out;
}

void write_reward_examples(const std::filesystem::path& path, const std::vector<RewardExample>& data) {
  std::ostringstream s;
  for (const auto& e : data) s << to_json(e).dump() << '\n';
  write_text(path, s.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace converse
