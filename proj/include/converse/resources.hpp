#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "converse/text.hpp"

namespace converse {

struct CorpusItem {
  std::string text;
  std::optional<WordSet> keywords;
  std::string source;
};

struct Corpus {
  std::vector<CorpusItem> items;

  std::size_t size() const { return items.size(); }
  /// Throws InvalidArgument unless non-empty with non-empty texts.
  void validate() const;

  /// JSON lines: {"text": ..., "keywords": [...]?, "source": ...}.
  static Corpus load_jsonl(const std::filesystem::path& path);
  void save_jsonl(const std::filesystem::path& path) const;
  static Corpus from_texts(const std::vector<std::string>& texts, const std::string& source);
};

struct Story {
  std::string title;
  std::string body;
  std::string author;
};

/// Placeholder inside initiator phrases that is replaced by a fact.
inline constexpr const char* kFactSlot = "<fact>";

/// Bundled corpora and phrase lists used by the default ensemble.
namespace bundled {

const std::vector<std::string>& facts();
const std::vector<std::string>& trump_quotes();
const std::vector<std::string>& got_quotes();
const std::vector<std::string>& subtitle_replies();
const std::vector<std::string>& escape_responses();   // 35 entries
const std::vector<std::string>& initiator_phrases();  // 40 entries
const std::vector<Story>& stories();
const std::vector<std::string>& trump_triggers();
const std::vector<std::string>& got_triggers();

/// Offline question-answering and web-search fixtures (query -> answer/snippets).
const std::map<std::string, std::string>& qa_fixture();
const std::map<std::string, std::vector<std::string>>& search_fixture();

/// Every word appearing in the bundled resources and lexicons.
std::vector<std::string> vocabulary();

}  // namespace bundled

}  // namespace converse
