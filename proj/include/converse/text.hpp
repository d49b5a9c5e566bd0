#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace converse {

using WordSet = std::unordered_set<std::string>;

namespace text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits on anything that is not a letter, digit or apostrophe. Case kept.
std::vector<std::string> tokenize_raw(std::string_view s);
/// tokenize_raw followed by lower-casing. The tokenizer used everywhere else.
std::vector<std::string> tokenize(std::string_view s);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
bool starts_with_word(const std::vector<std::string>& tokens, std::string_view word);
bool contains_any(const std::vector<std::string>& tokens, const WordSet& words);
/// Case-insensitive substring test on word boundaries.
bool contains_phrase(std::string_view haystack, std::string_view phrase);

/// One word per line; blank lines and lines starting with '#' ignored; lower-cased.
WordSet load_word_list(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 1469598103934665603ull);

}  // namespace text

/// The bundled word lists used by the classifiers and feature extractor.
/// Every list can be replaced from a file.
struct Lexicon {
  WordSet stopwords;
  WordSet wh_words;
  WordSet intensifiers;
  WordSet negations;
  WordSet profanity;
  WordSet confusion_words;
  WordSet political_keywords;
  WordSet positive_words;
  WordSet negative_words;
  WordSet request_verbs;

  static const Lexicon& bundled();
};

}  // namespace converse
