#pragma once

#include <initializer_list>
#include <string>
#include <utility>

#include "converse/dialogue.hpp"
#include "converse/features.hpp"

namespace testutil {

/// Alternating dialogue starting with the user.
inline converse::Dialogue user_first(std::initializer_list<std::string> texts,
                                     std::string id = "d") {
  converse::Dialogue d;
  d.id = std::move(id);
  bool user = true;
  for (const auto& t : texts) {
    d.turns.push_back(user ? converse::Utterance::user(t) : converse::Utterance::system(t));
    user = !user;
  }
  return d;
}

inline converse::Dialogue said(const std::string& text) { return user_first({text}); }

inline converse::FeatureLayout small_layout(std::size_t dim = 4) {
  converse::FeatureConfig c;
  c.embedding_dim = dim;
  c.model_ids = {"A", "B", "C"};
  c.pos_buckets = 4;
  c.unigrams = {"i", "you"};
  return converse::FeatureLayout(c);
}

}  // namespace testutil
