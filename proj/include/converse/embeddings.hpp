#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace converse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Word -> dense vector of a fixed dimension. Unknown words map to zero.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim), zero_(Vector::Zero(dim)) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& word) const { return vectors_.count(word) > 0; }

  void insert(const std::string& word, Vector v);
  const Vector& lookup(const std::string& word) const;

  /// Unweighted mean over in-vocabulary tokens; zero when none are known.
  Vector mean(const std::vector<std::string>& tokens) const;

  /// Text table, one "word<TAB>v1 v2 ... vd" entry per line.
  static EmbeddingTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Deterministic pseudo-random vectors derived from a hash of each word.
  static EmbeddingTable hashed(const std::vector<std::string>& vocabulary, std::size_t dim,
                               std::uint64_t seed = 0);

  std::vector<std::string> words() const;  // sorted

 private:
  std::size_t dim_;
  Vector zero_;
  std::unordered_map<std::string, Vector> vectors_;
};

/// Cosine similarity; zero when either side has zero norm.
double cosine(const Vector& a, const Vector& b);

}  // namespace converse
