#include "converse/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "converse/error.hpp"
#include "converse/text.hpp"

namespace converse {

void EmbeddingTable::insert(const std::string& word, Vector v) {
  if (static_cast<std::size_t>(v.size()) != dim_)
    throw InvalidArgument("embedding for '" + word + "' has dimension " +
                          std::to_string(v.size()) + ", expected " + std::to_string(dim_));
  vectors_[word] = std::move(v);
}

const Vector& EmbeddingTable::lookup(const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? zero_ : it->second;
}

Vector EmbeddingTable::mean(const std::vector<std::string>& tokens) const {
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(dim_));
  std::size_t n = 0;
  for (const auto& t : tokens) {
    auto it = vectors_.find(t);
    if (it == vectors_.end()) continue;
    acc += it->second;
    ++n;
  }
  if (n > 0) acc /= static_cast<double>(n);
  return acc;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open embedding table " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::optional<EmbeddingTable> table;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw SchemaError("missing TAB separator", line_no);
    const std::string word = line.substr(0, tab);
    std::istringstream ss(line.substr(tab + 1));
    std::vector<double> values;
    double v = 0;
    while (ss >> v) values.push_back(v);
    if (values.empty()) throw SchemaError("no vector components", line_no);
    if (!table) table.emplace(values.size());
    if (values.size() != table->dim())
      throw SchemaError("inconsistent embedding dimension", line_no);
    table->insert(word, Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  if (!table) throw SchemaError("empty embedding table");
  return std::move(*table);
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& w : words()) {
    const auto& v = vectors_.at(w);
    out << w << '\t';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
    out << '\n';
  }
}

EmbeddingTable EmbeddingTable::hashed(const std::vector<std::string>& vocabulary, std::size_t dim,
                                      std::uint64_t seed) {
  EmbeddingTable table(dim);
  for (const auto& w : vocabulary) {
    if (table.contains(w)) continue;
    std::mt19937_64 rng(text::fnv1a(w) ^ (seed * 0x9e3779b97f4a7c15ull));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    table.insert(w, std::move(v));
  }
  return table;
}

std::vector<std::string> EmbeddingTable::words() const {
  std::vector<std::string> out;
  out.reserve(vectors_.size());
  for (const auto& [w, _] : vectors_) out.push_back(w);
  std::sort(out.begin(), out.end());
  return out;
}

double cosine(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace converse
