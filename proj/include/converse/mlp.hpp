#pragma once

#include <vector>

#include "converse/dialogue.hpp"
#include "converse/embeddings.hpp"
#include "json.hpp"

namespace converse {

/// Two ReLU hidden layers followed by a softmax. A zero output layer yields
/// exactly uniform probabilities.
class SoftmaxMlp {
 public:
  SoftmaxMlp() = default;
  /// All-zero parameters (uniform output).
  SoftmaxMlp(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out);
  /// Glorot-uniform hidden layers, zero output layer.
  SoftmaxMlp(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out, Rng& rng);

  std::size_t input_dim() const { return in_; }
  std::size_t output_dim() const { return out_; }

  Vector probs(const Vector& x) const;
  /// Columns of x are inputs; returns class probabilities as columns.
  Matrix probs_batch(const Matrix& x) const;
  /// Mean cross-entropy over the batch and its gradient wrt the flat parameters.
  double loss_and_grad(const Matrix& x, const std::vector<int>& labels, Vector& grad) const;

  Vector& params() { return theta_; }
  const Vector& params() const { return theta_; }

  nlohmann::json to_json() const;
  static SoftmaxMlp from_json(const nlohmann::json& j);

 private:
  struct Views;
  Views views() const;
  std::size_t in_ = 0, h1_ = 0, h2_ = 0, out_ = 0;
  Vector theta_;
};

/// Adam over an arbitrary flat vector.
class FlatAdam {
 public:
  FlatAdam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Vector& theta, const Vector& grad);

 private:
  double lr_, b1_, b2_, eps_;
  Vector m_, v_;
  std::size_t t_ = 0;
};

}  // namespace converse
