#include "converse/mlp.hpp"

#include <cmath>

#include "converse/error.hpp"

namespace converse {

struct SoftmaxMlp::Views {
  Eigen::Map<const Matrix> w1;
  Eigen::Map<const Vector> b1;
  Eigen::Map<const Matrix> w2;
  Eigen::Map<const Vector> b2;
  Eigen::Map<const Matrix> w3;
  Eigen::Map<const Vector> b3;
};

namespace {

std::size_t param_count(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out) {
  return h1 * in + h1 + h2 * h1 + h2 + out * h2 + out;
}

Matrix column_softmax(Matrix z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    z.col(j).array() -= z.col(j).maxCoeff();
    z.col(j) = z.col(j).array().exp();
    z.col(j) /= z.col(j).sum();
  }
  return z;
}

}  // namespace

SoftmaxMlp::SoftmaxMlp(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out)
    : in_(in), h1_(h1), h2_(h2), out_(out),
      theta_(Vector::Zero(static_cast<Eigen::Index>(param_count(in, h1, h2, out)))) {
  if (in == 0 || h1 == 0 || h2 == 0 || out < 2) throw InvalidArgument("bad MLP shape");
}

SoftmaxMlp::SoftmaxMlp(std::size_t in, std::size_t h1, std::size_t h2, std::size_t out, Rng& rng)
    : SoftmaxMlp(in, h1, h2, out) {
  const auto fill = [&](std::size_t offset, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t i = 0; i < fan_in * fan_out; ++i)
      theta_[static_cast<Eigen::Index>(offset + i)] = u(rng);
  };
  fill(0, in_, h1_);
  fill(h1_ * in_ + h1_, h1_, h2_);
}

SoftmaxMlp::Views SoftmaxMlp::views() const {
  const double* p = theta_.data();
  const auto i = static_cast<Eigen::Index>(in_), a = static_cast<Eigen::Index>(h1_),
             b = static_cast<Eigen::Index>(h2_), o = static_cast<Eigen::Index>(out_);
  const double* w1 = p;
  const double* b1 = w1 + a * i;
  const double* w2 = b1 + a;
  const double* b2 = w2 + b * a;
  const double* w3 = b2 + b;
  const double* b3 = w3 + o * b;
  return {{w1, a, i}, {b1, a}, {w2, b, a}, {b2, b}, {w3, o, b}, {b3, o}};
}

Vector SoftmaxMlp::probs(const Vector& x) const { return probs_batch(x).col(0); }

Matrix SoftmaxMlp::probs_batch(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != in_) throw LayoutMismatch("MLP input dimension mismatch");
  const auto v = views();
  const Matrix a1 = ((v.w1 * x).colwise() + v.b1).cwiseMax(0.0);
  const Matrix a2 = ((v.w2 * a1).colwise() + v.b2).cwiseMax(0.0);
  return column_softmax((v.w3 * a2).colwise() + v.b3);
}

double SoftmaxMlp::loss_and_grad(const Matrix& x, const std::vector<int>& labels, Vector& grad) const {
  if (static_cast<std::size_t>(x.rows()) != in_) throw LayoutMismatch("MLP input dimension mismatch");
  if (static_cast<std::size_t>(x.cols()) != labels.size() || labels.empty())
    throw InvalidArgument("labels do not match batch");
  const auto v = views();
  const Matrix a1 = ((v.w1 * x).colwise() + v.b1).cwiseMax(0.0);
  const Matrix a2 = ((v.w2 * a1).colwise() + v.b2).cwiseMax(0.0);
  const Matrix p = column_softmax((v.w3 * a2).colwise() + v.b3);
  const double n = static_cast<double>(labels.size());

  double loss = 0.0;
  Matrix d3 = p;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    if (labels[j] < 0 || static_cast<std::size_t>(labels[j]) >= out_)
      throw InvalidArgument("label out of range");
    loss -= std::log(std::max(p(labels[j], c), 1e-300));
    d3(labels[j], c) -= 1.0;
  }
  d3 /= n;
  const Matrix d2 = (v.w3.transpose() * d3).cwiseProduct((a2.array() > 0).cast<double>().matrix());
  const Matrix d1 = (v.w2.transpose() * d2).cwiseProduct((a1.array() > 0).cast<double>().matrix());

  grad.resize(theta_.size());
  double* g = grad.data();
  const auto put = [&](const Matrix& m) {
    std::copy(m.data(), m.data() + m.size(), g);
    g += m.size();
  };
  put(d1 * x.transpose());
  put(d1.rowwise().sum());
  put(d2 * a1.transpose());
  put(d2.rowwise().sum());
  put(d3 * a2.transpose());
  put(d3.rowwise().sum());
  return loss / n;
}

nlohmann::json SoftmaxMlp::to_json() const {
  return {{"shape", {in_, h1_, h2_, out_}},
          {"params", std::vector<double>(theta_.data(), theta_.data() + theta_.size())}};
}

SoftmaxMlp SoftmaxMlp::from_json(const nlohmann::json& j) {
  const auto s = j.at("shape").get<std::vector<std::size_t>>();
  if (s.size() != 4) throw SchemaError("MLP shape needs four entries");
  SoftmaxMlp m(s[0], s[1], s[2], s[3]);
  const auto p = j.at("params").get<std::vector<double>>();
  if (p.size() != static_cast<std::size_t>(m.theta_.size())) throw LayoutMismatch("MLP parameter count");
  std::copy(p.begin(), p.end(), m.theta_.data());
  return m;
}

FlatAdam::FlatAdam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps),
      m_(Vector::Zero(static_cast<Eigen::Index>(n))), v_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

void FlatAdam::step(Vector& theta, const Vector& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  m_ = b1_ * m_ + (1 - b1_) * grad;
  v_ = b2_ * v_ + (1 - b2_) * grad.cwiseProduct(grad);
  theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace converse
