#include "converse/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include "converse/error.hpp"

namespace converse {

std::string to_string(ParamBlock b) {
  static const char* names[] = {"W1", "b1", "W2", "b2", "W3", "b3", "out_class", "out_skip",
                                "out_bias"};
  return names[static_cast<std::size_t>(b)];
}

ParamMask ParamMask::all() {
  ParamMask m;
  m.on.fill(true);
  return m;
}
ParamMask ParamMask::none() { return ParamMask{}; }
ParamMask ParamMask::of(std::initializer_list<ParamBlock> blocks) {
  ParamMask m;
  for (auto b : blocks) m.on[static_cast<std::size_t>(b)] = true;
  return m;
}
ParamMask ParamMask::supervised() {
  return of({ParamBlock::W1, ParamBlock::B1, ParamBlock::W2, ParamBlock::B2, ParamBlock::W3,
             ParamBlock::B3});
}
ParamMask ParamMask::reinforce() { return of({ParamBlock::W2, ParamBlock::B2}); }
ParamMask ParamMask::qlearning() {
  return of({ParamBlock::OutClass, ParamBlock::OutSkip, ParamBlock::OutBias});
}

// ---------------------------------------------------------------------------

ScoringNet::ScoringNet(FeatureLayout layout, std::size_t h1, std::size_t h2)
    : layout_(std::move(layout)), h1_(h1), h2_(h2) {
  if (h1 == 0 || h2 == 0) throw InvalidArgument("hidden sizes must be positive");
  compute_offsets();
  theta_ = Vector::Zero(static_cast<Eigen::Index>(offsets_.back()));
  reset_head();
}

ScoringNet::ScoringNet(FeatureLayout layout, std::size_t h1, std::size_t h2, Rng& rng)
    : ScoringNet(std::move(layout), h1, h2) {
  const auto glorot = [&](Eigen::Map<Matrix> w) {
    const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-s, s);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
  };
  glorot(W1());
  glorot(W2());
  glorot(W3());
}

void ScoringNet::compute_offsets() {
  const std::size_t d = input_dim();
  const std::array<std::size_t, kNumParamBlocks> sizes = {
      h1_ * d, h1_, h2_ * h1_, h2_, kNumClasses * h2_, kNumClasses, kNumClasses, h2_, 1};
  offsets_[0] = 0;
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) offsets_[i + 1] = offsets_[i] + sizes[i];
}

void ScoringNet::reset_head() {
  for (std::size_t k = 0; k < kNumClasses; ++k) out_class()[static_cast<Eigen::Index>(k)] = double(k + 1);
  out_skip().setZero();
  set_out_bias(0.0);
}

std::pair<std::size_t, std::size_t> ScoringNet::block_range(ParamBlock b) const {
  const auto i = static_cast<std::size_t>(b);
  return {offsets_[i], offsets_[i + 1] - offsets_[i]};
}

Eigen::Map<const Matrix> ScoringNet::cmat(ParamBlock b, std::size_t r, std::size_t c) const {
  return {theta_.data() + block_range(b).first, static_cast<Eigen::Index>(r),
          static_cast<Eigen::Index>(c)};
}
Eigen::Map<const Vector> ScoringNet::cvec(ParamBlock b) const {
  const auto [o, n] = block_range(b);
  return {theta_.data() + o, static_cast<Eigen::Index>(n)};
}
Eigen::Map<Matrix> ScoringNet::mat(ParamBlock b, std::size_t r, std::size_t c) {
  return {theta_.data() + block_range(b).first, static_cast<Eigen::Index>(r),
          static_cast<Eigen::Index>(c)};
}
Eigen::Map<Vector> ScoringNet::vec(ParamBlock b) {
  const auto [o, n] = block_range(b);
  return {theta_.data() + o, static_cast<Eigen::Index>(n)};
}

void ScoringNet::set_out_bias(double v) {
  theta_[static_cast<Eigen::Index>(block_range(ParamBlock::OutBias).first)] = v;
}

void ScoringNet::check_input(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim())
    throw LayoutMismatch("feature vector has dimension " + std::to_string(x.size()) +
                         ", net expects " + std::to_string(input_dim()));
}

ForwardCache ScoringNet::forward_batch(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim())
    throw LayoutMismatch("feature matrix has " + std::to_string(x.rows()) + " rows, net expects " +
                         std::to_string(input_dim()));
  ForwardCache c;
  c.pre1 = W1() * x;
  c.pre1.colwise() += b1();
  c.a1 = c.pre1.cwiseMax(0.0);
  c.a2 = W2() * c.a1;
  c.a2.colwise() += b2();
  Matrix z = W3() * c.a2;
  z.colwise() += b3();
  c.probs.resize(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double mx = z.col(j).maxCoeff();
    const Vector e = (z.col(j).array() - mx).exp().matrix();
    c.probs.col(j) = e / e.sum();
  }
  c.scores = (c.probs.transpose() * out_class()) + (c.a2.transpose() * out_skip());
  c.scores.array() += out_bias();
  return c;
}

ForwardResult ScoringNet::forward(const Vector& x) const {
  check_input(x);
  ForwardCache c = forward_batch(x);
  return {c.probs.col(0), c.scores[0], c.a2.col(0)};
}

void ScoringNet::backward_batch(const Matrix& x, const ForwardCache& c, const Matrix& g_logits,
                                const Vector& g_score, Vector& grad) const {
  if (grad.size() != theta_.size()) grad = Vector::Zero(theta_.size());
  const auto gmat = [&](ParamBlock b, Eigen::Index r, Eigen::Index cols) {
    return Eigen::Map<Matrix>(grad.data() + block_range(b).first, r, cols);
  };
  const auto gvec = [&](ParamBlock b) {
    const auto [o, n] = block_range(b);
    return Eigen::Map<Vector>(grad.data() + o, static_cast<Eigen::Index>(n));
  };
  const auto h1 = static_cast<Eigen::Index>(h1_);
  const auto h2 = static_cast<Eigen::Index>(h2_);
  const auto k = static_cast<Eigen::Index>(kNumClasses);

  // d score / d logits = p * (c - c.p)
  const Eigen::RowVectorXd expected = out_class().transpose() * c.probs;
  Matrix gz = g_logits;
  for (Eigen::Index j = 0; j < c.probs.cols(); ++j) {
    if (g_score[j] == 0.0) continue;
    gz.col(j).array() +=
        g_score[j] * c.probs.col(j).array() * (out_class().array() - expected[j]);
  }
  gmat(ParamBlock::W3, k, h2).noalias() += gz * c.a2.transpose();
  gvec(ParamBlock::B3) += gz.rowwise().sum();
  gvec(ParamBlock::OutClass).noalias() += c.probs * g_score;
  gvec(ParamBlock::OutSkip).noalias() += c.a2 * g_score;
  grad[static_cast<Eigen::Index>(block_range(ParamBlock::OutBias).first)] += g_score.sum();

  Matrix ga2 = W3().transpose() * gz;
  ga2.noalias() += out_skip() * g_score.transpose();
  gmat(ParamBlock::W2, h2, h1).noalias() += ga2 * c.a1.transpose();
  gvec(ParamBlock::B2) += ga2.rowwise().sum();

  Matrix ga1 = W2().transpose() * ga2;
  ga1.array() *= (c.pre1.array() > 0.0).cast<double>();
  gmat(ParamBlock::W1, h1, static_cast<Eigen::Index>(input_dim())).noalias() += ga1 * x.transpose();
  gvec(ParamBlock::B1) += ga1.rowwise().sum();
}

Vector ScoringNet::backward(const Vector& x, const Vector& g_logits, double g_score) const {
  check_input(x);
  const ForwardCache c = forward_batch(x);
  Vector grad = Vector::Zero(theta_.size());
  Vector gs(1);
  gs[0] = g_score;
  backward_batch(x, c, g_logits, gs, grad);
  return grad;
}

std::uint64_t ScoringNet::block_hash(ParamBlock b) const {
  const auto [o, n] = block_range(b);
  const auto* p = reinterpret_cast<const char*>(theta_.data() + o);
  return text::fnv1a(std::string_view(p, n * sizeof(double)));
}

nlohmann::json ScoringNet::to_json() const {
  nlohmann::json params;
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    const auto b = static_cast<ParamBlock>(i);
    const auto [o, n] = block_range(b);
    params[to_string(b)] = std::vector<double>(theta_.data() + o, theta_.data() + o + n);
  }
  return {{"format", "converse.scoring_net"},
          {"version", 1},
          {"h1", h1_},
          {"h2", h2_},
          {"layout", layout_.to_json()},
          {"params", params}};
}

ScoringNet ScoringNet::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "converse.scoring_net")
    throw InvalidArgument("not a scoring-net file");
  ScoringNet net(FeatureLayout::from_json(j.at("layout")), j.at("h1").get<std::size_t>(),
                 j.at("h2").get<std::size_t>());
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    const auto b = static_cast<ParamBlock>(i);
    const auto v = j.at("params").at(to_string(b)).get<std::vector<double>>();
    const auto [o, n] = net.block_range(b);
    if (v.size() != n) throw LayoutMismatch("parameter block " + to_string(b) + " has wrong size");
    std::copy(v.begin(), v.end(), net.theta_.data() + o);
  }
  return net;
}

void ScoringNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

ScoringNet ScoringNet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

Vector mask_vector(const ScoringNet& net, const ParamMask& mask) {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    if (!mask.on[i]) continue;
    const auto [o, n] = net.block_range(static_cast<ParamBlock>(i));
    m.segment(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(n)).setOnes();
  }
  return m;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps),
      m_(Vector::Zero(static_cast<Eigen::Index>(n))),
      v_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(ScoringNet& net, const Vector& grad, const ParamMask& mask) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  Vector& theta = net.params();
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    if (!mask.on[i]) continue;
    const auto [o, n] = net.block_range(static_cast<ParamBlock>(i));
    for (std::size_t q = o; q < o + n; ++q) {
      const auto e = static_cast<Eigen::Index>(q);
      m_[e] = b1_ * m_[e] + (1 - b1_) * grad[e];
      v_[e] = b2_ * v_[e] + (1 - b2_) * grad[e] * grad[e];
      theta[e] -= lr_ * (m_[e] / c1) / (std::sqrt(v_[e] / c2) + eps_);
    }
  }
}

void masked_axpy(ScoringNet& net, double scale, const Vector& grad, const ParamMask& mask) {
  Vector& theta = net.params();
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    if (!mask.on[i]) continue;
    const auto [o, n] = net.block_range(static_cast<ParamBlock>(i));
    // Zero steps are skipped so that a null update is bit-exact (-0.0 stays -0.0).
    for (std::size_t q = o; q < o + n; ++q) {
      const auto e = static_cast<Eigen::Index>(q);
      const double step = scale * grad[e];
      if (step != 0.0) theta[e] += step;
    }
  }
}

// ---------------------------------------------------------------------------
// Labels

std::vector<AMTExample> preprocess_labels(std::vector<AMTExample> data, const Nlu& nlu) {
  static const std::set<std::string> capped_at_four = {"Alicebot", "Elizabot", "VHREDSubtitles",
                                                       "RetrievalSubtitles", "BoWEscapePlan"};
  const auto& stop = nlu.lexicon().stopwords;
  for (auto& ex : data) {
    if (ex.label < 1 || ex.label > 5)
      throw InvalidArgument("AMT label " + std::to_string(ex.label) + " outside 1..5");
    if (capped_at_four.count(ex.candidate.model_id) && ex.label == 5) ex.label = 4;
    const auto toks = text::tokenize(ex.candidate.text);
    const bool stop_only =
        std::all_of(toks.begin(), toks.end(), [&](const std::string& t) { return stop.count(t); });
    if (stop_only) ex.label = std::max(1, ex.label - 1);
    if (ex.candidate.model_id == "BoWMovies") ex.label = std::min(ex.label, 2);
  }
  return data;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"h1", h1},         {"h2", h2},
          {"learning_rate", learning_rate}, {"beta1", beta1},
          {"beta2", beta2},   {"epsilon", epsilon},
          {"l2", l2},         {"batch_size", batch_size},
          {"max_epochs", max_epochs},       {"patience", patience},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  c.h1 = j.value("h1", c.h1);
  c.h2 = j.value("h2", c.h2);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.l2 = j.value("l2", c.l2);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  if (c.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  return c;
}

// ---------------------------------------------------------------------------
// Training

namespace {

Matrix stack_columns(const std::vector<const Vector*>& xs) {
  Matrix m(xs.front()->size(), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = *xs[j];
  return m;
}

template <typename Example, typename Fn>
void for_each_chunk(const std::vector<Example>& data, std::size_t chunk, Fn fn) {
  for (std::size_t s = 0; s < data.size(); s += chunk) {
    std::vector<const Vector*> xs;
    const std::size_t e = std::min(data.size(), s + chunk);
    for (std::size_t i = s; i < e; ++i) xs.push_back(&data[i].x);
    fn(s, e, stack_columns(xs));
  }
}

void add_l2(const ScoringNet& net, double l2, Vector& grad) {
  if (l2 == 0.0) return;
  for (ParamBlock b : {ParamBlock::W1, ParamBlock::W2, ParamBlock::W3}) {
    const auto [o, n] = net.block_range(b);
    const auto so = static_cast<Eigen::Index>(o);
    const auto sn = static_cast<Eigen::Index>(n);
    grad.segment(so, sn) += l2 * net.params().segment(so, sn);
  }
}

}  // namespace

double mean_log_likelihood(const ScoringNet& net, const std::vector<LabeledExample>& data) {
  if (data.empty()) throw EmptySplit("no examples to evaluate");
  double total = 0.0;
  for_each_chunk(data, 512, [&](std::size_t s, std::size_t e, const Matrix& x) {
    const auto c = net.forward_batch(x);
    for (std::size_t i = s; i < e; ++i) {
      const double p = c.probs(data[i].label - 1, static_cast<Eigen::Index>(i - s));
      total += std::log(std::max(p, 1e-300));
    }
  });
  return total / static_cast<double>(data.size());
}

TrainedScorer train_supervised_run(const std::vector<LabeledExample>& train,
                                   const std::vector<LabeledExample>& dev,
                                   const FeatureLayout& layout, const TrainConfig& cfg) {
  if (train.empty()) throw EmptySplit("training split is empty");
  if (dev.empty()) throw EmptySplit("development split is empty");
  for (const auto& ex : train)
    if (ex.label < 1 || ex.label > 5) throw InvalidArgument("label outside 1..5");
  if (static_cast<std::size_t>(train.front().x.size()) != layout.total_dim())
    throw LayoutMismatch("training features do not match the layout");

  Rng init_rng = derive_rng(cfg.seed, 0);
  Rng shuffle_rng = derive_rng(cfg.seed, 1);
  ScoringNet net(layout, cfg.h1, cfg.h2, init_rng);
  Adam adam(net.num_params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  const ParamMask mask = ParamMask::supervised();

  TrainedScorer best{net, cfg.learning_rate, cfg.l2, mean_log_likelihood(net, dev), 0, 0};
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), s + cfg.batch_size);
      std::vector<const Vector*> xs;
      for (std::size_t i = s; i < e; ++i) xs.push_back(&train[order[i]].x);
      const Matrix x = stack_columns(xs);
      const auto cache = net.forward_batch(x);
      const double inv_b = 1.0 / static_cast<double>(e - s);
      Matrix g_logits = cache.probs * inv_b;
      for (std::size_t i = s; i < e; ++i)
        g_logits(train[order[i]].label - 1, static_cast<Eigen::Index>(i - s)) -= inv_b;
      grad.setZero();
      net.backward_batch(x, cache, g_logits, Vector::Zero(x.cols()), grad);
      add_l2(net, cfg.l2, grad);
      adam.step(net, grad, mask);
    }
    best.epochs_run = epoch;
    const double ll = mean_log_likelihood(net, dev);
    if (ll > best.dev_log_likelihood) {
      best.net = net;
      best.dev_log_likelihood = ll;
      best.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return best;
}

TrainedScorer train_supervised(const std::vector<LabeledExample>& train,
                               const std::vector<LabeledExample>& dev, const FeatureLayout& layout,
                               const HyperGrid& grid, const TrainConfig& config) {
  if (grid.learning_rates.empty() || grid.l2.empty()) throw InvalidArgument("empty grid");
  std::optional<TrainedScorer> best;
  for (double lr : grid.learning_rates) {
    for (double l2 : grid.l2) {
      TrainConfig c = config;
      c.learning_rate = lr;
      c.l2 = l2;
      TrainedScorer r = train_supervised_run(train, dev, layout, c);
      if (!best || r.dev_log_likelihood > best->dev_log_likelihood) best = std::move(r);
    }
  }
  return std::move(*best);
}

namespace {

double score_mse(const ScoringNet& net, const std::vector<RegressionExample>& data) {
  double total = 0.0;
  for_each_chunk(data, 512, [&](std::size_t s, std::size_t e, const Matrix& x) {
    const auto c = net.forward_batch(x);
    for (std::size_t i = s; i < e; ++i) {
      const double d = c.scores[static_cast<Eigen::Index>(i - s)] - data[i].target;
      total += d * d;
    }
  });
  return total / static_cast<double>(data.size());
}

}  // namespace

FinetuneResult finetune_learned_reward(const ScoringNet& initial,
                                       const std::vector<RegressionExample>& pairs,
                                       const TrainConfig& cfg, const ParamMask& mask) {
  if (pairs.size() < 2) throw TooFewExamples("fine-tuning needs at least 2 pairs");
  for (const auto& p : pairs) initial.check_input(p.x);
  Rng rng = derive_rng(cfg.seed, 2);
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_hold = std::max<std::size_t>(1, pairs.size() / 5);
  std::vector<RegressionExample> hold, train;
  for (std::size_t i = 0; i < idx.size(); ++i)
    (i < n_hold ? hold : train).push_back(pairs[idx[i]]);

  ScoringNet net = initial;
  Adam adam(net.num_params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  FinetuneResult res{net, {score_mse(net, train)}, {score_mse(net, hold)}, 0};
  double best_hold = res.holdout_mse.front();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), s + cfg.batch_size);
      std::vector<const Vector*> xs;
      for (std::size_t i = s; i < e; ++i) xs.push_back(&train[order[i]].x);
      const Matrix x = stack_columns(xs);
      const auto cache = net.forward_batch(x);
      Vector gs(x.cols());
      for (std::size_t i = s; i < e; ++i)
        gs[static_cast<Eigen::Index>(i - s)] =
            (cache.scores[static_cast<Eigen::Index>(i - s)] - train[order[i]].target) /
            static_cast<double>(e - s);
      grad.setZero();
      net.backward_batch(x, cache, Matrix::Zero(kNumClasses, x.cols()), gs, grad);
      adam.step(net, grad, mask);
    }
    res.train_mse.push_back(score_mse(net, train));
    res.holdout_mse.push_back(score_mse(net, hold));
    if (res.holdout_mse.back() < best_hold) {
      best_hold = res.holdout_mse.back();
      res.net = net;
      res.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Metrics

double mse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw InvalidArgument("mse needs equal non-empty inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw InvalidArgument("pearson needs equal non-empty inputs");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[s]]) ++e;
    const double rank = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t k = s; k <= e; ++k) r[idx[k]] = rank;
    s = e + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

ScoringMetrics evaluate_predictions(const std::vector<double>& predicted,
                                    const std::vector<double>& labels) {
  ScoringMetrics m;
  m.pearson = pearson(predicted, labels);
  m.spearman = spearman(predicted, labels);
  m.mse = mse(predicted, labels);
  return m;
}

ScoringMetrics evaluate_scoring(const ScoringNet& net, const std::vector<LabeledExample>& data) {
  if (data.empty()) throw EmptySplit("no examples to evaluate");
  std::vector<double> pred, lab;
  std::size_t correct = 0;
  double ll = 0.0;
  for_each_chunk(data, 512, [&](std::size_t s, std::size_t e, const Matrix& x) {
    const auto c = net.forward_batch(x);
    for (std::size_t i = s; i < e; ++i) {
      const auto j = static_cast<Eigen::Index>(i - s);
      pred.push_back(c.scores[j]);
      lab.push_back(data[i].label);
      Eigen::Index arg = 0;
      c.probs.col(j).maxCoeff(&arg);
      correct += (arg + 1 == data[i].label);
      ll += std::log(std::max(c.probs(data[i].label - 1, j), 1e-300));
    }
  });
  ScoringMetrics m = evaluate_predictions(pred, lab);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  m.log_likelihood = ll / static_cast<double>(data.size());
  return m;
}

std::vector<LabeledExample> featurize(const std::vector<AMTExample>& data,
                                      const FeatureExtractor& extractor) {
  std::vector<LabeledExample> out;
  out.reserve(data.size());
  for (const auto& ex : data)
    out.push_back({extractor.scoring_features(ex.context, ex.candidate), ex.label, ex.context.id});
  return out;
}

}  // namespace converse
