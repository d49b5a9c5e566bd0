#include "converse/qlearning.hpp"

#include <algorithm>
#include <sstream>

#include "converse/error.hpp"

namespace converse {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidArgument("replay capacity must be positive");
}

void ReplayBuffer::push(QTransition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
  max_seen_ = std::max(max_seen_, items_.size());
}

std::vector<const QTransition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) return {};
  std::uniform_int_distribution<std::size_t> u(0, items_.size() - 1);
  std::vector<const QTransition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[u(rng)]);
  return out;
}

nlohmann::json QLearningConfig::to_json() const {
  return {{"gamma", gamma},
          {"epsilon", epsilon},
          {"buffer_capacity", buffer_capacity},
          {"minibatch", minibatch},
          {"warmup", warmup},
          {"episodes_per_phase", episodes_per_phase},
          {"train_episodes", train_episodes},
          {"learning_rate", learning_rate},
          {"seed", seed}};
}

QLearningConfig QLearningConfig::from_json(const nlohmann::json& j, QLearningConfig c) {
  c.gamma = j.value("gamma", c.gamma);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
  c.minibatch = j.value("minibatch", c.minibatch);
  c.warmup = j.value("warmup", c.warmup);
  c.episodes_per_phase = j.value("episodes_per_phase", c.episodes_per_phase);
  c.train_episodes = j.value("train_episodes", c.train_episodes);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

void q_update(ScoringNet& net, Adam& adam, const std::vector<Vector>& xs, const std::vector<double>& targets,
              const ParamMask& mask) {
  if (xs.empty()) return;
  const Matrix x = stack_columns(xs);
  const auto cache = net.forward_batch(x);
  const auto n = static_cast<Eigen::Index>(xs.size());
  Vector gs(n);
  for (Eigen::Index j = 0; j < n; ++j)
    gs[j] = (cache.scores[j] - targets[static_cast<std::size_t>(j)]) / static_cast<double>(n);
  Vector grad;
  net.backward_batch(x, cache, Matrix::Zero(static_cast<Eigen::Index>(kNumClasses), n), gs, grad);
  adam.step(net, grad, mask);
}

namespace {

/// Value of the next history: the forced priority action if any, else max over candidates.
double next_value(const ScoringNet& net, const MDP& mdp, std::size_t record) {
  const auto& rec = mdp.store.at(record);
  if (const auto p = mdp.priority_action(record))
    return net.score(rec.features.col(static_cast<Eigen::Index>(*p)));
  return net.forward_batch(rec.features).scores.maxCoeff();
}

std::size_t epsilon_greedy(const ScoringNet& net, const HistoryRecord& rec, double eps, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < eps) {
    std::uniform_int_distribution<std::size_t> pick(0, rec.candidates.size() - 1);
    return pick(rng);
  }
  const Vector s = net.forward_batch(rec.features).scores;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < s.size(); ++i)
    if (s[i] > s[best]) best = i;
  return static_cast<std::size_t>(best);
}

}  // namespace

QLearningResult qlearning_train(const ScoringNet& initial, const MDP& train, const MDP& eval,
                                const QLearningConfig& cfg) {
  if (cfg.gamma < 0 || cfg.gamma > 1) throw InvalidArgument("gamma outside [0,1]");
  if (cfg.epsilon < 0 || cfg.epsilon > 1) throw InvalidArgument("epsilon outside [0,1]");
  if (cfg.episodes_per_phase == 0) throw InvalidArgument("episodes_per_phase must be positive");
  const ParamMask mask = ParamMask::qlearning();
  ScoringNet net = initial;
  Adam adam(net.num_params(), cfg.learning_rate);
  ReplayBuffer buffer(cfg.buffer_capacity);
  Rng batch_rng = derive_rng(cfg.seed, 7);
  const std::uint64_t eval_seed = derive_rng(cfg.seed, 8)();

  QLearningResult res;
  res.net = net;
  res.best_eval_return = -std::numeric_limits<double>::infinity();
  std::size_t episode = 0;
  while (episode < cfg.train_episodes) {
    const std::size_t n = std::min(cfg.episodes_per_phase, cfg.train_episodes - episode);
    QPhaseLog tl{"train", n, 0, 0, 0};
    for (std::size_t e = 0; e < n; ++e, ++episode) {
      Rng rng = derive_rng(cfg.seed, 1000 + episode);
      std::size_t rec = train.reset(rng).record;
      double ret = 0.0;
      std::size_t len = 0;
      for (std::size_t t = 0; t < train.config.t_max; ++t) {
        const auto& r = train.store.at(rec);
        const auto prio = train.priority_action(rec);
        const std::size_t a = prio ? *prio : epsilon_greedy(net, r, cfg.epsilon, rng);
        const auto s = train.step_with_action(rec, t, a, rng);
        ret += s.r;
        ++len;
        if (!prio) {
          buffer.push({r.features.col(static_cast<Eigen::Index>(a)), s.r, s.next_record, s.done});
        }
        if (buffer.size() >= cfg.warmup) {
          const auto batch = buffer.sample(cfg.minibatch, batch_rng);
          std::vector<Vector> xs;
          std::vector<double> ys;
          for (const auto* q : batch) {
            xs.push_back(q->x);
            ys.push_back(q->r + (q->done ? 0.0 : cfg.gamma * next_value(net, train, q->next_record)));
          }
          q_update(net, adam, xs, ys, mask);
          ++res.updates;
        }
        rec = s.next_record;
        if (s.done) break;
      }
      tl.avg_return += ret / static_cast<double>(n);
      tl.avg_length += static_cast<double>(len) / static_cast<double>(n);
      tl.avg_reward_per_step += (len ? ret / static_cast<double>(len) : 0.0) / static_cast<double>(n);
    }
    res.log.push_back(tl);

    const NetPolicy greedy(PolicyVariant::GreedyActionValue, net);
    const auto sim = simulate(eval, greedy, cfg.episodes_per_phase, eval_seed);
    res.log.push_back({"eval", cfg.episodes_per_phase, sim.avg_return, sim.avg_reward_per_step, sim.avg_length});
    if (sim.avg_return >= res.best_eval_return) {
      res.best_eval_return = sim.avg_return;
      res.net = net;
    }
  }
  res.max_buffer_size = buffer.max_size_seen();
  return res;
}

std::string phase_log_tsv(const std::vector<QPhaseLog>& log) {
  std::ostringstream s;
  s << "phase\tepisodes\tavg_return\tavg_reward_per_step\tavg_length\n";
  for (const auto& l : log)
    s << l.phase << '\t' << l.episodes << '\t' << l.avg_return << '\t' << l.avg_reward_per_step << '\t'
      << l.avg_length << '\n';
  return s.str();
}

}  // namespace converse
