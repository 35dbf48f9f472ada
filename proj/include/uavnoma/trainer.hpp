#ifndef UAVNOMA_TRAINER_HPP_
#define UAVNOMA_TRAINER_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "uavnoma/checkpoint.hpp"
#include "uavnoma/config.hpp"
#include "uavnoma/env.hpp"
#include "uavnoma/mlp.hpp"

namespace uavnoma {

// One horizon-cut episode. Column j holds step j; matrices keep the update
// phase on the GEMM path.
struct Trajectory {
  Matrix obs;        // obs_dim x H
  Matrix actions;    // action_dim x H, pre-clip Gaussian draws
  Vector logp_old;   // H
  Vector rewards;    // H, raw capacity rewards
  Matrix costs;      // M x H
  Vector penalized;  // H, Lagrangian penalized rewards
  Vector values;     // H
  Vector advantages; // H
  Vector returns;    // H, discounted penalized rewards-to-go
  std::vector<double> cost_sums;  // per UAV, sum over the episode
  double capacity_metric_sum = 0.0;  // sum over slots of G/L

  int length() const { return static_cast<int>(obs.cols()); }
};

inline double penalized_reward(double reward, const std::vector<double>& costs,
                               const std::vector<double>& eta) {
  double r = reward;
  for (size_t m = 0; m < costs.size(); ++m) r -= eta[m] * costs[m];
  return r;
}

// Collects one episode under the sampling policy. The environment and the
// action noise each get their own stream derived from `seed`, so a
// trajectory depends only on (config, policy, eta, seed) and not on which
// worker ran it.
inline Trajectory rollout(const RunConfig& cfg, const GaussianPolicy& policy,
                          const std::vector<double>& eta, uint64_t seed) {
  UavNomaEnv env(cfg, Rng::derive_seed(seed, 1));
  Rng action_rng(Rng::derive_seed(seed, 2));
  const int H = env.horizon();
  const int M = cfg.network.m_uavs;
  const int A = env.action_dim();
  const int L = cfg.channel.subslots_per_slot;

  Trajectory traj;
  traj.obs.resize(env.obs_dim(), H);
  traj.actions.resize(A, H);
  traj.logp_old.resize(H);
  traj.rewards.resize(H);
  traj.costs.resize(M, H);
  traj.penalized.resize(H);
  traj.cost_sums.assign(M, 0.0);

  Observation obs = env.reset();
  for (int n = 0; n < H; ++n) {
    const Vector obs_vec = Eigen::Map<const Vector>(obs.data(), obs.size());
    traj.obs.col(n) = obs_vec;
    const GaussianPolicy::Sample s = policy.sample(obs_vec, action_rng);
    traj.actions.col(n) = s.pre_clip;
    traj.logp_old[n] = s.log_prob;

    const StepResult r = env.step(s.action);
    traj.rewards[n] = r.reward;
    for (int m = 0; m < M; ++m) {
      traj.costs(m, n) = r.costs[m];
      traj.cost_sums[m] += r.costs[m];
    }
    traj.penalized[n] = penalized_reward(r.reward, r.costs, eta);
    traj.capacity_metric_sum += r.capacity_bits / L;
    obs = r.observation;
  }
  return traj;
}

// GAE over one episode with terminal bootstrap V(s_H) = 0 (episodes are cut
// at the horizon, never early-terminated). Also fills the discounted
// penalized rewards-to-go used as value targets.
inline void compute_gae(Trajectory& traj, double zeta, double xi) {
  const int H = traj.length();
  traj.advantages.resize(H);
  traj.returns.resize(H);
  double adv = 0.0;
  double ret = 0.0;
  for (int n = H - 1; n >= 0; --n) {
    const double v_next = (n + 1 < H) ? traj.values[n + 1] : 0.0;
    const double delta = traj.penalized[n] + zeta * v_next - traj.values[n];
    adv = delta + zeta * xi * adv;
    ret = traj.penalized[n] + zeta * ret;
    traj.advantages[n] = adv;
    traj.returns[n] = ret;
  }
}

// Projected gradient step on the multiplier loss: eta grows proportionally
// to the constraint violation and freezes while the constraint holds.
inline std::vector<double> lagrange_update(const std::vector<double>& eta,
                                           const std::vector<double>& mean_cost_sums,
                                           double bound, double eta_lr) {
  std::vector<double> next(eta.size());
  for (size_t m = 0; m < eta.size(); ++m) {
    const double slack = bound - mean_cost_sums[m];
    next[m] = std::max(0.0, eta[m] - eta_lr * std::min(slack, 0.0));
  }
  return next;
}

enum class TrainMode { kCdrl, kUnconstrained, kRlws };

struct TrainOptions {
  TrainMode mode = TrainMode::kCdrl;
  std::vector<double> rlws_eta;  // used when mode == kRlws
  std::string log_path;          // per-epoch CSV; empty = no file
  std::function<void(int, double)> progress;  // (epoch, mean_return)
};

inline TrainMode parse_mode(const std::string& s, std::vector<double>* rlws_eta) {
  if (s == "cdrl") return TrainMode::kCdrl;
  if (s == "ppo") return TrainMode::kUnconstrained;
  if (s.rfind("rlws:", 0) == 0) {
    rlws_eta->clear();
    std::string rest = s.substr(5);
    size_t pos = 0;
    while (pos <= rest.size()) {
      const size_t comma = rest.find(',', pos);
      const std::string tok = rest.substr(pos, comma - pos);
      if (tok.empty()) throw ConfigError("mode: bad rlws eta list");
      rlws_eta->push_back(std::stod(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return TrainMode::kRlws;
  }
  throw ConfigError("mode: expected cdrl | ppo | rlws:<eta1,eta2,...>");
}

struct EpochLog {
  int epoch = 0;
  double mean_return = 0.0;
  std::vector<double> mean_cost;
  std::vector<double> eta;
  double kl = 0.0;
  double entropy = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

namespace detail {

// Index-ordered parallel map over episodes; results land in fixed slots so
// the downstream reduction order never depends on scheduling.
template <typename Fn>
void for_each_episode(int count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (int e = 0; e < count; ++e) fn(e);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int k = std::min(workers, count);
  pool.reserve(k);
  for (int w = 0; w < k; ++w)
    pool.emplace_back([&] {
      for (int e = next.fetch_add(1); e < count; e = next.fetch_add(1)) fn(e);
    });
  for (auto& t : pool) t.join();
}

struct PolicyBatchEval {
  double mean_objective = 0.0;
  double approx_kl = 0.0;  // mean(logp_old - logp_new)
  Mlp::Grads grads;        // d(mean objective)/d(mean-net params)
  Vector log_std_grad;     // d(mean objective)/d(log_std)
};

// One full-batch evaluation of the clipped surrogate and its gradient.
// Gradients are computed per episode and reduced in episode order, so the
// result is bitwise independent of the worker count.
inline PolicyBatchEval eval_policy_batch(const GaussianPolicy& policy,
                                         const std::vector<Trajectory>& batch,
                                         double clip_eps, int workers) {
  const int A = policy.action_dim();
  int total = 0;
  for (const auto& t : batch) total += t.length();

  const int E = static_cast<int>(batch.size());
  std::vector<Mlp::Grads> ep_grads(E);
  std::vector<Vector> ep_std_grads(E);
  std::vector<double> ep_obj(E, 0.0), ep_kl(E, 0.0);

  Vector inv_var(A), sigma(A);
  for (int d = 0; d < A; ++d) {
    sigma[d] = std::exp(policy.log_std[d]);
    inv_var[d] = 1.0 / (sigma[d] * sigma[d]);
  }

  for_each_episode(E, workers, [&](int e) {
    const Trajectory& t = batch[e];
    const int H = t.length();
    Mlp::Cache cache;
    const Matrix mean = policy.mean_net.forward(t.obs, &cache);

    Matrix z = t.actions - mean;  // A x H
    Vector logp_new =
        Vector::Constant(H, -A * kLogSqrt2Pi - policy.log_std.sum());
    for (int j = 0; j < H; ++j)
      for (int d = 0; d < A; ++d)
        logp_new[j] -= 0.5 * z(d, j) * z(d, j) * inv_var[d];

    Matrix gout = Matrix::Zero(A, H);
    Vector std_grad = Vector::Zero(A);
    double obj = 0.0, kl = 0.0;
    for (int j = 0; j < H; ++j) {
      const double adv = t.advantages[j];
      const double ratio = std::exp(logp_new[j] - t.logp_old[j]);
      const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
      obj += std::min(ratio * adv, clipped * adv);
      kl += t.logp_old[j] - logp_new[j];
      // The min picks the unclipped branch unless clipping already made the
      // objective insensitive to the ratio; in that case the gradient is 0.
      const bool clipped_out = (adv >= 0.0 && ratio > 1.0 + clip_eps) ||
                               (adv < 0.0 && ratio < 1.0 - clip_eps);
      if (clipped_out) continue;
      const double w = ratio * adv / total;
      for (int d = 0; d < A; ++d) {
        // dlogp/dmean = z / sigma^2, dlogp/dlog_std = z^2/sigma^2 - 1
        gout(d, j) = w * z(d, j) * inv_var[d];
        std_grad[d] += w * (z(d, j) * z(d, j) * inv_var[d] - 1.0);
      }
    }
    ep_grads[e] = policy.mean_net.backward(cache, gout);
    ep_std_grads[e] = std::move(std_grad);
    ep_obj[e] = obj;
    ep_kl[e] = kl;
  });

  PolicyBatchEval out;
  out.grads = std::move(ep_grads[0]);
  out.log_std_grad = std::move(ep_std_grads[0]);
  out.mean_objective = ep_obj[0];
  out.approx_kl = ep_kl[0];
  for (int e = 1; e < E; ++e) {
    out.grads.add(ep_grads[e]);
    out.log_std_grad += ep_std_grads[e];
    out.mean_objective += ep_obj[e];
    out.approx_kl += ep_kl[e];
  }
  out.mean_objective /= total;
  out.approx_kl /= total;
  return out;
}

struct ValueBatchEval {
  double mse = 0.0;
  Mlp::Grads grads;
};

inline ValueBatchEval eval_value_batch(const Mlp& value_net,
                                       const std::vector<Trajectory>& batch,
                                       int workers) {
  int total = 0;
  for (const auto& t : batch) total += t.length();
  const int E = static_cast<int>(batch.size());
  std::vector<Mlp::Grads> ep_grads(E);
  std::vector<double> ep_loss(E, 0.0);

  for_each_episode(E, workers, [&](int e) {
    const Trajectory& t = batch[e];
    Mlp::Cache cache;
    const Matrix v = value_net.forward(t.obs, &cache);  // 1 x H
    Matrix err = v;
    for (int j = 0; j < t.length(); ++j) err(0, j) -= t.returns[j];
    ep_loss[e] = err.array().square().sum();
    const Matrix gout = (2.0 / total) * err;
    ep_grads[e] = value_net.backward(cache, gout);
  });

  ValueBatchEval out;
  out.grads = std::move(ep_grads[0]);
  out.mse = ep_loss[0];
  for (int e = 1; e < E; ++e) {
    out.grads.add(ep_grads[e]);
    out.mse += ep_loss[e];
  }
  out.mse /= total;
  return out;
}

}  // namespace detail

// Repeated full-batch ascent on the clipped surrogate with KL early
// stopping. Returns (final objective, KL at exit, steps taken).
struct PpoUpdateResult {
  double objective = 0.0;
  double kl = 0.0;
  int steps = 0;
};

inline PpoUpdateResult ppo_update(const std::vector<Trajectory>& batch,
                                  GaussianPolicy& policy, Adam& adam,
                                  const TrainerConfig& cfg) {
  PpoUpdateResult res;
  for (int k = 0; k < cfg.policy_steps; ++k) {
    detail::PolicyBatchEval ev =
        detail::eval_policy_batch(policy, batch, cfg.clip_eps, cfg.workers);
    if (!std::isfinite(ev.mean_objective))
      throw std::runtime_error("ppo_update: non-finite surrogate objective");
    res.objective = ev.mean_objective;
    res.kl = ev.approx_kl;
    if (ev.approx_kl >= cfg.kl_threshold) break;
    adam.step(policy.mean_net, ev.grads, /*maximize=*/true, &policy.log_std,
              &ev.log_std_grad);
    ++res.steps;
  }
  return res;
}

// Value regression on the penalized rewards-to-go.
inline double value_update(const std::vector<Trajectory>& batch, Mlp& value_net,
                           Adam& adam, const TrainerConfig& cfg) {
  double loss = 0.0;
  for (int k = 0; k < cfg.value_steps; ++k) {
    detail::ValueBatchEval ev =
        detail::eval_value_batch(value_net, batch, cfg.workers);
    if (!std::isfinite(ev.mse))
      throw std::runtime_error("value_update: non-finite value loss");
    loss = ev.mse;
    adam.step(value_net, ev.grads, /*maximize=*/false);
  }
  return loss;
}

inline void write_log_header(std::ofstream& out, int m_uavs) {
  out << "epoch,mean_return";
  for (int m = 0; m < m_uavs; ++m) out << ",mean_cost_" << (m + 1);
  for (int m = 0; m < m_uavs; ++m) out << ",eta_" << (m + 1);
  out << ",kl,entropy,policy_loss,value_loss,wall_ms\n";
}

inline void write_log_row(std::ofstream& out, const EpochLog& row) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << "," << buf;
  };
  out << row.epoch;
  num(row.mean_return);
  for (double c : row.mean_cost) num(c);
  for (double e : row.eta) num(e);
  num(row.kl);
  num(row.entropy);
  num(row.policy_loss);
  num(row.value_loss);
  num(row.wall_ms);
  out << "\n";
}

// Full training loop: parallel rollouts -> GAE -> clipped policy ascent ->
// value fit -> multiplier step. Deterministic given (config, seed) for any
// worker count.
inline TrainResult train(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  const int M = cfg.network.m_uavs;
  const TrainerConfig& tc = cfg.trainer;

  Rng init_rng(Rng::derive_seed(cfg.seed, 0xC0FFEE));
  UavNomaEnv probe(cfg, 0);
  GaussianPolicy policy(probe.obs_dim(), probe.action_dim(), tc.hidden_width,
                        tc.hidden_layers, tc.init_log_std, init_rng);
  std::vector<int> vsizes{probe.obs_dim()};
  for (int l = 0; l < tc.hidden_layers; ++l) vsizes.push_back(tc.hidden_width);
  vsizes.push_back(1);
  Mlp value_net(vsizes, /*tanh_output=*/false, init_rng);

  Adam adam_policy(tc.policy_lr);
  Adam adam_value(tc.value_lr);

  std::vector<double> eta(M, 0.0);
  if (opts.mode == TrainMode::kRlws) {
    if (static_cast<int>(opts.rlws_eta.size()) != M)
      throw ConfigError("rlws mode: need one eta per UAV");
    eta = opts.rlws_eta;
  }
  const double bound = constraint_bound(cfg);

  std::ofstream log_file;
  if (!opts.log_path.empty()) {
    log_file.open(opts.log_path);
    if (!log_file) throw ConfigError("cannot write " + opts.log_path);
    write_log_header(log_file, M);
  }

  TrainResult result;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Trajectory> batch(tc.episodes_per_epoch);
    detail::for_each_episode(tc.episodes_per_epoch, tc.workers, [&](int e) {
      batch[e] = rollout(cfg, policy, eta,
                         Rng::derive_seed(cfg.seed, epoch, e));
    });

    // Value estimates and advantages.
    detail::for_each_episode(tc.episodes_per_epoch, tc.workers, [&](int e) {
      batch[e].values = value_net.forward(batch[e].obs).row(0).transpose();
      compute_gae(batch[e], tc.discount, tc.gae_lambda);
    });

    // Per-batch advantage normalization.
    {
      double sum = 0.0, sumsq = 0.0;
      int total = 0;
      for (const auto& t : batch) {
        sum += t.advantages.sum();
        sumsq += t.advantages.array().square().sum();
        total += t.length();
      }
      const double mean = sum / total;
      const double var = std::max(0.0, sumsq / total - mean * mean);
      const double inv_std = 1.0 / std::sqrt(var + 1e-8);
      for (auto& t : batch)
        t.advantages = ((t.advantages.array() - mean) * inv_std).matrix();
    }

    const PpoUpdateResult pu = ppo_update(batch, policy, adam_policy, tc);
    const double vloss = value_update(batch, value_net, adam_value, tc);

    std::vector<double> mean_cost(M, 0.0);
    double mean_return = 0.0;
    for (const auto& t : batch) {
      mean_return += t.rewards.sum();
      for (int m = 0; m < M; ++m) mean_cost[m] += t.cost_sums[m];
    }
    mean_return /= tc.episodes_per_epoch;
    for (int m = 0; m < M; ++m) mean_cost[m] /= tc.episodes_per_epoch;

    if (opts.mode == TrainMode::kCdrl)
      eta = lagrange_update(eta, mean_cost, bound, tc.eta_lr);

    EpochLog row;
    row.epoch = epoch;
    row.mean_return = mean_return;
    row.mean_cost = mean_cost;
    row.eta = eta;
    row.kl = pu.kl;
    row.entropy = policy.entropy();
    row.policy_loss = pu.objective;
    row.value_loss = vloss;
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    if (log_file) write_log_row(log_file, row);
    if (opts.progress) opts.progress(epoch, mean_return);
    result.log.push_back(std::move(row));
  }

  result.checkpoint.policy = std::move(policy);
  result.checkpoint.value_net = std::move(value_net);
  result.checkpoint.eta = eta;
  result.checkpoint.adam_policy = std::move(adam_policy);
  result.checkpoint.adam_value = std::move(adam_value);
  result.checkpoint.config_hash = cfg.hash();
  result.checkpoint.seed = cfg.seed;
  result.checkpoint.epochs_trained = tc.epochs;
  return result;
}

}  // namespace uavnoma

#endif  // UAVNOMA_TRAINER_HPP_
