#ifndef UAVNOMA_EVAL_HPP_
#define UAVNOMA_EVAL_HPP_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavnoma/checkpoint.hpp"
#include "uavnoma/config.hpp"
#include "uavnoma/env.hpp"
#include "uavnoma/mlp.hpp"

namespace uavnoma {

// Geometric mean across the M UAVs at one instant; exactly 0 if any battery
// is exhausted.
inline double geo_mean_over_uavs(const std::vector<double>& batteries) {
  double log_sum = 0.0;
  for (double b : batteries) {
    if (b <= 0.0) return 0.0;
    log_sum += std::log(b);
  }
  return std::exp(log_sum / batteries.size());
}

// Geometric mean of one UAV's battery over the horizon, in log space.
inline double geo_mean_over_time(const std::vector<double>& trace) {
  if (trace.empty()) return 0.0;
  double log_sum = 0.0;
  for (double b : trace) {
    if (b <= 0.0) return 0.0;
    log_sum += std::log(b);
  }
  return std::exp(log_sum / trace.size());
}

struct RolloutTrace {
  std::vector<std::vector<double>> altitudes;  // per UAV, length H
  std::vector<std::vector<double>> batteries;  // per UAV, length H
  std::vector<double> capacity;                // per slot, G/L (bps)
  std::vector<double> p_access;                // per slot
  std::vector<double> geo_mean_battery;        // per slot, across UAVs
  std::vector<double> initial_batteries;
  double temporal_avg_capacity = 0.0;
  std::vector<double> gt_battery;              // per UAV, over time
  bool feasible = false;  // terminal B >= initial + B_min for every UAV
};

struct EvalReport {
  std::vector<RolloutTrace> rollouts;
  double capacity_mean = 0.0;
  double capacity_ci95 = 0.0;
  std::vector<double> gt_mean;      // per UAV
  double feasible_fraction = 0.0;
  double gt_all_positive_fraction = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rollouts"] = rollouts.size();
    j["temporal_avg_capacity_bps"] = capacity_mean;
    j["temporal_avg_capacity_ci95"] = capacity_ci95;
    j["gt_battery_j"] = gt_mean;
    j["feasible_fraction"] = feasible_fraction;
    j["gt_all_positive_fraction"] = gt_all_positive_fraction;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& r : rollouts) {
      nlohmann::json jr;
      jr["temporal_avg_capacity_bps"] = r.temporal_avg_capacity;
      jr["gt_battery_j"] = r.gt_battery;
      jr["feasible"] = r.feasible;
      per.push_back(std::move(jr));
    }
    j["per_rollout"] = std::move(per);
    return j;
  }
};

using PolicyFn = std::function<ActionRaw(const Observation&)>;

// Deterministic evaluation rollouts of an arbitrary policy function.
// Metrics follow the reporting conventions: capacity = G/L averaged over
// slots, battery summarized by geometric means.
inline EvalReport evaluate_policy_fn(const PolicyFn& act, const RunConfig& cfg,
                                     int episodes, uint64_t base_seed) {
  EvalReport report;
  const int M = cfg.network.m_uavs;
  const int L = cfg.channel.subslots_per_slot;
  const double b_min = cfg.energy.battery_min_gain_j;

  for (int e = 0; e < episodes; ++e) {
    UavNomaEnv env(cfg, Rng::derive_seed(base_seed, 0xE7A1, e));
    RolloutTrace t;
    t.altitudes.resize(M);
    t.batteries.resize(M);
    Observation obs = env.reset();
    t.initial_batteries = env.batteries();

    double cap_sum = 0.0;
    while (!env.done()) {
      const StepResult r = env.step(act(obs));
      for (int m = 0; m < M; ++m) {
        t.altitudes[m].push_back(env.altitudes()[m]);
        t.batteries[m].push_back(env.batteries()[m]);
      }
      t.capacity.push_back(r.capacity_bits / L);
      t.p_access.push_back(r.p_access);
      t.geo_mean_battery.push_back(geo_mean_over_uavs(env.batteries()));
      cap_sum += r.capacity_bits / L;
      obs = r.observation;
    }
    t.temporal_avg_capacity = cap_sum / env.horizon();
    t.feasible = true;
    for (int m = 0; m < M; ++m) {
      t.gt_battery.push_back(geo_mean_over_time(t.batteries[m]));
      if (t.batteries[m].back() < t.initial_batteries[m] + b_min)
        t.feasible = false;
    }
    report.rollouts.push_back(std::move(t));
  }

  // Aggregates with a normal-approximation 95% CI over rollouts.
  const int n = static_cast<int>(report.rollouts.size());
  double sum = 0.0, sumsq = 0.0;
  report.gt_mean.assign(M, 0.0);
  int feasible = 0, gt_pos = 0;
  for (const auto& r : report.rollouts) {
    sum += r.temporal_avg_capacity;
    sumsq += r.temporal_avg_capacity * r.temporal_avg_capacity;
    bool all_pos = true;
    for (int m = 0; m < M; ++m) {
      report.gt_mean[m] += r.gt_battery[m];
      if (r.gt_battery[m] <= 0.0) all_pos = false;
    }
    if (r.feasible) ++feasible;
    if (all_pos) ++gt_pos;
  }
  report.capacity_mean = sum / n;
  const double var = std::max(0.0, sumsq / n - report.capacity_mean * report.capacity_mean);
  report.capacity_ci95 = n > 1 ? 1.96 * std::sqrt(var / (n - 1)) : 0.0;
  for (int m = 0; m < M; ++m) report.gt_mean[m] /= n;
  report.feasible_fraction = static_cast<double>(feasible) / n;
  report.gt_all_positive_fraction = static_cast<double>(gt_pos) / n;
  return report;
}

// Evaluation with the learned Gaussian policy's mean (no sampling).
inline EvalReport evaluate(const GaussianPolicy& policy, const RunConfig& cfg,
                           int episodes, uint64_t base_seed) {
  UavNomaEnv probe(cfg, 0);
  if (policy.mean_net.input_dim() != probe.obs_dim() ||
      policy.action_dim() != probe.action_dim())
    throw std::invalid_argument(
        "evaluate: checkpoint dimensions do not match the environment");
  PolicyFn act = [&policy](const Observation& obs) {
    const Vector v = Eigen::Map<const Vector>(obs.data(), obs.size());
    return policy.mean_action(v);
  };
  return evaluate_policy_fn(act, cfg, episodes, base_seed);
}

// Fixed raw action every step; reference policies like "hold z_max, p=1/N".
inline EvalReport evaluate_static_policy(const ActionRaw& raw,
                                         const RunConfig& cfg, int episodes,
                                         uint64_t base_seed) {
  return evaluate_policy_fn([&raw](const Observation&) { return raw; }, cfg,
                            episodes, base_seed);
}

struct GeneralizationCase {
  std::string name;
  RunConfig config;
  EvalReport report;
};

struct GeneralizationOptions {
  std::vector<double> device_counts = {100, 200, 600, 1000};
  int episodes = 32;
};

// Robustness sweeps: extreme initial altitudes, network scale, and planar
// placement schemes. The checkpoint is reused unchanged; only the
// environment varies (observation width does not depend on N).
inline std::vector<GeneralizationCase> generalization_suite(
    const GaussianPolicy& policy, const RunConfig& base,
    const GeneralizationOptions& opts, uint64_t base_seed) {
  std::vector<GeneralizationCase> cases;
  auto run = [&](const std::string& name, RunConfig cfg) {
    cfg.validate();
    GeneralizationCase c;
    c.name = name;
    c.report = evaluate(policy, cfg, opts.episodes, base_seed);
    c.config = std::move(cfg);
    cases.push_back(std::move(c));
  };

  run("base", base);

  {
    RunConfig c = base;
    c.network.initial_altitudes_m.assign(c.network.m_uavs,
                                         c.energy.altitude_min_m);
    run("init_altitude_low", std::move(c));
  }
  {
    RunConfig c = base;
    c.network.initial_altitudes_m.assign(c.network.m_uavs,
                                         c.energy.altitude_max_m);
    run("init_altitude_high", std::move(c));
  }
  for (double n : opts.device_counts) {
    RunConfig c = base;
    c.network.n_devices = static_cast<int>(n);
    c.network.p_min = std::min(c.network.p_min, 1.0 / c.network.n_devices);
    run("devices_" + std::to_string(static_cast<int>(n)), std::move(c));
  }
  {
    RunConfig c = base;
    c.network.placement = PlacementScheme::kCorners;
    run("placement_corners", std::move(c));
  }
  {
    RunConfig c = base;
    c.network.placement = PlacementScheme::kUniformRandom;
    run("placement_random", std::move(c));
  }
  return cases;
}

// Long-format, plot-ready CSV: one row per (case, series, index).
inline void write_eval_traces(const EvalReport& report, const std::string& dir,
                              const std::string& prefix) {
  std::filesystem::create_directories(dir);
  for (size_t r = 0; r < report.rollouts.size(); ++r) {
    const RolloutTrace& t = report.rollouts[r];
    std::ofstream out(dir + "/" + prefix + "_rollout_" + std::to_string(r) +
                      ".csv");
    out << "slot";
    for (size_t m = 0; m < t.altitudes.size(); ++m)
      out << ",z_" << (m + 1) << ",B_j_" << (m + 1);
    out << ",capacity_bps,p_access,geo_mean_battery_j\n";
    out.precision(12);
    for (size_t n = 0; n < t.capacity.size(); ++n) {
      out << n;
      for (size_t m = 0; m < t.altitudes.size(); ++m)
        out << "," << t.altitudes[m][n] << "," << t.batteries[m][n];
      out << "," << t.capacity[n] << "," << t.p_access[n] << ","
          << t.geo_mean_battery[n] << "\n";
    }
  }
}

}  // namespace uavnoma

#endif  // UAVNOMA_EVAL_HPP_
