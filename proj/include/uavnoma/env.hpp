#ifndef UAVNOMA_ENV_HPP_
#define UAVNOMA_ENV_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnoma/channel.hpp"
#include "uavnoma/config.hpp"
#include "uavnoma/energy.hpp"
#include "uavnoma/geometry.hpp"
#include "uavnoma/rng.hpp"

namespace uavnoma {

using Observation = std::vector<double>;
using ActionRaw = std::vector<double>;  // [-1,1]^(M+1)

struct ActionPhysical {
  std::vector<double> dz_m;  // per UAV, meters
  double p = 0.0;            // access probability for the next slot
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  std::vector<double> costs;  // per UAV, normalized battery drop
  bool done = false;
  // Diagnostics, not part of the CMDP signal.
  double capacity_bits = 0.0;   // slot capacity, summed over sub-slots
  double p_access = 0.0;        // probability the slot was simulated with
};

// Normalized per-UAV cost-sum upper bound: expected episode cost must stay
// at or below -B_min/B_max for the policy to be energy sustainable.
inline double constraint_bound(const RunConfig& cfg) {
  return -cfg.energy.battery_min_gain_j / cfg.energy.battery_max_j;
}

// Episodic CMDP wrapper around the slot simulator. Single-threaded; run one
// instance per worker.
class UavNomaEnv {
 public:
  UavNomaEnv(const RunConfig& cfg, uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    cfg_.validate();
  }

  int obs_dim() const {
    return cfg_.network.m_uavs * (2 * (cfg_.network.history_len + 1) + 6);
  }
  int action_dim() const { return cfg_.network.m_uavs + 1; }
  int horizon() const { return cfg_.network.horizon; }

  // Tests only: lets a raw access action of -1 map to exactly p = 0.
  void disable_p_floor() { p_floor_disabled_ = true; }

  Observation reset() {
    const auto& net = cfg_.network;
    devices_ = deploy_devices(
        net.n_devices, {net.area_width_m, net.area_height_m}, rng_);
    placement_ = make_placement();

    altitudes_ = net.initial_altitudes_m;
    batteries_.resize(net.m_uavs);
    for (int m = 0; m < net.m_uavs; ++m) {
      const auto& f = net.initial_battery_frac;
      batteries_[m] = f[f.size() == 1 ? 0 : m] * cfg_.energy.battery_max_j;
    }
    z_hist_.assign(net.m_uavs, {});
    b_hist_.assign(net.m_uavs, {});
    for (int m = 0; m < net.m_uavs; ++m) {
      z_hist_[m].assign(net.history_len + 1, altitudes_[m]);
      b_hist_[m].assign(net.history_len + 1, batteries_[m]);
    }

    // Warm-up slot at p = 1/N so s_0 carries SNIR statistics; it does not
    // move the UAVs or touch the batteries.
    current_p_ = 1.0 / net.n_devices;
    auto assoc = associate(devices_, uav_positions());
    last_stats_ = simulate_slot(devices_, uav_positions(), assoc, current_p_,
                                cfg_.channel, rng_).stats;

    step_count_ = 0;
    done_ = false;
    return observation();
  }

  ActionPhysical scale_action(const ActionRaw& raw) const {
    if (static_cast<int>(raw.size()) != action_dim())
      throw std::invalid_argument("scale_action: wrong action dimension");
    const auto& en = cfg_.energy;
    ActionPhysical phys;
    phys.dz_m.resize(cfg_.network.m_uavs);
    for (int m = 0; m < cfg_.network.m_uavs; ++m) {
      const double r = std::clamp(raw[m], -1.0, 1.0);
      phys.dz_m[m] = en.dz_min_m + 0.5 * (r + 1.0) * (en.dz_max_m - en.dz_min_m);
    }
    const double rp = std::clamp(raw[cfg_.network.m_uavs], -1.0, 1.0);
    const double p = 0.5 * (rp + 1.0) * (2.0 / cfg_.network.n_devices);
    phys.p = p_floor_disabled_ ? p : std::max(cfg_.network.p_min, p);
    return phys;
  }

  StepResult step(const ActionRaw& raw) {
    if (done_) throw std::logic_error("step: episode is done, call reset");
    const auto& en = cfg_.energy;
    const ActionPhysical phys = scale_action(raw);

    std::vector<double> z_prev = altitudes_;
    for (int m = 0; m < cfg_.network.m_uavs; ++m)
      altitudes_[m] = std::clamp(z_prev[m] + phys.dz_m[m], en.altitude_min_m,
                                 en.altitude_max_m);

    // Slot n runs at the post-displacement altitudes with the access
    // probability decided by the previous action.
    auto assoc = associate(devices_, uav_positions());
    const SlotOutcome outcome = simulate_slot(
        devices_, uav_positions(), assoc, current_p_, cfg_.channel, rng_);
    last_stats_ = outcome.stats;

    StepResult r;
    r.capacity_bits = outcome.capacity_sum;
    r.p_access = current_p_;
    r.reward = outcome.capacity_sum / cfg_.network.horizon;
    r.costs.resize(cfg_.network.m_uavs);
    for (int m = 0; m < cfg_.network.m_uavs; ++m) {
      const double eh = harvest_energy(z_prev[m], altitudes_[m], en);
      const double ec = consumption_energy(z_prev[m], altitudes_[m], en);
      const double b_next = battery_step(batteries_[m], eh, ec, rng_, en);
      r.costs[m] = (batteries_[m] - b_next) / en.battery_max_j;
      batteries_[m] = b_next;

      z_hist_[m].pop_back();
      z_hist_[m].push_front(altitudes_[m]);
      b_hist_[m].pop_back();
      b_hist_[m].push_front(batteries_[m]);
    }

    current_p_ = phys.p;
    ++step_count_;
    done_ = step_count_ >= cfg_.network.horizon;
    r.done = done_;
    r.observation = observation();
    return r;
  }

  Observation observation() const {
    const auto& net = cfg_.network;
    const auto& en = cfg_.energy;
    Observation obs;
    obs.reserve(obs_dim());
    for (int m = 0; m < net.m_uavs; ++m) {
      for (double z : z_hist_[m])
        obs.push_back((z - en.altitude_min_m) /
                      (en.altitude_max_m - en.altitude_min_m));
      for (double b : b_hist_[m]) obs.push_back(b / en.battery_max_j);
      const SnirStats& s = last_stats_[m];
      obs.push_back(s.p_above_1);
      obs.push_back(s.p_above_2);
      obs.push_back(s.mean_1 > 0.0 ? linear_to_db(s.mean_1) / 100.0 : 0.0);
      obs.push_back(s.mean_2 > 0.0 ? linear_to_db(s.mean_2) / 100.0 : 0.0);
      obs.push_back(std::log10(1.0 + s.var_1) / 10.0);
      obs.push_back(std::log10(1.0 + s.var_2) / 10.0);
    }
    return obs;
  }

  std::vector<Point3> uav_positions() const {
    std::vector<Point3> pos(cfg_.network.m_uavs);
    for (int m = 0; m < cfg_.network.m_uavs; ++m)
      pos[m] = {placement_.planar[m].x, placement_.planar[m].y, altitudes_[m]};
    return pos;
  }

  const std::vector<double>& altitudes() const { return altitudes_; }
  const std::vector<double>& batteries() const { return batteries_; }
  const DeviceSet& devices() const { return devices_; }
  const UavPlacement& placement() const { return placement_; }
  double current_p() const { return current_p_; }
  int step_count() const { return step_count_; }
  bool done() const { return done_; }
  const RunConfig& config() const { return cfg_; }

 private:
  UavPlacement make_placement() {
    const auto& net = cfg_.network;
    UavPlacement pl;
    switch (net.placement) {
      case PlacementScheme::kKmeans:
        return kmeans_xy(devices_, net.m_uavs, rng_, net.kmeans_max_iters,
                         net.kmeans_tol_m);
      case PlacementScheme::kFixed:
        for (int m = 0; m < net.m_uavs; ++m)
          pl.planar.push_back(
              {net.placement_coords[2 * m], net.placement_coords[2 * m + 1]});
        return pl;
      case PlacementScheme::kUniformRandom:
        for (int m = 0; m < net.m_uavs; ++m)
          pl.planar.push_back({rng_.uniform(0.0, net.area_width_m),
                               rng_.uniform(0.0, net.area_height_m)});
        return pl;
      case PlacementScheme::kCorners: {
        const Point2 corners[4] = {{0.0, 0.0},
                                   {net.area_width_m, net.area_height_m},
                                   {0.0, net.area_height_m},
                                   {net.area_width_m, 0.0}};
        for (int m = 0; m < net.m_uavs; ++m) pl.planar.push_back(corners[m % 4]);
        return pl;
      }
    }
    return pl;
  }

  RunConfig cfg_;
  Rng rng_;
  DeviceSet devices_;
  UavPlacement placement_;
  std::vector<double> altitudes_;
  std::vector<double> batteries_;
  std::vector<std::deque<double>> z_hist_;  // front = newest
  std::vector<std::deque<double>> b_hist_;
  std::vector<SnirStats> last_stats_;
  double current_p_ = 0.0;
  int step_count_ = 0;
  bool done_ = true;
  bool p_floor_disabled_ = false;
};

// Episode trace: one row per (step, uav) with the slot-level signals.
class EpisodeTraceWriter {
 public:
  explicit EpisodeTraceWriter(const std::string& path, int m_uavs)
      : out_(path) {
    if (!out_) throw ConfigError("cannot write " + path);
    out_ << "step,uav,z,B_joules,B_wh,capacity_bps,p_access,reward";
    for (int m = 0; m < m_uavs; ++m) out_ << ",cost_" << (m + 1);
    out_ << "\n";
    out_.precision(12);
  }

  void append(int step, const UavNomaEnv& env, const StepResult& r) {
    const int L = env.config().channel.subslots_per_slot;
    for (size_t m = 0; m < env.altitudes().size(); ++m) {
      out_ << step << "," << m << "," << env.altitudes()[m] << ","
           << env.batteries()[m] << "," << joules_to_wh(env.batteries()[m])
           << "," << r.capacity_bits / L << "," << r.p_access << ","
           << r.reward;
      for (double c : r.costs) out_ << "," << c;
      out_ << "\n";
    }
  }

 private:
  std::ofstream out_;
};

}  // namespace uavnoma

#endif  // UAVNOMA_ENV_HPP_
