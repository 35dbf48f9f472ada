#ifndef UAVNOMA_CHANNEL_HPP_
#define UAVNOMA_CHANNEL_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "uavnoma/config.hpp"
#include "uavnoma/geometry.hpp"
#include "uavnoma/rng.hpp"

namespace uavnoma {

// Power received at a UAV from one device for a given fading draw. Zero if
// the device is silent; path loss saturates inside the reference distance.
inline double received_power(Point2 device, Point3 uav, double fading,
                             bool transmitting, const ChannelConfig& cfg) {
  if (!transmitting) return 0.0;
  const double d = distance_3d(device, uav);
  const double dist = std::max(d, cfg.reference_distance_m);
  return cfg.c0() * fading * cfg.tx_power_w *
         std::pow(dist, -cfg.path_loss_exponent);
}

// QoS thresholding: SNIR below the threshold reads as zero.
inline double threshold_snir(double snir, const ChannelConfig& cfg) {
  return snir >= cfg.snir_threshold ? snir : 0.0;
}

struct Top2Snir {
  bool has1 = false;
  bool has2 = false;
  double snir1 = 0.0;
  double snir2 = 0.0;
  int id1 = -1;  // device ids of the strongest / second strongest signal
  int id2 = -1;
};

// Orders the received powers of all network-wide transmitters at one UAV and
// forms the two SIC-stage SNIRs. Ties in power go to the lower device id.
inline Top2Snir top2_snir(const std::vector<int>& ids,
                          const std::vector<double>& powers,
                          double noise_floor_w) {
  Top2Snir out;
  double total = 0.0;
  double p1 = -1.0, p2 = -1.0;
  for (size_t k = 0; k < powers.size(); ++k) {
    const double p = powers[k];
    total += p;
    if (p > p1) {
      p2 = p1; out.id2 = out.id1;
      p1 = p; out.id1 = ids[k];
    } else if (p > p2) {
      p2 = p; out.id2 = ids[k];
    }
  }
  if (out.id1 >= 0) {
    out.has1 = true;
    out.snir1 = p1 / (noise_floor_w + (total - p1));
  }
  if (out.id2 >= 0) {
    out.has2 = true;
    out.snir2 = p2 / (noise_floor_w + (total - p1 - p2));
  }
  return out;
}

// Sum rate decoded by UAV m in one sub-slot: the top signal if it is owned
// and above threshold, plus the second signal if additionally it is owned
// and the first decode succeeded.
inline double subslot_rate(int uav, const Top2Snir& top,
                           const std::vector<int>& owner,
                           const ChannelConfig& cfg) {
  double rate = 0.0;
  bool first_decoded = false;
  if (top.has1 && owner[top.id1] == uav) {
    const double u1 = threshold_snir(top.snir1, cfg);
    if (u1 > 0.0) {
      rate += cfg.bandwidth_hz * std::log2(1.0 + u1);
      first_decoded = true;
    }
  }
  if (first_decoded && top.has2 && owner[top.id2] == uav) {
    const double u2 = threshold_snir(top.snir2, cfg);
    if (u2 > 0.0) rate += cfg.bandwidth_hz * std::log2(1.0 + u2);
  }
  return rate;
}

struct SnirStats {
  double p_above_1 = 0.0;  // decode-eligibility frequency over L sub-slots
  double p_above_2 = 0.0;
  double mean_1 = 0.0;     // conditional on the decode event; 0 if it never
  double mean_2 = 0.0;     // occurred
  double var_1 = 0.0;
  double var_2 = 0.0;
};

struct SlotOutcome {
  std::vector<int> decode1_count;  // per UAV, over L sub-slots
  std::vector<int> decode2_count;
  std::vector<SnirStats> stats;    // per UAV
  double capacity_sum = 0.0;       // sum over sub-slots and UAVs of the rate
};

// Drives one system slot: fading fixed for the slot, L sub-slots of
// p-persistent access, two-stage SIC decoding at every UAV with network-wide
// interference.
inline SlotOutcome simulate_slot_with_fading(
    const DeviceSet& devices, const std::vector<Point3>& uavs,
    const Association& assoc, double p, const std::vector<double>& fading,
    const ChannelConfig& cfg, Rng& rng) {
  const int n = devices.count();
  const int m = static_cast<int>(uavs.size());
  const int L = cfg.subslots_per_slot;

  // Received power of device i at UAV k if it transmits, fixed for the slot.
  std::vector<double> rx_if_tx(static_cast<size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k)
      rx_if_tx[static_cast<size_t>(i) * m + k] = received_power(
          devices.positions[i], uavs[k], fading[static_cast<size_t>(i) * m + k],
          true, cfg);

  SlotOutcome out;
  out.decode1_count.assign(m, 0);
  out.decode2_count.assign(m, 0);
  out.stats.assign(m, SnirStats{});
  std::vector<double> sum1(m, 0.0), sumsq1(m, 0.0), sum2(m, 0.0), sumsq2(m, 0.0);

  std::vector<int> tx_ids;
  std::vector<double> tx_powers;
  tx_ids.reserve(n);
  for (int l = 0; l < L; ++l) {
    tx_ids.clear();
    for (int i = 0; i < n; ++i)
      if (rng.bernoulli(p)) tx_ids.push_back(i);
    if (tx_ids.empty()) continue;

    for (int k = 0; k < m; ++k) {
      tx_powers.clear();
      for (int id : tx_ids)
        tx_powers.push_back(rx_if_tx[static_cast<size_t>(id) * m + k]);
      const Top2Snir top = top2_snir(tx_ids, tx_powers, cfg.noise_floor_w);

      const bool decode1 = top.has1 && assoc.owner[top.id1] == k &&
                           top.snir1 >= cfg.snir_threshold;
      const bool decode2 = decode1 && top.has2 && assoc.owner[top.id2] == k &&
                           top.snir2 >= cfg.snir_threshold;
      if (decode1) {
        ++out.decode1_count[k];
        sum1[k] += top.snir1;
        sumsq1[k] += top.snir1 * top.snir1;
        out.capacity_sum += cfg.bandwidth_hz * std::log2(1.0 + top.snir1);
      }
      if (decode2) {
        ++out.decode2_count[k];
        sum2[k] += top.snir2;
        sumsq2[k] += top.snir2 * top.snir2;
        out.capacity_sum += cfg.bandwidth_hz * std::log2(1.0 + top.snir2);
      }
    }
  }

  for (int k = 0; k < m; ++k) {
    SnirStats& s = out.stats[k];
    const int c1 = out.decode1_count[k];
    const int c2 = out.decode2_count[k];
    s.p_above_1 = static_cast<double>(c1) / L;
    s.p_above_2 = static_cast<double>(c2) / L;
    if (c1 > 0) {
      s.mean_1 = sum1[k] / c1;
      s.var_1 = std::max(0.0, sumsq1[k] / c1 - s.mean_1 * s.mean_1);
    }
    if (c2 > 0) {
      s.mean_2 = sum2[k] / c2;
      s.var_2 = std::max(0.0, sumsq2[k] / c2 - s.mean_2 * s.mean_2);
    }
  }
  return out;
}

// Draws the per-slot quasi-static fading (unit-mean exponential per
// device-UAV pair, device-major order) and simulates the slot.
inline SlotOutcome simulate_slot(const DeviceSet& devices,
                                 const std::vector<Point3>& uavs,
                                 const Association& assoc, double p,
                                 const ChannelConfig& cfg, Rng& rng) {
  if (p < 0.0 || p > 1.0)
    throw ConfigError("simulate_slot: p must be in [0,1]");
  std::vector<double> fading(devices.positions.size() * uavs.size());
  for (double& h : fading) h = rng.exponential();
  return simulate_slot_with_fading(devices, uavs, assoc, p, fading, cfg, rng);
}

}  // namespace uavnoma

#endif  // UAVNOMA_CHANNEL_HPP_
