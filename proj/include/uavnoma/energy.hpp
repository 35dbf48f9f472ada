#ifndef UAVNOMA_ENERGY_HPP_
#define UAVNOMA_ENERGY_HPP_

#include <algorithm>
#include <cmath>

#include "uavnoma/config.hpp"
#include "uavnoma/rng.hpp"

namespace uavnoma {

// Fraction of solar intensity surviving a path of d_cloud meters of cloud.
inline double cloud_attenuation(double d_cloud, const EnergyConfig& cfg) {
  return std::exp(-cfg.cloud_absorption * d_cloud);
}

// Solar energy harvested over one slot, three cases on the midpoint of the
// start/end altitudes: clear sky above the cloud top, partial absorption
// inside the cloud, full-span absorption below it.
inline double harvest_energy(double z_start, double z_end,
                             const EnergyConfig& cfg) {
  const double z_mid = 0.5 * (z_start + z_end);
  const double full = cfg.harvest_efficiency * cfg.panel_area_m2 *
                      cfg.solar_intensity_wm2 * cfg.slot_seconds;
  if (z_mid >= cfg.cloud_high_m) return full;
  if (z_mid >= cfg.cloud_low_m)
    return full * cloud_attenuation(cfg.cloud_high_m - z_mid, cfg);
  return full * cloud_attenuation(cfg.cloud_high_m - cfg.cloud_low_m, cfg);
}

// Cruise/hover energy over one slot for a vertical displacement
// z_start -> z_end. Ascending costs more than hovering, hovering more than
// descending.
inline double consumption_energy(double z_start, double z_end,
                                 const EnergyConfig& cfg) {
  const double vz = (z_end - z_start) / cfg.slot_seconds;
  const double hover_term =
      (cfg.uav_weight_n * cfg.uav_weight_n /
       (std::sqrt(2.0) * cfg.air_density * cfg.rotor_area_m2)) /
      (std::pow(4.0, 0.25) * cfg.hover_speed());
  const double power =
      hover_term + cfg.uav_weight_n * vz + cfg.static_power_w;
  return std::max(0.0, power * cfg.slot_seconds);
}

// One-slot battery recursion with zero-mean Gaussian process noise, clamped
// to [0, B_max].
inline double battery_step(double battery_j, double harvested_j,
                           double consumed_j, Rng& rng,
                           const EnergyConfig& cfg) {
  const double noise = rng.normal(0.0, std::sqrt(cfg.battery_noise_var));
  const double next = battery_j + harvested_j - consumed_j + noise;
  return std::clamp(next, 0.0, cfg.battery_max_j);
}

}  // namespace uavnoma

#endif  // UAVNOMA_ENERGY_HPP_
