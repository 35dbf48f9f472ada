#ifndef UAVNOMA_CONFIG_HPP_
#define UAVNOMA_CONFIG_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace uavnoma {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }
inline double wh_to_joules(double wh) { return wh * 3600.0; }
inline double joules_to_wh(double j) { return j / 3600.0; }

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

// Radio / random-access side of the simulation. Config files carry dB and
// dBm where those are the natural units; conversion to linear happens here,
// once, at load time.
struct ChannelConfig {
  double tx_power_w = dbm_to_watts(30.0);    // P_TX
  double path_loss_exponent = 2.0;           // alpha
  double carrier_hz = 900.0e6;               // f0
  double reference_distance_m = 1.0;         // d0
  double noise_floor_w = dbm_to_watts(-80.0);  // n0
  double snir_threshold = db_to_linear(10.0);  // linear
  double bandwidth_hz = 1.0;                 // W
  int subslots_per_slot = 1000;              // L

  double wavelength_m() const { return kSpeedOfLight / carrier_hz; }
  // c0 = (lambda / 4pi)^alpha
  double c0() const {
    return std::pow(wavelength_m() / (4.0 * std::numbers::pi),
                    path_loss_exponent);
  }
};

// Solar harvesting, cruise power and battery dynamics. Internal unit is
// joules; Wh appears only at the config boundary.
struct EnergyConfig {
  double harvest_efficiency = 0.4;   // psi
  double panel_area_m2 = 1.0;        // S~
  double solar_intensity_wm2 = 1367.0;  // G~
  double cloud_absorption = 0.01;    // beta_c, 1/m
  double cloud_low_m = 700.0;        // z_low
  double cloud_high_m = 1300.0;      // z_high
  double uav_weight_n = 39.2;        // W
  double air_density = 1.225;        // rho
  double rotor_area_m2 = 0.18;       // A
  double static_power_w = 5.0;       // P_static + P_antenna
  double slot_seconds = 10.0;        // dt
  double battery_max_j = wh_to_joules(222.0);  // B_max
  double battery_min_gain_j = wh_to_joules(22.0);  // B_min
  double battery_noise_var = 500.0;  // sigma_B^2, joules^2
  double altitude_min_m = 500.0;     // z_min
  double altitude_max_m = 1500.0;    // z_max
  double dz_min_m = -40.0;
  double dz_max_m = 40.0;

  double hover_speed() const {  // V_z
    return std::sqrt(uav_weight_n / (2.0 * air_density * rotor_area_m2));
  }
};

enum class PlacementScheme { kKmeans, kFixed, kUniformRandom, kCorners };

inline std::string to_string(PlacementScheme s) {
  switch (s) {
    case PlacementScheme::kKmeans: return "kmeans";
    case PlacementScheme::kFixed: return "fixed";
    case PlacementScheme::kUniformRandom: return "random";
    case PlacementScheme::kCorners: return "corners";
  }
  return "kmeans";
}

inline PlacementScheme placement_from_string(const std::string& s) {
  if (s == "kmeans") return PlacementScheme::kKmeans;
  if (s == "fixed") return PlacementScheme::kFixed;
  if (s == "random") return PlacementScheme::kUniformRandom;
  if (s == "corners") return PlacementScheme::kCorners;
  throw ConfigError("placement: unknown scheme '" + s + "'");
}

// Deployment geometry plus episode framing.
struct NetworkConfig {
  int n_devices = 200;               // N
  int m_uavs = 2;                    // M
  double area_width_m = 1500.0;      // deployment rectangle [0,w]x[0,h]
  double area_height_m = 500.0;
  int horizon = 360;                 // H
  int history_len = 5;               // h_k
  std::vector<double> initial_altitudes_m = {750.0, 1250.0};
  // One entry broadcast to every UAV, or one entry per UAV.
  std::vector<double> initial_battery_frac = {0.5};
  PlacementScheme placement = PlacementScheme::kKmeans;
  std::vector<double> placement_coords;  // x1,y1,x2,y2,... for kFixed
  int kmeans_max_iters = 100;
  double kmeans_tol_m = 1e-3;
  double p_min = 1e-4;  // floor on the access probability
};

struct TrainerConfig {
  double discount = 0.999;        // zeta
  double gae_lambda = 0.97;       // xi
  double clip_eps = 0.2;          // epsilon
  double kl_threshold = 0.01;     // KL_Th
  int epochs = 1000;
  int episodes_per_epoch = 32;
  int policy_steps = 80;
  int value_steps = 80;
  double policy_lr = 3e-4;        // theta_lr
  double value_lr = 1e-3;         // Theta_lr
  double eta_lr = 3e-3;           // eta_lr
  int workers = 4;
  double init_log_std = -0.5;
  int hidden_width = 128;
  int hidden_layers = 3;
};

struct RunConfig {
  ChannelConfig channel;
  EnergyConfig energy;
  NetworkConfig network;
  TrainerConfig trainer;
  uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
  // Stable content hash used to guard checkpoint/config compatibility.
  uint64_t hash() const;
};

inline void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config: " + key + ": " + why);
  };
  if (network.n_devices < 1) fail("n_devices", "must be >= 1");
  if (network.m_uavs < 1) fail("m_uavs", "must be >= 1");
  if (network.n_devices < network.m_uavs) fail("n_devices", "must be >= m_uavs");
  if (network.area_width_m <= 0 || network.area_height_m <= 0)
    fail("area", "must have positive width and height");
  if (network.horizon < 1) fail("horizon", "must be >= 1");
  if (network.history_len < 0) fail("history_len", "must be >= 0");
  if (static_cast<int>(network.initial_altitudes_m.size()) != network.m_uavs)
    fail("initial_altitudes_m", "length must equal m_uavs");
  for (double z : network.initial_altitudes_m)
    if (z < energy.altitude_min_m || z > energy.altitude_max_m)
      fail("initial_altitudes_m", "outside [z_min, z_max]");
  if (network.initial_battery_frac.size() != 1 &&
      static_cast<int>(network.initial_battery_frac.size()) != network.m_uavs)
    fail("initial_battery_frac", "need one value or one per UAV");
  for (double f : network.initial_battery_frac)
    if (f < 0 || f > 1) fail("initial_battery_frac", "must be in [0,1]");
  if (network.placement == PlacementScheme::kFixed &&
      static_cast<int>(network.placement_coords.size()) != 2 * network.m_uavs)
    fail("placement_coords", "need 2*m_uavs values for fixed placement");

  if (channel.tx_power_w <= 0) fail("p_tx_dbm", "transmit power must be > 0");
  if (channel.path_loss_exponent <= 0) fail("alpha", "must be > 0");
  if (channel.carrier_hz <= 0) fail("f0_hz", "must be > 0");
  if (channel.reference_distance_m <= 0) fail("d0_m", "must be > 0");
  if (channel.noise_floor_w <= 0) fail("n0_dbm", "noise floor must be > 0");
  if (channel.snir_threshold <= 0) fail("snir_th_db", "threshold must be > 0");
  if (channel.bandwidth_hz <= 0) fail("bandwidth_hz", "must be > 0");
  if (channel.subslots_per_slot < 1) fail("subslots", "must be >= 1");

  if (energy.cloud_low_m >= energy.cloud_high_m)
    fail("z_low_m", "must be < z_high_m");
  if (energy.battery_min_gain_j >= energy.battery_max_j)
    fail("b_min_wh", "must be < b_max_wh");
  if (energy.battery_max_j <= 0) fail("b_max_wh", "must be > 0");
  if (!(energy.dz_min_m < 0 && 0 < energy.dz_max_m))
    fail("dz_m", "need dz_min < 0 < dz_max");
  if (energy.altitude_min_m >= energy.altitude_max_m)
    fail("z_min_m", "must be < z_max_m");
  if (energy.slot_seconds <= 0) fail("slot_seconds", "must be > 0");
  if (energy.battery_noise_var < 0) fail("sigma_b2", "must be >= 0");

  if (!(trainer.discount > 0 && trainer.discount <= 1))
    fail("zeta", "must be in (0,1]");
  if (!(trainer.gae_lambda >= 0 && trainer.gae_lambda <= 1))
    fail("xi", "must be in [0,1]");
  if (trainer.clip_eps <= 0) fail("clip_eps", "must be > 0");
  if (trainer.kl_threshold <= 0) fail("kl_th", "must be > 0");
  if (trainer.epochs < 1) fail("epochs", "must be >= 1");
  if (trainer.episodes_per_epoch < 1) fail("episodes_per_epoch", "must be >= 1");
  if (trainer.workers < 1) fail("workers", "must be >= 1");
  if (trainer.hidden_width < 1) fail("hidden_width", "must be >= 1");
  if (trainer.hidden_layers < 1) fail("hidden_layers", "must be >= 1");
  if (network.p_min <= 0 || network.p_min > 1.0 / network.n_devices)
    fail("p_min", "must be in (0, 1/N]");
}

namespace detail {

// Pulls `key` out of `j` if present, with a type check; tracks consumed keys
// so unknown ones can be rejected afterwards.
class JsonReader {
 public:
  explicit JsonReader(const nlohmann::json& j) : j_(j) {}

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.push_back(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: ") + key + ": wrong type");
    }
  }

  // Accepts either a single number (broadcast) or a list of numbers.
  void get_broadcast(const char* key, std::vector<double>& out) {
    if (!j_.contains(key)) return;
    seen_.push_back(key);
    const nlohmann::json& v = j_.at(key);
    if (v.is_number()) {
      out.assign(1, v.get<double>());
      return;
    }
    try {
      out = v.get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: ") + key + ": wrong type");
    }
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& k : seen_)
        if (k == it.key()) { known = true; break; }
      if (!known)
        throw ConfigError("config: unknown key '" + it.key() + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["p_tx_dbm"] = linear_to_db(channel.tx_power_w) + 30.0;
  j["alpha"] = channel.path_loss_exponent;
  j["f0_hz"] = channel.carrier_hz;
  j["d0_m"] = channel.reference_distance_m;
  j["n0_dbm"] = linear_to_db(channel.noise_floor_w) + 30.0;
  j["snir_th_db"] = linear_to_db(channel.snir_threshold);
  j["bandwidth_hz"] = channel.bandwidth_hz;
  j["subslots"] = channel.subslots_per_slot;

  j["psi"] = energy.harvest_efficiency;
  j["panel_area_m2"] = energy.panel_area_m2;
  j["solar_intensity_wm2"] = energy.solar_intensity_wm2;
  j["beta_c"] = energy.cloud_absorption;
  j["z_low_m"] = energy.cloud_low_m;
  j["z_high_m"] = energy.cloud_high_m;
  j["uav_weight_n"] = energy.uav_weight_n;
  j["rho"] = energy.air_density;
  j["rotor_area_m2"] = energy.rotor_area_m2;
  j["p_static_w"] = energy.static_power_w;
  j["slot_seconds"] = energy.slot_seconds;
  j["b_max_wh"] = joules_to_wh(energy.battery_max_j);
  j["b_min_wh"] = joules_to_wh(energy.battery_min_gain_j);
  j["sigma_b2"] = energy.battery_noise_var;
  j["z_min_m"] = energy.altitude_min_m;
  j["z_max_m"] = energy.altitude_max_m;
  j["dz_min_m"] = energy.dz_min_m;
  j["dz_max_m"] = energy.dz_max_m;

  j["n_devices"] = network.n_devices;
  j["m_uavs"] = network.m_uavs;
  j["area_width_m"] = network.area_width_m;
  j["area_height_m"] = network.area_height_m;
  j["horizon"] = network.horizon;
  j["history_len"] = network.history_len;
  j["initial_altitudes_m"] = network.initial_altitudes_m;
  if (network.initial_battery_frac.size() == 1)
    j["initial_battery_frac"] = network.initial_battery_frac[0];
  else
    j["initial_battery_frac"] = network.initial_battery_frac;
  j["placement"] = to_string(network.placement);
  j["placement_coords"] = network.placement_coords;
  j["kmeans_max_iters"] = network.kmeans_max_iters;
  j["kmeans_tol_m"] = network.kmeans_tol_m;
  j["p_min"] = network.p_min;

  j["zeta"] = trainer.discount;
  j["xi"] = trainer.gae_lambda;
  j["clip_eps"] = trainer.clip_eps;
  j["kl_th"] = trainer.kl_threshold;
  j["epochs"] = trainer.epochs;
  j["episodes_per_epoch"] = trainer.episodes_per_epoch;
  j["policy_steps"] = trainer.policy_steps;
  j["value_steps"] = trainer.value_steps;
  j["policy_lr"] = trainer.policy_lr;
  j["value_lr"] = trainer.value_lr;
  j["eta_lr"] = trainer.eta_lr;
  j["workers"] = trainer.workers;
  j["init_log_std"] = trainer.init_log_std;
  j["hidden_width"] = trainer.hidden_width;
  j["hidden_layers"] = trainer.hidden_layers;

  j["seed"] = seed;
  return j;
}

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  detail::JsonReader r(j);

  double p_tx_dbm = 30.0, n0_dbm = -80.0, snir_th_db = 10.0;
  double b_max_wh = 222.0, b_min_wh = 22.0;
  std::string placement = "kmeans";

  r.get("p_tx_dbm", p_tx_dbm);
  r.get("alpha", c.channel.path_loss_exponent);
  r.get("f0_hz", c.channel.carrier_hz);
  r.get("d0_m", c.channel.reference_distance_m);
  r.get("n0_dbm", n0_dbm);
  r.get("snir_th_db", snir_th_db);
  r.get("bandwidth_hz", c.channel.bandwidth_hz);
  r.get("subslots", c.channel.subslots_per_slot);

  r.get("psi", c.energy.harvest_efficiency);
  r.get("panel_area_m2", c.energy.panel_area_m2);
  r.get("solar_intensity_wm2", c.energy.solar_intensity_wm2);
  r.get("beta_c", c.energy.cloud_absorption);
  r.get("z_low_m", c.energy.cloud_low_m);
  r.get("z_high_m", c.energy.cloud_high_m);
  r.get("uav_weight_n", c.energy.uav_weight_n);
  r.get("rho", c.energy.air_density);
  r.get("rotor_area_m2", c.energy.rotor_area_m2);
  r.get("p_static_w", c.energy.static_power_w);
  r.get("slot_seconds", c.energy.slot_seconds);
  r.get("b_max_wh", b_max_wh);
  r.get("b_min_wh", b_min_wh);
  r.get("sigma_b2", c.energy.battery_noise_var);
  r.get("z_min_m", c.energy.altitude_min_m);
  r.get("z_max_m", c.energy.altitude_max_m);
  r.get("dz_min_m", c.energy.dz_min_m);
  r.get("dz_max_m", c.energy.dz_max_m);

  r.get("n_devices", c.network.n_devices);
  r.get("m_uavs", c.network.m_uavs);
  r.get("area_width_m", c.network.area_width_m);
  r.get("area_height_m", c.network.area_height_m);
  r.get("horizon", c.network.horizon);
  r.get("history_len", c.network.history_len);
  bool altitudes_given = j.contains("initial_altitudes_m");
  r.get("initial_altitudes_m", c.network.initial_altitudes_m);
  r.get_broadcast("initial_battery_frac", c.network.initial_battery_frac);
  r.get("placement", placement);
  r.get("placement_coords", c.network.placement_coords);
  r.get("kmeans_max_iters", c.network.kmeans_max_iters);
  r.get("kmeans_tol_m", c.network.kmeans_tol_m);
  r.get("p_min", c.network.p_min);

  r.get("zeta", c.trainer.discount);
  r.get("xi", c.trainer.gae_lambda);
  r.get("clip_eps", c.trainer.clip_eps);
  r.get("kl_th", c.trainer.kl_threshold);
  r.get("epochs", c.trainer.epochs);
  r.get("episodes_per_epoch", c.trainer.episodes_per_epoch);
  r.get("policy_steps", c.trainer.policy_steps);
  r.get("value_steps", c.trainer.value_steps);
  r.get("policy_lr", c.trainer.policy_lr);
  r.get("value_lr", c.trainer.value_lr);
  r.get("eta_lr", c.trainer.eta_lr);
  r.get("workers", c.trainer.workers);
  r.get("init_log_std", c.trainer.init_log_std);
  r.get("hidden_width", c.trainer.hidden_width);
  r.get("hidden_layers", c.trainer.hidden_layers);

  r.get("seed", c.seed);
  r.reject_unknown();

  c.channel.tx_power_w = dbm_to_watts(p_tx_dbm);
  c.channel.noise_floor_w = dbm_to_watts(n0_dbm);
  c.channel.snir_threshold = db_to_linear(snir_th_db);
  c.energy.battery_max_j = wh_to_joules(b_max_wh);
  c.energy.battery_min_gain_j = wh_to_joules(b_min_wh);
  c.network.placement = placement_from_string(placement);
  // Default altitudes only make sense for the default M.
  if (!altitudes_given &&
      static_cast<int>(c.network.initial_altitudes_m.size()) != c.network.m_uavs) {
    c.network.initial_altitudes_m.assign(
        c.network.m_uavs,
        0.5 * (c.energy.altitude_min_m + c.energy.altitude_max_m));
  }
  c.validate();
  return c;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

inline void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path);
  out << to_json().dump(2) << "\n";
}

inline uint64_t RunConfig::hash() const {
  // FNV-1a over the canonical JSON dump; stable across runs and platforms.
  const std::string s = to_json().dump();
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace uavnoma

#endif  // UAVNOMA_CONFIG_HPP_
