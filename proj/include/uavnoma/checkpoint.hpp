#ifndef UAVNOMA_CHECKPOINT_HPP_
#define UAVNOMA_CHECKPOINT_HPP_

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavnoma/config.hpp"
#include "uavnoma/mlp.hpp"

namespace uavnoma {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty())
    throw CheckpointError("checkpoint: malformed tensor");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != cols)
      throw CheckpointError("checkpoint: ragged tensor");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

inline nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json j;
  j["sizes"] = net.sizes();
  j["tanh_output"] = net.tanh_output();
  nlohmann::json w = nlohmann::json::array(), b = nlohmann::json::array();
  for (size_t l = 0; l < net.num_layers(); ++l) {
    w.push_back(matrix_to_json(net.weights()[l]));
    b.push_back(vector_to_json(net.biases()[l]));
  }
  j["w"] = std::move(w);
  j["b"] = std::move(b);
  return j;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Rng dummy(0);
  Mlp net(j.at("sizes").get<std::vector<int>>(),
          j.at("tanh_output").get<bool>(), dummy);
  for (size_t l = 0; l < net.num_layers(); ++l) {
    Matrix w = matrix_from_json(j.at("w").at(l));
    Vector b = vector_from_json(j.at("b").at(l));
    if (w.rows() != net.weights()[l].rows() || w.cols() != net.weights()[l].cols())
      throw CheckpointError("checkpoint: weight shape mismatch");
    net.weights()[l] = std::move(w);
    net.biases()[l] = std::move(b);
  }
  return net;
}

inline nlohmann::json adam_to_json(const Adam& opt) {
  nlohmann::json j;
  j["t"] = opt.step_count();
  nlohmann::json m = nlohmann::json::array(), v = nlohmann::json::array();
  for (const auto& t : opt.first_moments()) m.push_back(matrix_to_json(t));
  for (const auto& t : opt.second_moments()) v.push_back(matrix_to_json(t));
  j["m"] = std::move(m);
  j["v"] = std::move(v);
  return j;
}

inline void adam_from_json(const nlohmann::json& j, Adam& opt) {
  opt.set_step_count(j.at("t").get<long>());
  opt.first_moments().clear();
  opt.second_moments().clear();
  for (const auto& t : j.at("m")) opt.first_moments().push_back(matrix_from_json(t));
  for (const auto& t : j.at("v")) opt.second_moments().push_back(matrix_from_json(t));
}

}  // namespace detail

// Everything needed to resume or evaluate a run: both networks, the policy
// log-std, Lagrange multipliers, optimizer moments, and the config hash that
// guards against evaluating under an incompatible setup.
struct Checkpoint {
  GaussianPolicy policy;
  Mlp value_net;
  std::vector<double> eta;
  Adam adam_policy;
  Adam adam_value;
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  int epochs_trained = 0;

  void save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "uavnoma-checkpoint-v1";
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["epochs_trained"] = epochs_trained;
    j["eta"] = eta;
    j["policy_mean"] = detail::mlp_to_json(policy.mean_net);
    j["policy_log_std"] = detail::vector_to_json(policy.log_std);
    j["value"] = detail::mlp_to_json(value_net);
    j["adam_policy"] = detail::adam_to_json(adam_policy);
    j["adam_value"] = detail::adam_to_json(adam_value);
    std::ofstream out(path);
    if (!out) throw CheckpointError("checkpoint: cannot write " + path);
    out << j.dump(1) << "\n";
  }

  static Checkpoint load(const std::string& path, uint64_t expected_hash,
                         bool allow_hash_mismatch = false) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint: cannot read " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("checkpoint: parse error: ") + e.what());
    }
    try {
      if (j.at("format").get<std::string>() != "uavnoma-checkpoint-v1")
        throw CheckpointError("checkpoint: unknown format");
      Checkpoint ck;
      ck.config_hash = j.at("config_hash").get<uint64_t>();
      if (ck.config_hash != expected_hash && !allow_hash_mismatch)
        throw CheckpointError(
            "checkpoint: config hash mismatch (pass the override flag to "
            "load anyway)");
      ck.seed = j.at("seed").get<uint64_t>();
      ck.epochs_trained = j.at("epochs_trained").get<int>();
      ck.eta = j.at("eta").get<std::vector<double>>();
      ck.policy.mean_net = detail::mlp_from_json(j.at("policy_mean"));
      ck.policy.log_std = detail::vector_from_json(j.at("policy_log_std"));
      ck.value_net = detail::mlp_from_json(j.at("value"));
      detail::adam_from_json(j.at("adam_policy"), ck.adam_policy);
      detail::adam_from_json(j.at("adam_value"), ck.adam_value);
      return ck;
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("checkpoint: missing field: ") + e.what());
    }
  }
};

}  // namespace uavnoma

#endif  // UAVNOMA_CHECKPOINT_HPP_
