#ifndef UAVNOMA_MLP_HPP_
#define UAVNOMA_MLP_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "uavnoma/rng.hpp"

namespace uavnoma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fully connected tanh network. Columns are samples, so a batched forward is
// a handful of GEMMs. Backward is exact reverse-mode over the cache.
class Mlp {
 public:
  struct Grads {
    std::vector<Matrix> w;
    std::vector<Vector> b;

    void add(const Grads& o) {
      for (size_t l = 0; l < w.size(); ++l) {
        w[l] += o.w[l];
        b[l] += o.b[l];
      }
    }
    void scale(double s) {
      for (size_t l = 0; l < w.size(); ++l) {
        w[l] *= s;
        b[l] *= s;
      }
    }
  };

  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> preact;  // pre-activation of each layer
  };

  Mlp() = default;

  // sizes = {in, hidden..., out}. The output layer is tanh when
  // `tanh_output`, linear otherwise.
  Mlp(std::vector<int> sizes, bool tanh_output, Rng& rng,
      double final_layer_scale = 1.0)
      : sizes_(std::move(sizes)), tanh_output_(tanh_output) {
    const size_t layers = sizes_.size() - 1;
    w_.resize(layers);
    b_.resize(layers);
    for (size_t l = 0; l < layers; ++l) {
      const int fan_in = sizes_[l];
      const int fan_out = sizes_[l + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      w_[l].resize(fan_out, fan_in);
      for (int r = 0; r < fan_out; ++r)
        for (int c = 0; c < fan_in; ++c)
          w_[l](r, c) = rng.uniform(-bound, bound);
      b_[l] = Vector::Zero(fan_out);
      if (l + 1 == layers) w_[l] *= final_layer_scale;
    }
  }

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  size_t num_layers() const { return w_.size(); }

  // x: input_dim x batch. Returns output_dim x batch.
  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim())
      throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    if (cache) {
      cache->inputs.clear();
      cache->preact.clear();
    }
    Matrix a = x;
    for (size_t l = 0; l < w_.size(); ++l) {
      if (cache) cache->inputs.push_back(a);
      Matrix z = (w_[l] * a).colwise() + b_[l];
      if (cache) cache->preact.push_back(z);
      const bool activate = (l + 1 < w_.size()) || tanh_output_;
      a = activate ? z.array().tanh().matrix() : std::move(z);
    }
    return a;
  }

  Vector forward_one(const Vector& x, Cache* cache = nullptr) const {
    return forward(Matrix(x), cache).col(0);
  }

  // output_grad: d(scalar loss)/d(output), output_dim x batch, matching the
  // cache's forward. Returns exact parameter gradients; optionally also the
  // gradient w.r.t. the input batch.
  Grads backward(const Cache& cache, const Matrix& output_grad,
                 Matrix* input_grad = nullptr) const {
    if (cache.inputs.size() != w_.size())
      throw std::invalid_argument("Mlp::backward: cache does not match network");
    Grads g;
    g.w.resize(w_.size());
    g.b.resize(w_.size());
    Matrix delta = output_grad;
    for (size_t l = w_.size(); l-- > 0;) {
      const bool activated = (l + 1 < w_.size()) || tanh_output_;
      if (activated) {
        // d tanh(z) = 1 - tanh(z)^2
        const Matrix t = cache.preact[l].array().tanh().matrix();
        delta = (delta.array() * (1.0 - t.array().square())).matrix();
      }
      g.w[l] = delta * cache.inputs[l].transpose();
      g.b[l] = delta.rowwise().sum();
      if (l > 0 || input_grad) {
        Matrix prev = w_[l].transpose() * delta;
        if (l == 0 && input_grad) *input_grad = std::move(prev);
        else delta = std::move(prev);
      }
    }
    return g;
  }

  Grads zero_grads() const {
    Grads g;
    g.w.resize(w_.size());
    g.b.resize(w_.size());
    for (size_t l = 0; l < w_.size(); ++l) {
      g.w[l] = Matrix::Zero(w_[l].rows(), w_[l].cols());
      g.b[l] = Vector::Zero(b_[l].size());
    }
    return g;
  }

  std::vector<Matrix>& weights() { return w_; }
  std::vector<Vector>& biases() { return b_; }
  const std::vector<Matrix>& weights() const { return w_; }
  const std::vector<Vector>& biases() const { return b_; }
  const std::vector<int>& sizes() const { return sizes_; }
  bool tanh_output() const { return tanh_output_; }

 private:
  std::vector<int> sizes_;
  bool tanh_output_ = false;
  std::vector<Matrix> w_;
  std::vector<Vector> b_;
};

// Bias-corrected Adam over a flat list of tensors (matrices and vectors are
// both handled through Eigen maps of the same moment buffers).
class Adam {
 public:
  Adam() = default;
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update to `param` given `grad` of the same shape. `slot`
  // identifies the tensor so each keeps its own moments.
  template <typename Derived1, typename Derived2>
  void update_tensor(size_t slot, Eigen::MatrixBase<Derived1>& param,
                     const Eigen::MatrixBase<Derived2>& grad, bool maximize,
                     double bias1, double bias2) {
    if (slot >= m_.size()) {
      m_.resize(slot + 1);
      v_.resize(slot + 1);
    }
    if (m_[slot].size() == 0) {
      m_[slot] = Matrix::Zero(param.rows(), param.cols());
      v_[slot] = Matrix::Zero(param.rows(), param.cols());
    }
    const double sign = maximize ? -1.0 : 1.0;  // descend on sign*grad
    m_[slot] = beta1_ * m_[slot] + (1.0 - beta1_) * sign * grad;
    v_[slot] = beta2_ * v_[slot] +
               (1.0 - beta2_) * grad.array().square().matrix();
    const Eigen::ArrayXXd m_hat = m_[slot].array() / bias1;
    const Eigen::ArrayXXd v_hat = v_[slot].array() / bias2;
    param.derived().array() -= lr_ * m_hat / (v_hat.sqrt() + eps_);
  }

  // One optimizer step over a whole MLP (+ optional extra vector, e.g. the
  // policy's log-std).
  void step(Mlp& net, const Mlp::Grads& grads, bool maximize,
            Vector* extra = nullptr, const Vector* extra_grad = nullptr) {
    ++t_;
    const double bias1 = 1.0 - std::pow(beta1_, t_);
    const double bias2 = 1.0 - std::pow(beta2_, t_);
    size_t slot = 0;
    for (size_t l = 0; l < net.num_layers(); ++l) {
      update_tensor(slot++, net.weights()[l], grads.w[l], maximize, bias1, bias2);
      update_tensor(slot++, net.biases()[l], grads.b[l], maximize, bias1, bias2);
    }
    if (extra && extra_grad)
      update_tensor(slot++, *extra, *extra_grad, maximize, bias1, bias2);
  }

  // Scalar/vector-only variant (Lagrange multipliers, test fixtures).
  void step(Vector& param, const Vector& grad, bool maximize) {
    ++t_;
    const double bias1 = 1.0 - std::pow(beta1_, t_);
    const double bias2 = 1.0 - std::pow(beta2_, t_);
    update_tensor(0, param, grad, maximize, bias1, bias2);
  }

  double lr() const { return lr_; }
  long step_count() const { return t_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  void set_step_count(long t) { t_ = t; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

inline constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))

// Diagonal Gaussian policy: tanh-bounded mean network plus a
// state-independent log-std vector.
struct GaussianPolicy {
  Mlp mean_net;      // obs_dim -> action_dim, tanh output
  Vector log_std;    // action_dim

  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int action_dim, int hidden, int layers,
                 double init_log_std, Rng& rng) {
    std::vector<int> sizes{obs_dim};
    for (int l = 0; l < layers; ++l) sizes.push_back(hidden);
    sizes.push_back(action_dim);
    // Small final layer => mean ~ 0 at init: UAVs hover and p starts at 1/N,
    // a feasible-by-construction starting policy.
    mean_net = Mlp(sizes, /*tanh_output=*/true, rng, 0.01);
    log_std = Vector::Constant(action_dim, init_log_std);
  }

  int action_dim() const { return static_cast<int>(log_std.size()); }

  // Log-density of the pre-clip action under N(mu(s), diag(e^{2 log_std})).
  double log_prob(const Vector& mean, const Vector& action) const {
    double lp = 0.0;
    for (int d = 0; d < action_dim(); ++d) {
      const double sigma = std::exp(log_std[d]);
      const double z = (action[d] - mean[d]) / sigma;
      lp += -0.5 * z * z - log_std[d] - kLogSqrt2Pi;
    }
    return lp;
  }

  struct Sample {
    std::vector<double> action;   // clipped to [-1,1], fed to the env
    Vector pre_clip;              // the Gaussian draw, used for log-probs
    double log_prob = 0.0;
  };

  Sample sample(const Vector& obs, Rng& rng) const {
    const Vector mean = mean_net.forward_one(obs);
    Sample s;
    s.pre_clip.resize(action_dim());
    s.action.resize(action_dim());
    for (int d = 0; d < action_dim(); ++d) {
      s.pre_clip[d] = mean[d] + std::exp(log_std[d]) * rng.normal(0.0, 1.0);
      s.action[d] = std::clamp(s.pre_clip[d], -1.0, 1.0);
    }
    s.log_prob = log_prob(mean, s.pre_clip);
    return s;
  }

  std::vector<double> mean_action(const Vector& obs) const {
    const Vector mean = mean_net.forward_one(obs);
    return {mean.data(), mean.data() + mean.size()};
  }

  // Sum over dims of the Gaussian differential entropy.
  double entropy() const {
    return log_std.sum() + action_dim() * (0.5 + kLogSqrt2Pi);
  }
};

}  // namespace uavnoma

#endif  // UAVNOMA_MLP_HPP_
