#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uavnoma/mlp.hpp"

using namespace uavnoma;

TEST_CASE("forward shapes and determinism") {
  Rng rng(1);
  const Mlp net({4, 8, 8, 3}, false, rng);
  CHECK(net.input_dim() == 4);
  CHECK(net.output_dim() == 3);
  CHECK(net.num_layers() == 3);
  Rng xr(2);
  Matrix x(4, 5);
  for (int i = 0; i < x.size(); ++i) x(i) = xr.normal(0.0, 1.0);
  const Matrix y1 = net.forward(x);
  const Matrix y2 = net.forward(x);
  CHECK(y1.rows() == 3);
  CHECK(y1.cols() == 5);
  CHECK((y1 - y2).norm() == 0.0);
  // Batched forward agrees with per-column forward.
  for (int c = 0; c < 5; ++c) {
    const Vector yc = net.forward_one(x.col(c));
    CHECK((yc - y1.col(c)).norm() < 1e-14);
  }
  CHECK_THROWS(net.forward(Matrix::Zero(3, 1)));
}

TEST_CASE("tanh output head stays in (-1,1)") {
  Rng rng(3);
  const Mlp net({2, 16, 2}, true, rng);
  Matrix x(2, 100);
  Rng xr(4);
  for (int i = 0; i < x.size(); ++i) x(i) = xr.normal(0.0, 10.0);
  const Matrix y = net.forward(x);
  CHECK(y.minCoeff() > -1.0);
  CHECK(y.maxCoeff() < 1.0);
}

TEST_CASE("final layer scale shrinks outputs") {
  Rng a(5), b(5);
  const Mlp big({3, 8, 2}, true, a, 1.0);
  const Mlp small({3, 8, 2}, true, b, 0.01);
  const Vector x = Vector::Constant(3, 0.7);
  const Vector yb = big.forward_one(x);
  const Vector ys = small.forward_one(x);
  // Same weights up to the scaled head: tanh(0.01 z) ~= 0.01 z.
  for (int d = 0; d < 2; ++d) {
    const double z = std::atanh(yb[d]);
    CHECK(ys[d] == doctest::Approx(std::tanh(0.01 * z)).epsilon(1e-12));
    CHECK(std::abs(ys[d]) < 0.02 * std::max(1.0, std::abs(z)));
  }
}

TEST_CASE("backward matches finite differences") {
  Rng rng(7);
  Mlp net({3, 6, 5, 2}, true, rng);
  Rng xr(8);
  Matrix x(3, 4);
  for (int i = 0; i < x.size(); ++i) x(i) = xr.normal(0.0, 1.0);
  Matrix gout(2, 4);
  for (int i = 0; i < gout.size(); ++i) gout(i) = xr.normal(0.0, 1.0);

  // Scalar loss = sum(gout .* forward(x)).
  auto loss = [&]() {
    return (gout.array() * net.forward(x).array()).sum();
  };

  Mlp::Cache cache;
  net.forward(x, &cache);
  Matrix input_grad;
  const Mlp::Grads g = net.backward(cache, gout, &input_grad);

  const double h = 1e-6;
  for (size_t l = 0; l < net.num_layers(); ++l) {
    for (int idx : {0, 1, static_cast<int>(net.weights()[l].size()) - 1}) {
      double& wref = net.weights()[l].data()[idx];
      const double orig = wref;
      wref = orig + h;
      const double up = loss();
      wref = orig - h;
      const double dn = loss();
      wref = orig;
      CHECK(g.w[l].data()[idx] ==
            doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
    double& bref = net.biases()[l][0];
    const double borig = bref;
    bref = borig + h;
    const double bup = loss();
    bref = borig - h;
    const double bdn = loss();
    bref = borig;
    CHECK(g.b[l][0] ==
          doctest::Approx((bup - bdn) / (2 * h)).epsilon(1e-5));
  }
  // Input gradient too.
  for (int idx : {0, 5, 11}) {
    double& xref = x.data()[idx];
    const double orig = xref;
    xref = orig + h;
    const double up = loss();
    xref = orig - h;
    const double dn = loss();
    xref = orig;
    CHECK(input_grad.data()[idx] ==
          doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("grads add and scale") {
  Rng rng(9);
  Mlp net({2, 3, 1}, false, rng);
  Mlp::Cache c;
  const Matrix x = Matrix::Constant(2, 1, 0.5);
  net.forward(x, &c);
  Mlp::Grads g = net.backward(c, Matrix::Constant(1, 1, 1.0));
  Mlp::Grads g2 = g;
  g2.add(g);
  g2.scale(0.5);
  for (size_t l = 0; l < net.num_layers(); ++l) {
    CHECK((g2.w[l] - g.w[l]).norm() < 1e-15);
    CHECK((g2.b[l] - g.b[l]).norm() < 1e-15);
  }
}

TEST_CASE("Adam first step moves by ~lr in the gradient direction") {
  Vector p = Vector::Constant(3, 1.0);
  Vector g(3);
  g << 0.5, -2.0, 1e-3;
  Adam opt(0.01);
  opt.step(p, g, /*maximize=*/false);
  CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(1.0 + 0.01).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(1.0 - 0.01).epsilon(1e-3));

  Vector q = Vector::Constant(1, 0.0);
  Vector qg = Vector::Constant(1, 1.0);
  Adam up(0.1);
  up.step(q, qg, /*maximize=*/true);
  CHECK(q[0] == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("Adam minimizes a quadratic bowl") {
  Vector p(2);
  p << 5.0, -3.0;
  Adam opt(0.05);
  for (int t = 0; t < 2000; ++t) {
    const Vector g = 2.0 * p;  // d/dp ||p||^2
    opt.step(p, g, false);
  }
  CHECK(p.norm() < 1e-3);
}

TEST_CASE("Adam trains an MLP to fit a fixed target") {
  Rng rng(11);
  Mlp net({2, 16, 16, 1}, false, rng);
  Adam opt(3e-3);
  Matrix x(2, 16);
  Rng xr(12);
  for (int i = 0; i < x.size(); ++i) x(i) = xr.uniform(-1.0, 1.0);
  Matrix target(1, 16);
  for (int c = 0; c < 16; ++c)
    target(0, c) = std::sin(3.0 * x(0, c)) * x(1, c);
  double final_mse = 1e9;
  for (int t = 0; t < 3000; ++t) {
    Mlp::Cache cache;
    const Matrix y = net.forward(x, &cache);
    const Matrix err = y - target;
    final_mse = err.array().square().mean();
    Mlp::Grads g = net.backward(cache, 2.0 * err / err.cols());
    opt.step(net, g, false);
  }
  CHECK(final_mse < 1e-3);
}

TEST_CASE("policy log-prob at the mean") {
  Rng rng(13);
  GaussianPolicy pol(4, 3, 8, 2, -0.5, rng);
  const Vector obs = Vector::Zero(4);
  const Vector mean =
      Eigen::Map<const Vector>(pol.mean_action(obs).data(), 3);
  const double lp = pol.log_prob(mean, mean);
  // Per dim: -log sigma - log sqrt(2 pi) with log sigma = -0.5.
  CHECK(lp / 3.0 == doctest::Approx(0.5 - kLogSqrt2Pi).epsilon(1e-9));
  CHECK(lp / 3.0 == doctest::Approx(-0.4189).epsilon(1e-3));
}

TEST_CASE("policy log-prob matches the Gaussian density") {
  Rng rng(14);
  GaussianPolicy pol(2, 2, 8, 2, -0.5, rng);
  Vector mean(2), a(2);
  mean << 0.1, -0.2;
  a << 0.4, 0.1;
  double expect = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double s = std::exp(-0.5);
    expect += -0.5 * std::pow((a[d] - mean[d]) / s, 2) -
              std::log(s * std::sqrt(2.0 * std::numbers::pi));
  }
  CHECK(pol.log_prob(mean, a) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("policy samples have the right moments and clipping") {
  Rng rng(15);
  GaussianPolicy pol(3, 2, 8, 2, -0.5, rng);
  const Vector obs = Vector::Constant(3, 0.3);
  const Vector mean =
      Eigen::Map<const Vector>(pol.mean_action(obs).data(), 2);
  Rng srng(16);
  const int n = 100000;
  Vector sum = Vector::Zero(2), sumsq = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    const GaussianPolicy::Sample s = pol.sample(obs, srng);
    CHECK(s.action[0] >= -1.0);
    CHECK(s.action[0] <= 1.0);
    sum += s.pre_clip;
    sumsq += s.pre_clip.array().square().matrix();
    // Stored log-prob is of the pre-clip draw.
    CHECK(s.log_prob == doctest::Approx(pol.log_prob(mean, s.pre_clip)));
  }
  const double sigma2 = std::exp(-1.0);
  for (int d = 0; d < 2; ++d) {
    const double m = sum[d] / n;
    CHECK(std::abs(m - mean[d]) < 4.0 * std::sqrt(sigma2 / n));
    const double v = sumsq[d] / n - m * m;
    CHECK(v == doctest::Approx(sigma2).epsilon(0.03));
  }
}

TEST_CASE("fresh policy means are near zero") {
  Rng rng(17);
  GaussianPolicy pol(36, 3, 128, 3, -0.5, rng);
  Rng orng(18);
  for (int i = 0; i < 20; ++i) {
    Vector obs(36);
    for (int d = 0; d < 36; ++d) obs[d] = orng.uniform(0.0, 1.0);
    for (double a : pol.mean_action(obs)) CHECK(std::abs(a) < 0.05);
  }
}

TEST_CASE("policy entropy") {
  Rng rng(19);
  GaussianPolicy pol(2, 3, 4, 1, -0.5, rng);
  CHECK(pol.entropy() ==
        doctest::Approx(3.0 * (-0.5 + 0.5 + kLogSqrt2Pi)).epsilon(1e-12));
  pol.log_std.setConstant(0.0);
  CHECK(pol.entropy() == doctest::Approx(3.0 * (0.5 + kLogSqrt2Pi)));
}
