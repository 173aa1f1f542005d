#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <Eigen/Cholesky>

#include "amala/diagnostics.hpp"
#include "amala/toy_models.hpp"

using namespace amala;

TEST_CASE("anisotropic target construction") {
  const auto t = AnisoGaussianTarget::make(10, 1.0, 10.0, 42);
  CHECK(t.eigenvalues()[0] == 1.0);
  CHECK(t.eigenvalues()[9] == doctest::Approx(10.0));
  const Mat& r = t.rotation();
  CHECK((r.transpose() * r - Mat::Identity(10, 10)).norm() < 1e-12);
  CHECK((t.covariance() * t.precision() - Mat::Identity(10, 10)).norm() < 1e-10);
  const auto again = AnisoGaussianTarget::make(10, 1.0, 10.0, 42);
  CHECK(again.rotation() == r);
  CHECK(AnisoGaussianTarget::make(10, 1.0, 10.0, 43).rotation() != r);
  CHECK(AnisoGaussianTarget::make(1, 2.0, 2.0, 1).eigenvalues()[0] == 2.0);
}

TEST_CASE("benchmark target log-density and gradient") {
  const auto t = AnisoGaussianTarget::make(10, 1.0, 10.0, 42);
  CHECK(benchmark_target_logpdf_grad(t, Vec::Zero(10)).second == Vec::Zero(10));
  const AnisoGaussianTarget id(Vec::Ones(3), Mat::Identity(3, 3));
  const auto [lp, g] = benchmark_target_logpdf_grad(id, Vec::Unit(3, 0));
  CHECK(lp == doctest::Approx(-0.5));
  CHECK((g + Vec::Unit(3, 0)).norm() < 1e-15);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vec x = 2.0 * rng.normal_vector(10);
    const Vec fd = finite_difference_gradient([&](const Vec& v) { return t.log_density(v); }, x);
    CHECK(gradient_relative_error(benchmark_target_logpdf_grad(t, x).second, fd) <= 1e-6);
    Vec g2;
    CHECK(t.log_density_and_gradient(x, g2) == doctest::Approx(t.log_density(x)));
    CHECK((g2 - t.gradient(x)).norm() < 1e-12);
  }
}

TEST_CASE("ML oracle on degenerate data") {
  const RandomEffectsModel m(Mat::Constant(5, 3, 4.0));
  const Theta th = ml_oracle(m);
  CHECK(th.values[0] == 4.0);
  CHECK(th.values[1] == 0.0);
  CHECK(th.values[2] == 0.0);
}

TEST_CASE("ML oracle is consistent with the simulation truth") {
  Rng rng(11);
  const auto m = RandomEffectsModel::simulate(200, 10, 1.0, 1.0, 1.0, rng);
  const Vec th = ml_oracle(m).values;
  CHECK(std::abs(th[0] - 1.0) <= 4.0 * std::sqrt(1.1 / 200.0));
  CHECK(std::abs(th[1] - 1.0) <= 4.0 * std::sqrt(2.0 * 1.1 * 1.1 / 199.0));
  CHECK(std::abs(th[2] - 1.0) <= 4.0 * std::sqrt(2.0 / 1800.0));
}

TEST_CASE("ML oracle beats every point of an 11^3 grid around it") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    const auto m = RandomEffectsModel::simulate(40, 6, 0.5, 0.8, 1.5, rng);
    const Vec th = ml_oracle(m).values;
    REQUIRE(th[1] > 0.0);
    const double best = m.observed_log_likelihood({th});
    long beaten = 0;
    for (int a = -5; a <= 5; ++a)
      for (int b = -5; b <= 5; ++b)
        for (int c = -5; c <= 5; ++c) {
          if (a == 0 && b == 0 && c == 0) continue;
          const Vec p = (Vec(3) << th[0] + 0.05 * a, th[1] * std::exp(0.05 * b), th[2] * std::exp(0.05 * c)).finished();
          if (m.observed_log_likelihood({p}) >= best) ++beaten;
        }
    CHECK(beaten == 0);
  }
}

TEST_CASE("ML oracle falls back to the boundary when between-group spread is small") {
  Mat y(4, 3);
  y << 0.0, 1.0, 2.0, 0.1, 1.1, 1.8, -0.1, 0.9, 2.2, 0.0, 1.0, 2.0;
  const RandomEffectsModel m(y);
  const Vec th = ml_oracle(m).values;
  CHECK(th[1] == 0.0);
  const double grand = y.mean();
  CHECK(th[2] == doctest::Approx((y.array() - grand).square().sum() / 12.0));
}

TEST_CASE("m_step closed form and variance floor") {
  Rng rng(3);
  const auto m = RandomEffectsModel::simulate(10, 4, 0.0, 1.0, 1.0, rng);
  const Vec z = rng.normal_vector(10);
  const Vec s = m.suff_stats(z);
  CHECK(s[0] == doctest::Approx(z.sum()));
  CHECK(s[1] == doctest::Approx(z.squaredNorm()));
  CHECK(s[2] == doctest::Approx((m.data().colwise() - z).squaredNorm()));
  const Vec th = m.m_step(s).values;
  CHECK(th[0] == doctest::Approx(z.mean()));
  CHECK(th[1] == doctest::Approx(z.squaredNorm() / 10.0 - z.mean() * z.mean()));
  CHECK(th[2] == doctest::Approx(s[2] / 40.0));
  const Vec floored = m.m_step(Vec::Zero(3)).values;
  CHECK(floored[1] == RandomEffectsModel::kVarianceFloor);
  CHECK(floored[2] == RandomEffectsModel::kVarianceFloor);
  CHECK(m.theta_in_domain({floored}));
  CHECK_FALSE(m.theta_in_domain({(Vec(3) << 0.0, -1.0, 1.0).finished()}));
}

TEST_CASE("exact posterior limits") {
  Rng rng(5);
  const auto big = RandomEffectsModel::simulate(3, 10000, 0.0, 1.0, 1.0, rng);
  const Theta th{(Vec(3) << 0.0, 1.0, 1.0).finished()};
  Vec mean_draw = Vec::Zero(3);
  for (int k = 0; k < 200; ++k) mean_draw += exact_posterior_sample(big, th, rng);
  mean_draw /= 200.0;
  CHECK((mean_draw - big.group_means()).cwiseAbs().maxCoeff() <= 1e-3);

  const auto small = RandomEffectsModel::simulate(4, 5, 0.0, 1.0, 1.0, rng);
  const Theta tight{(Vec(3) << 3.0, 1e-12, 1.0).finished()};
  const Vec z = exact_posterior_sample(small, tight, rng);
  CHECK((z.array() - 3.0).abs().maxCoeff() <= 1e-4);
}

TEST_CASE("exact posterior draws match the conjugate moments") {
  Rng rng(6);
  const auto m = RandomEffectsModel::simulate(3, 4, 1.0, 2.0, 0.5, rng);
  const Theta th{(Vec(3) << 0.7, 1.5, 0.8).finished()};
  const double v = 1.0 / (1.0 / 1.5 + 4.0 / 0.8);
  const int n = 100000;
  std::vector<std::vector<double>> cols(3);
  for (int k = 0; k < n; ++k) {
    const Vec z = exact_posterior_sample(m, th, rng);
    for (int i = 0; i < 3; ++i) cols[static_cast<std::size_t>(i)].push_back(z[i]);
  }
  for (int i = 0; i < 3; ++i) {
    const double mi = v * (0.7 / 1.5 + m.data().row(i).sum() / 0.8);
    const Moments mo = moments(cols[static_cast<std::size_t>(i)]);
    CHECK(std::abs(mo.mean - mi) <= 5.0 * std::sqrt(v / n));
    CHECK(std::abs(mo.variance - v) <= 5.0 * v * std::sqrt(2.0 / n));
  }
}

TEST_CASE("toy posterior gradient, block factors and marginal likelihood") {
  Rng rng(7);
  const auto m = RandomEffectsModel::simulate(6, 3, 1.0, 1.0, 1.0, rng);
  const Theta th{(Vec(3) << 0.3, 0.7, 1.2).finished()};
  const Vec z = rng.normal_vector(6);
  const Vec fd = finite_difference_gradient([&](const Vec& x) { return m.log_posterior(x, th); }, z);
  CHECK(gradient_relative_error(m.grad_log_posterior(z, th), fd) <= 1e-6);
  double total = 0.0;
  for (Index b = 0; b < m.block_count(); ++b) {
    total += m.block_log_posterior(b, z.segment(b, 1), th, nullptr);
  }
  const Vec z2 = z + Vec::Ones(6);
  double total2 = 0.0;
  for (Index b = 0; b < m.block_count(); ++b) {
    total2 += m.block_log_posterior(b, z2.segment(b, 1), th, nullptr);
  }
  CHECK(total2 - total == doctest::Approx(m.log_posterior(z2, th) - m.log_posterior(z, th)));

  // marginal of one group: y_i ~ N(mu 1, sigma2 I + tau2 11^T)
  double ll = 0.0;
  const Mat cov = 1.2 * Mat::Identity(3, 3) + 0.7 * Mat::Ones(3, 3);
  const Eigen::LLT<Mat> llt(cov);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  for (Index i = 0; i < 6; ++i) {
    const Vec r = m.data().row(i).transpose().array() - 0.3;
    ll += -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + logdet + r.dot(llt.solve(r)));
  }
  CHECK(m.observed_log_likelihood(th) == doctest::Approx(ll).epsilon(1e-12));
}

TEST_CASE("toy data CSV round-trip") {
  Rng rng(8);
  const auto m = RandomEffectsModel::simulate(7, 3, 1.0, 1.0, 1.0, rng);
  const auto dir = std::filesystem::path(AMALA_TEST_TMP);
  std::filesystem::create_directories(dir);
  const auto path = dir / "toy.csv";
  {
    std::ofstream os(path);
    m.write_csv(os);
  }
  const auto back = RandomEffectsModel::read_csv(path.string());
  CHECK(back.data() == m.data());
  {
    std::ofstream os(path);
    os << "group,rep,value\n0,0,1.0\n0,1,2.0\n1,0,3.0\n";
  }
  CHECK_THROWS(RandomEffectsModel::read_csv(path.string()));
}
