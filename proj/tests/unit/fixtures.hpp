#pragma once

#include <cmath>

#include "amala/model.hpp"

namespace fixtures {

using amala::Index;
using amala::Theta;
using amala::Vec;

struct StdNormal final : amala::Target {
  Index dim() const override { return 1; }
  double log_density(const Vec& x) const override { return -0.5 * x[0] * x[0]; }
  Vec gradient(const Vec& x) const override { return -x; }
};

// Student t with 5 degrees of freedom.
struct StudentT5 final : amala::Target {
  Index dim() const override { return 1; }
  double log_density(const Vec& x) const override { return -3.0 * std::log1p(x[0] * x[0] / 5.0); }
  Vec gradient(const Vec& x) const override {
    Vec g(1);
    g[0] = -6.0 * x[0] / (5.0 + x[0] * x[0]);
    return g;
  }
};

// N(0, diag(scales^2)).
struct DiagGaussian final : amala::Target {
  Vec scales;
  explicit DiagGaussian(Vec s) : scales(std::move(s)) {}
  Index dim() const override { return scales.size(); }
  double log_density(const Vec& x) const override {
    return -0.5 * x.cwiseQuotient(scales).squaredNorm();
  }
  Vec gradient(const Vec& x) const override {
    return -x.cwiseQuotient(scales.cwiseProduct(scales));
  }
};

// Log-density of `inner` with a gradient that is always zero.
struct ZeroGradient final : amala::Target {
  const amala::Target& inner;
  explicit ZeroGradient(const amala::Target& t) : inner(t) {}
  Index dim() const override { return inner.dim(); }
  double log_density(const Vec& x) const override { return inner.log_density(x); }
  Vec gradient(const Vec& x) const override { return Vec::Zero(x.size()); }
};

struct Offset final : amala::Target {
  const amala::Target& inner;
  double c;
  Offset(const amala::Target& t, double shift) : inner(t), c(shift) {}
  Index dim() const override { return inner.dim(); }
  double log_density(const Vec& x) const override { return inner.log_density(x) + c; }
  Vec gradient(const Vec& x) const override { return inner.gradient(x); }
};

// z | theta ~ N(theta, 1), one latent coordinate, S(z) = z.
class GaussianLatent : public amala::LatentModel {
 public:
  Index latent_dim() const override { return 1; }
  Index stat_dim() const override { return 1; }
  Vec suff_stats(const Vec& z) const override { return z; }
  Theta m_step(const Vec& s) const override { return {s}; }
  bool theta_in_domain(const Theta& t) const override { return t.values.allFinite(); }
  double stat_norm_bound(double r) const override { return r; }
  double log_posterior(const Vec& z, const Theta& t) const override {
    return -0.5 * (z[0] - t.values[0]) * (z[0] - t.values[0]);
  }
  Vec grad_log_posterior(const Vec& z, const Theta& t) const override { return t.values - z; }
};

class BrokenGradient final : public GaussianLatent {
 public:
  Vec grad_log_posterior(const Vec& z, const Theta&) const override { return Vec::Zero(z.size()); }
};

}  // namespace fixtures
