#include "amala/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>

namespace amala {

BlockRange LatentModel::block(Index b) const {
  if (b != 0) throw std::out_of_range("LatentModel::block: single-block model");
  return {0, latent_dim()};
}

double LatentModel::block_log_posterior(Index b, const Vec& z_block, const Theta& theta,
                                        Vec* grad) const {
  if (b != 0 || block_count() != 1) {
    throw std::logic_error("block_log_posterior must be overridden by multi-block models");
  }
  if (grad != nullptr) return log_posterior_and_grad(z_block, theta, *grad);
  return log_posterior(z_block, theta);
}

Theta LatentModel::probe_theta(Rng& rng) const {
  return m_step(suff_stats(rng.normal_vector(latent_dim())));
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  Vec g(x.size());
  Vec probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double gradient_relative_error(const Vec& analytic, const Vec& numeric) {
  if (analytic.size() != numeric.size()) return std::numeric_limits<double>::infinity();
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
  const double err = (analytic - numeric).cwiseAbs().maxCoeff() / scale;
  return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
}

ValidationReport validate_model(const LatentModel& model, int probe_count, std::uint64_t seed,
                                double tolerance) {
  if (probe_count < 1) throw std::invalid_argument("validate_model: probe_count must be >= 1");

  ValidationReport report;
  Rng rng(seed);
  const Index l = model.latent_dim();

  for (int p = 0; p < probe_count; ++p) {
    ProbeResult probe;
    probe.index = p;
    try {
      const Vec z = rng.normal_vector(l);
      const Theta theta = model.probe_theta(rng);

      Vec grad;
      const double value = model.log_posterior_and_grad(z, theta, grad);
      const Vec fd = finite_difference_gradient(
          [&](const Vec& x) { return model.log_posterior(x, theta); }, z);
      probe.grad_error = gradient_relative_error(grad, fd);
      if (!std::isfinite(value)) probe.grad_error = std::numeric_limits<double>::infinity();

      if (model.block_count() > 1) {
        double total = 0.0;
        for (Index b = 0; b < model.block_count(); ++b) {
          const BlockRange r = model.block(b);
          Vec gb;
          total += model.block_log_posterior(b, z.segment(r.offset, r.size), theta, &gb);
          probe.grad_error = std::max(
              probe.grad_error, gradient_relative_error(gb, grad.segment(r.offset, r.size)));
        }
        // Block factors may drop theta-only constants; compare through a
        // second point so the additive constant cancels.
        const Vec z2 = 0.5 * z;
        double total2 = 0.0;
        for (Index b = 0; b < model.block_count(); ++b) {
          const BlockRange r = model.block(b);
          total2 += model.block_log_posterior(b, z2.segment(r.offset, r.size), theta, nullptr);
        }
        const double lhs = total - total2;
        const double rhs = value - model.log_posterior(z2, theta);
        const double rel = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
        if (!(rel <= 1e-8)) probe.grad_error = std::max(probe.grad_error, rel);
      }

      const Vec s = model.suff_stats(z);
      probe.stat_bound_ok = s.allFinite() && s.norm() <= model.stat_norm_bound(z.norm());
      probe.domain_ok = model.theta_in_domain(model.m_step(s)) && probe.stat_bound_ok;
    } catch (const std::exception& e) {
      probe.error = e.what();
      probe.grad_error = std::numeric_limits<double>::infinity();
    }

    report.max_grad_error = std::max(report.max_grad_error, probe.grad_error);
    if (!probe.domain_ok) ++report.domain_violations;
    if (!probe.error.empty() || !(probe.grad_error <= tolerance) || !probe.domain_ok) {
      ++report.failures;
    }
    report.probes.push_back(std::move(probe));
  }
  report.passed = report.failures == 0;
  return report;
}

}  // namespace amala
