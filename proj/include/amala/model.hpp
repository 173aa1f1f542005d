#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "amala/rng.hpp"

namespace amala {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Model parameter. The layout of `values` is owned by the concrete model,
/// which also owns the domain check (LatentModel::theta_in_domain).
struct Theta {
  Vec values;
};

/// Contiguous slice of the latent vector on which the posterior factorizes.
struct BlockRange {
  Index offset = 0;
  Index size = 0;
};

/// A differentiable unnormalized log-density on R^dim.
class Target {
 public:
  virtual ~Target() = default;

  virtual Index dim() const = 0;
  virtual double log_density(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;

  virtual double log_density_and_gradient(const Vec& x, Vec& grad) const {
    grad = gradient(x);
    return log_density(x);
  }
};

/// Latent-variable model in the curved exponential family.
///
/// The complete likelihood is exp(-psi(theta) + <S(z), phi(theta)>) and the
/// maximizer theta_hat(s) of the surrogate L(s, .) is available in closed form
/// through m_step. Only the unnormalized posterior of the latents is exposed.
///
/// Implementations must be safe to call concurrently from several threads.
class LatentModel {
 public:
  virtual ~LatentModel() = default;

  virtual Index latent_dim() const = 0;
  virtual Index stat_dim() const = 0;

  virtual Vec suff_stats(const Vec& z) const = 0;
  virtual Theta m_step(const Vec& s) const = 0;
  virtual bool theta_in_domain(const Theta& theta) const = 0;
  virtual bool stat_in_domain(const Vec& s) const { return s.allFinite(); }

  /// Polynomial bound P with ||S(z)|| <= P(||z||).
  virtual double stat_norm_bound(double z_norm) const = 0;

  virtual double log_posterior(const Vec& z, const Theta& theta) const = 0;
  virtual Vec grad_log_posterior(const Vec& z, const Theta& theta) const = 0;
  virtual double log_posterior_and_grad(const Vec& z, const Theta& theta, Vec& grad) const {
    grad = grad_log_posterior(z, theta);
    return log_posterior(z, theta);
  }

  // Block structure. Given theta, log p(z|y) = sum_b f_b(z_b) + const.
  // The default is a single block covering the whole latent.
  virtual Index block_count() const { return 1; }
  virtual BlockRange block(Index b) const;
  /// f_b evaluated on the block's own coordinates; grad may be null.
  virtual double block_log_posterior(Index b, const Vec& z_block, const Theta& theta,
                                     Vec* grad) const;

  /// Parameter used by validate_model for gradient probes.
  virtual Theta probe_theta(Rng& rng) const;
  /// Starting latent (also the default reinitialization point).
  virtual Vec default_latent() const { return Vec::Zero(latent_dim()); }
};

/// Binds a LatentModel to a parameter value: the posterior p_theta(.|y).
class PosteriorTarget final : public Target {
 public:
  PosteriorTarget(const LatentModel& model, const Theta& theta) : model_(model), theta_(theta) {}

  Index dim() const override { return model_.latent_dim(); }
  double log_density(const Vec& z) const override { return model_.log_posterior(z, theta_); }
  Vec gradient(const Vec& z) const override { return model_.grad_log_posterior(z, theta_); }
  double log_density_and_gradient(const Vec& z, Vec& grad) const override {
    return model_.log_posterior_and_grad(z, theta_, grad);
  }

 private:
  const LatentModel& model_;
  const Theta& theta_;
};

/// One factor f_b of a block-separable posterior.
class BlockTarget final : public Target {
 public:
  BlockTarget(const LatentModel& model, const Theta& theta, Index b)
      : model_(model), theta_(theta), block_(b), size_(model.block(b).size) {}

  Index dim() const override { return size_; }
  double log_density(const Vec& zb) const override {
    return model_.block_log_posterior(block_, zb, theta_, nullptr);
  }
  Vec gradient(const Vec& zb) const override {
    Vec g;
    model_.block_log_posterior(block_, zb, theta_, &g);
    return g;
  }
  double log_density_and_gradient(const Vec& zb, Vec& grad) const override {
    return model_.block_log_posterior(block_, zb, theta_, &grad);
  }

 private:
  const LatentModel& model_;
  const Theta& theta_;
  Index block_;
  Index size_;
};

/// Central differences with step 1e-5 * (1 + |x_i|) per coordinate.
Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x);

/// max_i |g_i - g_fd_i| / max(1, max_i |g_fd_i|).
double gradient_relative_error(const Vec& analytic, const Vec& numeric);

struct ProbeResult {
  int index = 0;
  double grad_error = 0.0;
  bool domain_ok = true;
  bool stat_bound_ok = true;
  std::string error;
};

struct ValidationReport {
  std::vector<ProbeResult> probes;
  double max_grad_error = 0.0;
  int domain_violations = 0;
  int failures = 0;
  bool passed = false;
};

/// Probes the testable parts of the model contract at latents drawn from a
/// standard Gaussian: analytic gradient vs central finite differences, m_step
/// landing inside the domain, the declared bound on ||S(z)||, and agreement of
/// the block decomposition with the full posterior.
ValidationReport validate_model(const LatentModel& model, int probe_count, std::uint64_t seed,
                                double tolerance = 1e-5);

}  // namespace amala
