#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "amala/model.hpp"
#include "amala/samplers.hpp"

namespace amala {

/// Zero-mean Gaussian target with covariance R diag(eigenvalues) R^T.
class AnisoGaussianTarget final : public Target {
 public:
  AnisoGaussianTarget(Vec eigenvalues, Mat rotation);

  /// Eigenvalues linspace(eig_min, eig_max, dim) and a Haar-random rotation
  /// drawn from `rotation_seed`.
  static AnisoGaussianTarget make(Index dim, double eig_min, double eig_max,
                                  std::uint64_t rotation_seed);

  Index dim() const override { return eigenvalues_.size(); }
  double log_density(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  double log_density_and_gradient(const Vec& x, Vec& grad) const override;

  const Vec& eigenvalues() const { return eigenvalues_; }
  const Mat& rotation() const { return rotation_; }
  Mat covariance() const;
  const Mat& precision() const { return precision_; }

 private:
  Vec eigenvalues_;
  Mat rotation_;
  Mat precision_;
};

/// Unnormalized log-density -x^T P x / 2 and its gradient -P x.
std::pair<double, Vec> benchmark_target_logpdf_grad(const AnisoGaussianTarget& target, const Vec& x);

/// Balanced one-way random-effects model
///   z_i ~ N(mu, tau2),  y_ij | z_i ~ N(z_i, sigma2),  i < n, j < J,
/// with theta = (mu, tau2, sigma2) and
///   S(z) = (sum_i z_i, sum_i z_i^2, sum_ij (y_ij - z_i)^2).
/// Each group is one posterior block.
class RandomEffectsModel final : public LatentModel {
 public:
  static constexpr double kVarianceFloor = 1e-10;

  explicit RandomEffectsModel(Mat y);

  static RandomEffectsModel simulate(Index n_groups, Index n_reps, double mu, double tau2,
                                     double sigma2, Rng& rng);
  /// CSV rows "group,rep,value".
  static RandomEffectsModel read_csv(const std::string& path);
  void write_csv(std::ostream& os) const;

  Index n_groups() const { return y_.rows(); }
  Index n_reps() const { return y_.cols(); }
  const Mat& data() const { return y_; }
  const Vec& group_means() const { return group_mean_; }

  Index latent_dim() const override { return n_groups(); }
  Index stat_dim() const override { return 3; }
  Vec suff_stats(const Vec& z) const override;
  Theta m_step(const Vec& s) const override;
  bool theta_in_domain(const Theta& theta) const override;
  double stat_norm_bound(double z_norm) const override;

  double log_posterior(const Vec& z, const Theta& theta) const override;
  Vec grad_log_posterior(const Vec& z, const Theta& theta) const override;
  double log_posterior_and_grad(const Vec& z, const Theta& theta, Vec& grad) const override;

  Index block_count() const override { return n_groups(); }
  BlockRange block(Index b) const override { return {b, 1}; }
  double block_log_posterior(Index b, const Vec& z_block, const Theta& theta,
                             Vec* grad) const override;

  Theta probe_theta(Rng& rng) const override;
  /// Group means: z = 0 would put theta_0 at the variance floor.
  Vec default_latent() const override { return group_mean_; }

  /// Closed-form Gaussian marginal log-likelihood log g(y; theta).
  double observed_log_likelihood(const Theta& theta) const;

 private:
  double group_term(Index i, double z, double mu, double tau2, double sigma2, double* grad) const;

  Mat y_;
  Vec group_sum_;
  Vec group_sq_;
  Vec group_mean_;
};

/// Exact maximizer of the observed likelihood (balanced one-way ANOVA):
///   mu = ybar, sigma2 = SSW / (n (J - 1)), tau2 = (SSB / n - sigma2) / J,
/// falling back to tau2 = 0, sigma2 = (SSW + SSB) / (nJ) when that is negative.
/// Boundary values are returned unfloored.
Theta ml_oracle(const RandomEffectsModel& model);

/// z_i ~ N(m_i, v), v = (1/tau2 + J/sigma2)^-1, m_i = v (mu/tau2 + sum_j y_ij / sigma2).
Vec exact_posterior_sample(const RandomEffectsModel& model, const Theta& theta, Rng& rng);

/// Direct posterior draws, used to separate sampler error from SAEM error.
class ExactPosteriorSampler final : public LatentSampler {
 public:
  SweepResult sweep(const LatentModel& model, const Theta& theta, Vec& z, Rng& rng) const override;
};

}  // namespace amala
