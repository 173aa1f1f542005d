#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "amala/model.hpp"
#include "amala/samplers.hpp"

namespace amala {

/// gamma_k = gamma0 * max(1, k - burn_in)^(-alpha_exponent), k >= 1.
struct StepSchedule {
  double gamma0 = 1.0;
  double alpha_exponent = 0.75;
  long burn_in = 100;

  double gamma(long k) const;
  /// gamma0 in (0, 1], alpha_exponent in (2/3, 1), burn_in >= 0.
  void validate() const;
  bool operator==(const StepSchedule&) const = default;
};

/// Truncation on random boundaries. K_q is the Euclidean ball of radius
/// radius0 * 2^q intersected with the model's statistic domain, and the jump
/// bound is eps_q = eps0 / max(1, q).
struct TruncationPolicy {
  double radius0 = 1e10;
  double eps0 = 1e10;
  Vec reinit_latent;
  Vec reinit_stat;

  double radius(long q) const;
  double jump_bound(long q) const;
  /// Psi(nu) = -floor(nu / 2); satisfies Psi(nu) > -nu for nu >= 1.
  static long psi(long nu) { return -(nu / 2); }

  /// Policy with reinit_latent = model.default_latent() and
  /// reinit_stat = S(reinit_latent), shrunk into K_0 when necessary.
  static TruncationPolicy for_model(const LatentModel& model, double radius0 = 1e10,
                                    double eps0 = 1e10);
  void validate(const LatentModel& model) const;
};

struct SaemState {
  long k = 0;
  Vec z;
  Vec s;
  Theta theta;
  long kappa = 0;  ///< truncation count
  long nu = 0;     ///< iterations since the last truncation
  long zeta = 0;   ///< index into the jump-bound sequence
};

enum class SaemEvent { accepted, truncated };

struct IterationRecord {
  long k = 0;
  SaemEvent event = SaemEvent::accepted;
  bool sampler_accepted = false;
  double accept_fraction = 0.0;
  double s_norm = 0.0;
};

/// Initial state (z_0, s_0, theta_0 = m_step(s_0)). Without an explicit
/// latent the policy's reinitialization pair is used.
SaemState initial_state(const LatentModel& model, const TruncationPolicy& policy,
                        const std::optional<Vec>& z0 = std::nullopt);

/// One iteration: simulation at theta_{k-1}, stochastic approximation,
/// truncation test, maximization. Sampler or m_step failures take the
/// reinitialization branch.
IterationRecord saem_iterate(SaemState& state, const LatentModel& model,
                             const LatentSampler& sampler, const StepSchedule& schedule,
                             const TruncationPolicy& policy, Rng& rng);

struct Trajectory {
  std::vector<Vec> theta;  ///< theta_k, k = 1..iterations
  std::vector<double> s_norm;
  std::vector<IterationRecord> records;
  SaemState final_state;

  long truncations() const;
  long truncations_after(long k) const;
};

struct RunOptions {
  std::optional<Vec> z0;
  bool keep_theta = true;
  std::function<void(const SaemState&, const IterationRecord&)> observer;
};

Trajectory run_saem(const LatentModel& model, const LatentSampler& sampler,
                    const StepSchedule& schedule, const TruncationPolicy& policy, long iterations,
                    std::uint64_t seed, const RunOptions& options = {});

/// Trajectory CSV: k, theta_0..theta_{p-1}, s_norm, event, accepted.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory,
                          const std::vector<std::string>& theta_names);

struct CltSummary {
  std::vector<double> values;
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::vector<double> bin_edges;   ///< standardized units
  std::vector<long> bin_counts;
  long total_truncations = 0;
};

/// Independent replicates with seeds base_seed + r, parallel across
/// replicates. Reports the final value of theta[coordinate].
CltSummary clt_study(const LatentModel& model, const LatentSampler& sampler,
                     const StepSchedule& schedule, const TruncationPolicy& policy,
                     long iterations, int replicates, std::uint64_t base_seed, Index coordinate,
                     const std::optional<Vec>& z0 = std::nullopt);

}  // namespace amala
