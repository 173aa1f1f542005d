#pragma once

#include <memory>
#include <string>

#include "amala/model.hpp"
#include "amala/rng.hpp"

namespace amala {

/// AMALA proposal N(x + delta D(x), delta (eps I + D(x) D(x)^T)) in factored
/// form. The dense covariance is never built.
struct ProposalSpec {
  double delta = 1e-3;  ///< step scale
  double b = 1000.0;    ///< drift truncation threshold
  double eps = 1e-4;    ///< isotropic regularization

  /// Throws std::invalid_argument unless all three are finite and positive.
  void validate() const;
  bool operator==(const ProposalSpec&) const = default;
};

/// Current chain position with the target quantities evaluated there.
struct ChainState {
  Vec z;
  double logp = 0.0;
  Vec grad;
  Vec drift;
};

struct StepOutcome {
  ChainState state;
  bool accepted = false;
  double log_alpha = 0.0;  ///< min(0, log acceptance ratio); 0 for Gibbs sweeps
  double accept_fraction = 0.0;
};

/// (b / max(b, ||grad||)) grad. Throws std::domain_error on non-finite input.
Vec truncated_drift(const Vec& grad, double b);

/// Evaluates logp, gradient and truncated drift at z.
ChainState make_chain_state(const Target& target, Vec z, double b);

/// Log-density at `to` of N(from + delta*drift, delta*(eps I + drift drift^T)),
/// via Sherman-Morrison and the matrix determinant lemma.
double proposal_logpdf(const Vec& from, const Vec& to, const Vec& drift, const ProposalSpec& spec);

/// Log-density at `to` of N(from + (delta/2)*drift, delta I).
double mala_proposal_logpdf(const Vec& from, const Vec& to, const Vec& drift, double delta);

/// One AMALA transition. The candidate's gradient is needed for the reverse
/// proposal density, so an accepted step returns it cached.
StepOutcome amala_step(const Target& target, const ChainState& state, const ProposalSpec& spec,
                       Rng& rng);

/// One MALA transition with mean z + (delta/2) D(z) and covariance delta I.
StepOutcome mala_step(const Target& target, const ChainState& state, const ProposalSpec& spec,
                      Rng& rng);

/// One systematic-scan sweep of coordinate-wise random-walk Metropolis.
/// accepted is true iff at least one coordinate moved; accept_fraction is the
/// share of coordinates that moved. Gradient and drift are refreshed only when
/// the incoming state carried them.
StepOutcome hybrid_gibbs_step(const Target& target, const ChainState& state, double per_coord_std,
                              Rng& rng, double b = 1000.0);

/// ||D||^2, the non-zero eigenvalue of D D^T.
double anisotropic_term_amplitude(const Vec& drift);

enum class SamplerKind { amala, mala, hybrid_gibbs };
enum class Blocking { joint, per_block };

std::string to_string(SamplerKind kind);
std::string to_string(Blocking blocking);
SamplerKind parse_sampler_kind(const std::string& s);
Blocking parse_blocking(const std::string& s);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::amala;
  ProposalSpec spec;
  double gibbs_std = 1.0;
  Blocking blocking = Blocking::joint;

  void validate() const;
  bool operator==(const SamplerConfig&) const = default;
};

struct SweepResult {
  bool accepted = false;
  double accept_fraction = 0.0;
};

/// Simulation step used by the SAEM engine: one transition of a kernel that
/// leaves p_theta(.|y) invariant, applied in place to z.
class LatentSampler {
 public:
  virtual ~LatentSampler() = default;
  virtual SweepResult sweep(const LatentModel& model, const Theta& theta, Vec& z,
                            Rng& rng) const = 0;
};

/// AMALA / MALA / hybrid Gibbs over the model posterior.
///
/// Joint blocking proposes the whole latent at once. Per-block blocking runs
/// one independent transition per posterior factor (one image, one group);
/// each block draws from its own substream derived from a single value of the
/// caller's stream, so the result is identical for any thread count.
class MarkovSampler final : public LatentSampler {
 public:
  explicit MarkovSampler(SamplerConfig config);

  SweepResult sweep(const LatentModel& model, const Theta& theta, Vec& z,
                    Rng& rng) const override;
  /// Same transition as sweep() with the block loop run serially.
  SweepResult sweep_serial(const LatentModel& model, const Theta& theta, Vec& z, Rng& rng) const;

  const SamplerConfig& config() const { return config_; }
  StepOutcome step(const Target& target, const ChainState& state, Rng& rng) const;
  ChainState init_state(const Target& target, Vec z) const;

 private:
  SweepResult sweep_impl(const LatentModel& model, const Theta& theta, Vec& z, Rng& rng,
                         bool parallel) const;
  SamplerConfig config_;
};

}  // namespace amala
