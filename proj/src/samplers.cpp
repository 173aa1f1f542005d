#include "amala/samplers.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace amala {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp_log_alpha(double log_ratio) {
  if (std::isnan(log_ratio)) return kNegInf;
  return std::min(0.0, log_ratio);
}

bool accept(double log_alpha, Rng& rng) { return std::log(rng.uniform()) < log_alpha; }

// Evaluates the target at a candidate. Returns false when the value or the
// gradient is not finite (or the model throws), which auto-rejects the move.
bool evaluate_candidate(const Target& target, const Vec& z, double b, ChainState& out) {
  try {
    out.z = z;
    out.logp = target.log_density_and_gradient(z, out.grad);
    if (!std::isfinite(out.logp) || !out.grad.allFinite()) return false;
    out.drift = truncated_drift(out.grad, b);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

void ProposalSpec::validate() const {
  if (!(std::isfinite(delta) && delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (!(std::isfinite(b) && b > 0.0)) throw std::invalid_argument("b must be > 0");
  if (!(std::isfinite(eps) && eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

Vec truncated_drift(const Vec& grad, double b) {
  if (!grad.allFinite()) throw std::domain_error("truncated_drift: non-finite gradient");
  const double norm = grad.norm();
  if (norm <= b) return grad;
  return (b / norm) * grad;
}

ChainState make_chain_state(const Target& target, Vec z, double b) {
  ChainState s;
  s.logp = target.log_density_and_gradient(z, s.grad);
  s.z = std::move(z);
  s.drift = truncated_drift(s.grad, b);
  return s;
}

double proposal_logpdf(const Vec& from, const Vec& to, const Vec& drift, const ProposalSpec& spec) {
  const auto l = static_cast<double>(from.size());
  const double d2 = drift.squaredNorm();
  const Vec r = to - from - spec.delta * drift;
  const double dr = drift.dot(r);
  // (delta Sigma)^{-1} = (1/(delta eps)) (I - D D^T / (eps + |D|^2))
  const double quad = (r.squaredNorm() - dr * dr / (spec.eps + d2)) / (spec.delta * spec.eps);
  // log det(delta Sigma) = l log delta + (l-1) log eps + log(eps + |D|^2)
  const double logdet =
      l * std::log(spec.delta) + (l - 1.0) * std::log(spec.eps) + std::log(spec.eps + d2);
  return -0.5 * (l * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

double mala_proposal_logpdf(const Vec& from, const Vec& to, const Vec& drift, double delta) {
  const auto l = static_cast<double>(from.size());
  const Vec r = to - from - 0.5 * delta * drift;
  return -0.5 * (l * std::log(2.0 * std::numbers::pi * delta) + r.squaredNorm() / delta);
}

StepOutcome amala_step(const Target& target, const ChainState& state, const ProposalSpec& spec,
                       Rng& rng) {
  const Vec& d = state.drift;
  Vec cand = state.z + spec.delta * d + std::sqrt(spec.delta * spec.eps) * rng.normal_vector(d.size());
  if (d.squaredNorm() > 0.0) cand += std::sqrt(spec.delta) * rng.normal() * d;

  ChainState next;
  double log_alpha = kNegInf;
  if (evaluate_candidate(target, cand, spec.b, next)) {
    const double forward = proposal_logpdf(state.z, next.z, d, spec);
    const double backward = proposal_logpdf(next.z, state.z, next.drift, spec);
    log_alpha = clamp_log_alpha(next.logp - state.logp + backward - forward);
  }

  StepOutcome out;
  out.log_alpha = log_alpha;
  out.accepted = accept(log_alpha, rng);
  out.accept_fraction = out.accepted ? 1.0 : 0.0;
  out.state = out.accepted ? std::move(next) : state;
  return out;
}

StepOutcome mala_step(const Target& target, const ChainState& state, const ProposalSpec& spec,
                      Rng& rng) {
  const Vec& d = state.drift;
  const Vec cand =
      state.z + 0.5 * spec.delta * d + std::sqrt(spec.delta) * rng.normal_vector(d.size());

  ChainState next;
  double log_alpha = kNegInf;
  if (evaluate_candidate(target, cand, spec.b, next)) {
    const double forward = mala_proposal_logpdf(state.z, next.z, d, spec.delta);
    const double backward = mala_proposal_logpdf(next.z, state.z, next.drift, spec.delta);
    log_alpha = clamp_log_alpha(next.logp - state.logp + backward - forward);
  }

  StepOutcome out;
  out.log_alpha = log_alpha;
  out.accepted = accept(log_alpha, rng);
  out.accept_fraction = out.accepted ? 1.0 : 0.0;
  out.state = out.accepted ? std::move(next) : state;
  return out;
}

StepOutcome hybrid_gibbs_step(const Target& target, const ChainState& state, double per_coord_std,
                              Rng& rng, double b) {
  if (!(per_coord_std > 0.0)) throw std::invalid_argument("per_coord_std must be > 0");

  Vec z = state.z;
  double logp = state.logp;
  Index moved = 0;
  for (Index i = 0; i < z.size(); ++i) {
    const double old = z[i];
    z[i] = old + per_coord_std * rng.normal();
    double cand = kNegInf;
    try {
      cand = target.log_density(z);
    } catch (const std::exception&) {
      cand = kNegInf;
    }
    const double log_alpha = std::isfinite(cand) ? clamp_log_alpha(cand - logp) : kNegInf;
    if (accept(log_alpha, rng)) {
      logp = cand;
      ++moved;
    } else {
      z[i] = old;
    }
  }

  StepOutcome out;
  out.accepted = moved > 0;
  out.accept_fraction = z.size() > 0 ? static_cast<double>(moved) / static_cast<double>(z.size()) : 0.0;
  if (!out.accepted) {
    out.state = state;
    return out;
  }
  if (state.grad.size() == state.z.size() && state.z.size() > 0) {
    out.state = make_chain_state(target, std::move(z), b);
  } else {
    out.state.z = std::move(z);
    out.state.logp = logp;
  }
  return out;
}

double anisotropic_term_amplitude(const Vec& drift) { return drift.squaredNorm(); }

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::amala: return "amala";
    case SamplerKind::mala: return "mala";
    case SamplerKind::hybrid_gibbs: return "hybrid-gibbs";
  }
  return "?";
}

std::string to_string(Blocking blocking) {
  return blocking == Blocking::joint ? "joint" : "per-block";
}

SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "amala") return SamplerKind::amala;
  if (s == "mala") return SamplerKind::mala;
  if (s == "hybrid-gibbs") return SamplerKind::hybrid_gibbs;
  throw std::invalid_argument("unknown sampler '" + s + "' (expected amala, mala or hybrid-gibbs)");
}

Blocking parse_blocking(const std::string& s) {
  if (s == "joint") return Blocking::joint;
  if (s == "per-block") return Blocking::per_block;
  throw std::invalid_argument("unknown blocking '" + s + "' (expected joint or per-block)");
}

void SamplerConfig::validate() const {
  spec.validate();
  if (!(std::isfinite(gibbs_std) && gibbs_std > 0.0)) {
    throw std::invalid_argument("gibbs_std must be > 0");
  }
}

MarkovSampler::MarkovSampler(SamplerConfig config) : config_(config) { config_.validate(); }

ChainState MarkovSampler::init_state(const Target& target, Vec z) const {
  if (config_.kind == SamplerKind::hybrid_gibbs) {
    ChainState s;
    s.logp = target.log_density(z);
    s.z = std::move(z);
    return s;
  }
  return make_chain_state(target, std::move(z), config_.spec.b);
}

StepOutcome MarkovSampler::step(const Target& target, const ChainState& state, Rng& rng) const {
  switch (config_.kind) {
    case SamplerKind::amala: return amala_step(target, state, config_.spec, rng);
    case SamplerKind::mala: return mala_step(target, state, config_.spec, rng);
    case SamplerKind::hybrid_gibbs:
      return hybrid_gibbs_step(target, state, config_.gibbs_std, rng, config_.spec.b);
  }
  throw std::logic_error("unreachable sampler kind");
}

SweepResult MarkovSampler::sweep(const LatentModel& model, const Theta& theta, Vec& z,
                                 Rng& rng) const {
  return sweep_impl(model, theta, z, rng, true);
}

SweepResult MarkovSampler::sweep_serial(const LatentModel& model, const Theta& theta, Vec& z,
                                        Rng& rng) const {
  return sweep_impl(model, theta, z, rng, false);
}

SweepResult MarkovSampler::sweep_impl(const LatentModel& model, const Theta& theta, Vec& z,
                                      Rng& rng, bool parallel) const {
  const Index blocks = model.block_count();
  if (config_.blocking == Blocking::joint || blocks == 1) {
    const PosteriorTarget target(model, theta);
    StepOutcome out = step(target, init_state(target, z), rng);
    z = std::move(out.state.z);
    return {out.accepted, out.accept_fraction};
  }

  const std::uint64_t sweep_seed = rng.next_u64();
  std::vector<char> accepted(static_cast<std::size_t>(blocks), 0);
  std::vector<double> fraction(static_cast<std::size_t>(blocks), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static) if (parallel)
  for (Index b = 0; b < blocks; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    try {
      Rng block_rng(derive_seed(sweep_seed, static_cast<std::uint64_t>(b)));
      const BlockRange r = model.block(b);
      const BlockTarget target(model, theta, b);
      StepOutcome out = step(target, init_state(target, z.segment(r.offset, r.size)), block_rng);
      z.segment(r.offset, r.size) = out.state.z;
      accepted[ub] = out.accepted ? 1 : 0;
      fraction[ub] = out.accept_fraction;
    } catch (...) {
      errors[ub] = std::current_exception();
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  SweepResult result;
  double total = 0.0;
  for (std::size_t b = 0; b < accepted.size(); ++b) {
    result.accepted = result.accepted || accepted[b] != 0;
    total += fraction[b];
  }
  result.accept_fraction = total / static_cast<double>(blocks);
  return result;
}

}  // namespace amala
