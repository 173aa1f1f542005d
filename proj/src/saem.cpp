#include "amala/saem.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <stdexcept>

#include "amala/csv.hpp"
#include "amala/diagnostics.hpp"
#include "amala/log.hpp"

namespace amala {

double StepSchedule::gamma(long k) const {
  const double j = static_cast<double>(std::max(1L, k - burn_in));
  return gamma0 * std::pow(j, -alpha_exponent);
}

void StepSchedule::validate() const {
  if (!(gamma0 > 0.0 && gamma0 <= 1.0)) throw std::invalid_argument("gamma0 must lie in (0, 1]");
  if (!(alpha_exponent > 2.0 / 3.0 && alpha_exponent < 1.0)) {
    throw std::invalid_argument("alpha_exponent must lie in (2/3, 1)");
  }
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
}

double TruncationPolicy::radius(long q) const {
  return radius0 * std::ldexp(1.0, static_cast<int>(std::min(q, 1000L)));
}

double TruncationPolicy::jump_bound(long q) const {
  return eps0 / static_cast<double>(std::max(1L, q));
}

TruncationPolicy TruncationPolicy::for_model(const LatentModel& model, double radius0,
                                             double eps0) {
  TruncationPolicy p;
  p.radius0 = radius0;
  p.eps0 = eps0;
  p.reinit_latent = model.default_latent();
  p.reinit_stat = model.suff_stats(p.reinit_latent);
  const double n = p.reinit_stat.norm();
  if (n > radius0) p.reinit_stat *= radius0 / n * (1.0 - 1e-12);
  p.validate(model);
  return p;
}

void TruncationPolicy::validate(const LatentModel& model) const {
  if (!(radius0 > 0.0)) throw std::invalid_argument("radius0 must be > 0");
  if (!(eps0 > 0.0)) throw std::invalid_argument("eps0 must be > 0");
  if (reinit_latent.size() != model.latent_dim()) {
    throw std::invalid_argument("reinit_latent has the wrong dimension");
  }
  if (reinit_stat.size() != model.stat_dim()) {
    throw std::invalid_argument("reinit_stat has the wrong dimension");
  }
  if (!(reinit_stat.allFinite() && model.stat_in_domain(reinit_stat) &&
        reinit_stat.norm() <= radius0)) {
    throw std::invalid_argument("reinit_stat must lie in K_0");
  }
  if (!model.theta_in_domain(model.m_step(reinit_stat))) {
    throw std::invalid_argument("m_step(reinit_stat) is outside the parameter domain");
  }
}

SaemState initial_state(const LatentModel& model, const TruncationPolicy& policy,
                        const std::optional<Vec>& z0) {
  SaemState st;
  st.z = policy.reinit_latent;
  st.s = policy.reinit_stat;
  if (z0) {
    const Vec s0 = model.suff_stats(*z0);
    if (s0.allFinite() && model.stat_in_domain(s0) && s0.norm() <= policy.radius(0)) {
      st.z = *z0;
      st.s = s0;
    } else {
      log::info("initial latent gives a statistic outside K_0; using the reinitialization pair");
    }
  }
  st.theta = model.m_step(st.s);
  return st;
}

IterationRecord saem_iterate(SaemState& state, const LatentModel& model,
                             const LatentSampler& sampler, const StepSchedule& schedule,
                             const TruncationPolicy& policy, Rng& rng) {
  ++state.k;
  IterationRecord rec;
  rec.k = state.k;

  Vec z_bar = state.z;
  Vec s_bar;
  Theta theta_next;
  bool ok = true;
  try {
    const SweepResult sweep = sampler.sweep(model, state.theta, z_bar, rng);
    rec.sampler_accepted = sweep.accepted;
    rec.accept_fraction = sweep.accept_fraction;
    s_bar = state.s + schedule.gamma(state.k) * (model.suff_stats(z_bar) - state.s);
  } catch (const std::exception& e) {
    log::debug(std::string("simulation failed: ") + e.what());
    ok = false;
  }

  ok = ok && s_bar.allFinite() && model.stat_in_domain(s_bar) &&
       s_bar.norm() <= policy.radius(state.kappa) &&
       (s_bar - state.s).norm() <= policy.jump_bound(state.zeta);
  if (ok) {
    try {
      theta_next = model.m_step(s_bar);
      ok = model.theta_in_domain(theta_next);
    } catch (const std::exception& e) {
      log::debug(std::string("m_step failed: ") + e.what());
      ok = false;
    }
  }

  if (ok) {
    state.z = std::move(z_bar);
    state.s = std::move(s_bar);
    state.theta = std::move(theta_next);
    ++state.nu;
    ++state.zeta;
    rec.event = SaemEvent::accepted;
  } else {
    state.z = policy.reinit_latent;
    state.s = policy.reinit_stat;
    state.zeta += TruncationPolicy::psi(state.nu);
    state.nu = 0;
    ++state.kappa;
    state.theta = model.m_step(state.s);
    rec.event = SaemEvent::truncated;
    log::info("truncation at iteration " + std::to_string(state.k) + ", kappa = " +
              std::to_string(state.kappa));
  }
  rec.s_norm = state.s.norm();
  return rec;
}

long Trajectory::truncations() const { return truncations_after(0); }

long Trajectory::truncations_after(long k) const {
  return std::count_if(records.begin(), records.end(), [k](const IterationRecord& r) {
    return r.k > k && r.event == SaemEvent::truncated;
  });
}

Trajectory run_saem(const LatentModel& model, const LatentSampler& sampler,
                    const StepSchedule& schedule, const TruncationPolicy& policy, long iterations,
                    std::uint64_t seed, const RunOptions& options) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  schedule.validate();
  policy.validate(model);

  Trajectory traj;
  Rng rng(seed);
  SaemState state = initial_state(model, policy, options.z0);
  traj.records.reserve(static_cast<std::size_t>(iterations));
  if (options.keep_theta) traj.theta.reserve(static_cast<std::size_t>(iterations));
  for (long it = 0; it < iterations; ++it) {
    const IterationRecord rec = saem_iterate(state, model, sampler, schedule, policy, rng);
    traj.records.push_back(rec);
    traj.s_norm.push_back(rec.s_norm);
    if (options.keep_theta) traj.theta.push_back(state.theta.values);
    if (options.observer) options.observer(state, rec);
  }
  traj.final_state = std::move(state);
  return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory,
                          const std::vector<std::string>& theta_names) {
  os << "k";
  for (const auto& n : theta_names) os << ',' << n;
  os << ",s_norm,event,accepted\n";
  for (std::size_t i = 0; i < trajectory.records.size(); ++i) {
    const auto& r = trajectory.records[i];
    os << r.k;
    if (i < trajectory.theta.size()) {
      const Vec& th = trajectory.theta[i];
      for (Index j = 0; j < th.size(); ++j) os << ',' << csv::fmt(th[j]);
    }
    os << ',' << csv::fmt(r.s_norm) << ',' << (r.event == SaemEvent::accepted ? "accepted" : "truncated")
       << ',' << (r.sampler_accepted ? 1 : 0) << '\n';
  }
}

CltSummary clt_study(const LatentModel& model, const LatentSampler& sampler,
                     const StepSchedule& schedule, const TruncationPolicy& policy,
                     long iterations, int replicates, std::uint64_t base_seed, Index coordinate,
                     const std::optional<Vec>& z0) {
  if (replicates < 2) throw std::invalid_argument("clt_study needs at least 2 replicates");

  CltSummary out;
  out.values.assign(static_cast<std::size_t>(replicates), 0.0);
  std::vector<long> truncs(static_cast<std::size_t>(replicates), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(replicates));
  RunOptions opts;
  opts.z0 = z0;
  opts.keep_theta = false;

#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < replicates; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    try {
      const Trajectory t = run_saem(model, sampler, schedule, policy, iterations,
                                    base_seed + static_cast<std::uint64_t>(r), opts);
      out.values[ur] = t.final_state.theta.values[coordinate];
      truncs[ur] = t.truncations();
    } catch (...) {
      errors[ur] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (long t : truncs) out.total_truncations += t;

  const Moments m = moments(out.values);
  out.mean = m.mean;
  out.sd = std::sqrt(m.variance);
  out.skewness = m.skewness;
  out.excess_kurtosis = m.excess_kurtosis;

  for (int e = -8; e <= 8; ++e) out.bin_edges.push_back(0.5 * e);
  out.bin_counts.assign(out.bin_edges.size() - 1, 0);
  for (double v : out.values) {
    const double zs = out.sd > 0.0 ? (v - out.mean) / out.sd : 0.0;
    auto idx = static_cast<long>(std::floor((zs + 4.0) / 0.5));
    idx = std::clamp(idx, 0L, static_cast<long>(out.bin_counts.size()) - 1);
    ++out.bin_counts[static_cast<std::size_t>(idx)];
  }
  return out;
}

}  // namespace amala
