#include "amala/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "amala/csv.hpp"

namespace amala {

void ChainTrace::push(const Vec& draw, bool was_accepted, double log_alpha) {
  draws.push_back(draw);
  accepted.push_back(was_accepted);
  log_alphas.push_back(log_alpha);
}

bool ChainTrace::consistent() const {
  if (draws.size() != accepted.size() || draws.size() != log_alphas.size()) return false;
  for (std::size_t k = 1; k < draws.size(); ++k) {
    if (!accepted[k] && draws[k] != draws[k - 1]) return false;
  }
  return true;
}

std::vector<double> ChainTrace::coordinate(Index i) const {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d[i]);
  return out;
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (n <= max_lag) throw std::invalid_argument("autocorrelation: trace shorter than max_lag + 1");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);

  std::vector<double> acf(max_lag + 1, 0.0);
  acf[0] = 1.0;
  if (c0 == 0.0) return acf;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double c = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) c += (x[t] - mean) * (x[t + k] - mean);
    acf[k] = std::clamp(c / c0, -1.0, 1.0);
  }
  return acf;
}

std::vector<double> autocorrelation(const ChainTrace& trace, Index coordinate, std::size_t max_lag) {
  const auto series = trace.coordinate(coordinate);
  return autocorrelation(series, max_lag);
}

double msejd(const ChainTrace& trace) {
  if (trace.size() < 2) throw std::invalid_argument("msejd: need at least two draws");
  double total = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    total += (trace.draws[k] - trace.draws[k - 1]).squaredNorm();
  }
  return total / static_cast<double>(trace.size() - 1);
}

double acceptance_rate(const ChainTrace& trace) {
  if (trace.accepted.empty()) return 0.0;
  const auto n = std::count(trace.accepted.begin(), trace.accepted.end(), true);
  return static_cast<double>(n) / static_cast<double>(trace.accepted.size());
}

Moments moments(std::span<const double> x) {
  Moments m;
  const auto n = static_cast<double>(x.size());
  if (x.empty()) return m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = x.size() > 1 ? m2 * n / (n - 1.0) : 0.0;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    // Ties (repeated draws from rejections) form one jump of the ECDF.
    std::size_t j = i;
    while (j + 1 < samples.size() && samples[j + 1] == samples[i]) ++j;
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(j + 1) / n - f));
    i = j + 1;
  }
  return d;
}

void write_acf_csv(std::ostream& os, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& curves) {
  os << "lag";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  const std::size_t len = curves.empty() ? 0 : curves.front().size();
  for (std::size_t k = 0; k < len; ++k) {
    os << k;
    for (const auto& c : curves) os << ',' << csv::fmt(c[k]);
    os << '\n';
  }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "sampler,metric,value\n";
  for (const auto& r : rows) os << r.sampler << ',' << r.metric << ',' << csv::fmt(r.value) << '\n';
}

}  // namespace amala
