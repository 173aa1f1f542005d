#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "amala/model.hpp"

namespace amala {

/// Recorded chain: one draw per step, with its acceptance flag and log alpha.
struct ChainTrace {
  std::vector<Vec> draws;
  std::vector<bool> accepted;
  std::vector<double> log_alphas;

  void push(const Vec& draw, bool was_accepted, double log_alpha);
  std::size_t size() const { return draws.size(); }
  /// Equal lengths, and a rejected step repeats the previous draw.
  bool consistent() const;
  std::vector<double> coordinate(Index i) const;
};

/// Biased (divide-by-N) sample autocorrelation at lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag);
std::vector<double> autocorrelation(const ChainTrace& trace, Index coordinate, std::size_t max_lag);

/// Mean of ||x_{k+1} - x_k||^2.
double msejd(const ChainTrace& trace);
double acceptance_rate(const ChainTrace& trace);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased (n - 1)
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};
Moments moments(std::span<const double> x);

/// sup_x |F_n(x) - F(x)| for the empirical CDF of `samples`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// CSV with columns lag, then one column per named curve.
void write_acf_csv(std::ostream& os, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& curves);

struct SummaryRow {
  std::string sampler;
  std::string metric;
  double value = 0.0;
};
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

}  // namespace amala
