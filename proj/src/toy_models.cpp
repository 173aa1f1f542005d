#include "amala/toy_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <Eigen/QR>

#include "amala/csv.hpp"

namespace amala {

AnisoGaussianTarget::AnisoGaussianTarget(Vec eigenvalues, Mat rotation)
    : eigenvalues_(std::move(eigenvalues)), rotation_(std::move(rotation)) {
  if (eigenvalues_.size() == 0 || (eigenvalues_.array() <= 0.0).any()) {
    throw std::invalid_argument("AnisoGaussianTarget: eigenvalues must be positive");
  }
  if (rotation_.rows() != eigenvalues_.size() || rotation_.cols() != eigenvalues_.size()) {
    throw std::invalid_argument("AnisoGaussianTarget: rotation has the wrong shape");
  }
  precision_ = rotation_ * eigenvalues_.cwiseInverse().asDiagonal() * rotation_.transpose();
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

AnisoGaussianTarget AnisoGaussianTarget::make(Index dim, double eig_min, double eig_max,
                                              std::uint64_t rotation_seed) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  Vec eig = dim == 1 ? Vec(Vec::Constant(1, eig_min)) : Vec(Vec::LinSpaced(dim, eig_min, eig_max));
  Rng rng(rotation_seed);
  Mat g(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(dim, dim);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return AnisoGaussianTarget(std::move(eig), std::move(q));
}

Mat AnisoGaussianTarget::covariance() const {
  return rotation_ * eigenvalues_.asDiagonal() * rotation_.transpose();
}

double AnisoGaussianTarget::log_density(const Vec& x) const {
  return -0.5 * x.dot(precision_ * x);
}

Vec AnisoGaussianTarget::gradient(const Vec& x) const { return -(precision_ * x); }

double AnisoGaussianTarget::log_density_and_gradient(const Vec& x, Vec& grad) const {
  grad = -(precision_ * x);
  return 0.5 * x.dot(grad);
}

std::pair<double, Vec> benchmark_target_logpdf_grad(const AnisoGaussianTarget& target, const Vec& x) {
  if (x.size() != target.dim()) throw std::invalid_argument("dimension mismatch");
  Vec g;
  const double v = target.log_density_and_gradient(x, g);
  return {v, g};
}

// ---------------------------------------------------------------------------

RandomEffectsModel::RandomEffectsModel(Mat y) : y_(std::move(y)) {
  if (y_.rows() < 1 || y_.cols() < 1) throw std::invalid_argument("empty random-effects data");
  if (!y_.allFinite()) throw std::invalid_argument("random-effects data must be finite");
  group_sum_ = y_.rowwise().sum();
  group_sq_ = y_.array().square().rowwise().sum();
  group_mean_ = group_sum_ / static_cast<double>(y_.cols());
}

RandomEffectsModel RandomEffectsModel::simulate(Index n_groups, Index n_reps, double mu,
                                                double tau2, double sigma2, Rng& rng) {
  if (n_groups < 1 || n_reps < 1) throw std::invalid_argument("n_groups, n_reps must be >= 1");
  Mat y(n_groups, n_reps);
  const double tau = std::sqrt(tau2), sigma = std::sqrt(sigma2);
  for (Index i = 0; i < n_groups; ++i) {
    const double zi = mu + tau * rng.normal();
    for (Index j = 0; j < n_reps; ++j) y(i, j) = zi + sigma * rng.normal();
  }
  return RandomEffectsModel(std::move(y));
}

RandomEffectsModel RandomEffectsModel::read_csv(const std::string& path) {
  const csv::Table t = csv::read(path);
  if (t.header.size() != 3 || t.header[0] != "group" || t.header[1] != "rep" ||
      t.header[2] != "value") {
    throw std::runtime_error(path + ": expected header 'group,rep,value'");
  }
  long n = 0, J = 0;
  std::vector<std::tuple<long, long, double>> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != 3) {
      throw std::runtime_error(path + ": line " + std::to_string(r + 2) + " needs 3 cells");
    }
    const long g = std::stol(row[0]), j = std::stol(row[1]);
    if (g < 0 || j < 0) throw std::runtime_error(path + ": negative index");
    cells.emplace_back(g, j, std::stod(row[2]));
    n = std::max(n, g + 1);
    J = std::max(J, j + 1);
  }
  if (static_cast<long>(cells.size()) != n * J) {
    throw std::runtime_error(path + ": design is not balanced and complete");
  }
  Mat y = Mat::Constant(n, J, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [g, j, v] : cells) y(g, j) = v;
  if (!y.allFinite()) throw std::runtime_error(path + ": duplicate or missing cells");
  return RandomEffectsModel(std::move(y));
}

void RandomEffectsModel::write_csv(std::ostream& os) const {
  os << "group,rep,value\n";
  for (Index i = 0; i < y_.rows(); ++i)
    for (Index j = 0; j < y_.cols(); ++j) os << i << ',' << j << ',' << csv::fmt(y_(i, j)) << '\n';
}

Vec RandomEffectsModel::suff_stats(const Vec& z) const {
  const auto J = static_cast<double>(n_reps());
  Vec s(3);
  s[0] = z.sum();
  s[1] = z.squaredNorm();
  double resid = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    resid += group_sq_[i] - 2.0 * z[i] * group_sum_[i] + J * z[i] * z[i];
  }
  s[2] = std::max(resid, 0.0);
  return s;
}

Theta RandomEffectsModel::m_step(const Vec& s) const {
  const auto n = static_cast<double>(n_groups());
  const auto nJ = n * static_cast<double>(n_reps());
  const double mu = s[0] / n;
  Theta t;
  t.values.resize(3);
  t.values << mu, std::max(s[1] / n - mu * mu, kVarianceFloor), std::max(s[2] / nJ, kVarianceFloor);
  return t;
}

bool RandomEffectsModel::theta_in_domain(const Theta& theta) const {
  return theta.values.size() == 3 && theta.values.allFinite() && theta.values[1] > 0.0 &&
         theta.values[2] > 0.0;
}

double RandomEffectsModel::stat_norm_bound(double r) const {
  const auto n = static_cast<double>(n_groups());
  const auto J = static_cast<double>(n_reps());
  return std::sqrt(n) * r + (1.0 + 2.0 * J) * r * r + 2.0 * group_sq_.sum();
}

double RandomEffectsModel::group_term(Index i, double z, double mu, double tau2, double sigma2,
                                      double* grad) const {
  const auto J = static_cast<double>(n_reps());
  const double dz = z - mu;
  if (grad != nullptr) *grad = -dz / tau2 - (J * z - group_sum_[i]) / sigma2;
  return -0.5 * dz * dz / tau2 - 0.5 * (group_sq_[i] - 2.0 * z * group_sum_[i] + J * z * z) / sigma2;
}

double RandomEffectsModel::log_posterior(const Vec& z, const Theta& theta) const {
  const auto& th = theta.values;
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) total += group_term(i, z[i], th[0], th[1], th[2], nullptr);
  return total;
}

Vec RandomEffectsModel::grad_log_posterior(const Vec& z, const Theta& theta) const {
  Vec g;
  log_posterior_and_grad(z, theta, g);
  return g;
}

double RandomEffectsModel::log_posterior_and_grad(const Vec& z, const Theta& theta, Vec& grad) const {
  const auto& th = theta.values;
  grad.resize(z.size());
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) total += group_term(i, z[i], th[0], th[1], th[2], &grad[i]);
  return total;
}

double RandomEffectsModel::block_log_posterior(Index b, const Vec& z_block, const Theta& theta,
                                               Vec* grad) const {
  const auto& th = theta.values;
  if (grad == nullptr) return group_term(b, z_block[0], th[0], th[1], th[2], nullptr);
  grad->resize(1);
  return group_term(b, z_block[0], th[0], th[1], th[2], &(*grad)[0]);
}

Theta RandomEffectsModel::probe_theta(Rng& rng) const {
  Theta t;
  t.values.resize(3);
  t.values[0] = rng.normal();
  t.values[1] = std::exp(0.5 * rng.normal());
  t.values[2] = std::exp(0.5 * rng.normal());
  return t;
}

double RandomEffectsModel::observed_log_likelihood(const Theta& theta) const {
  const double mu = theta.values[0], tau2 = theta.values[1], sigma2 = theta.values[2];
  const auto J = static_cast<double>(n_reps());
  const double lambda = sigma2 + J * tau2;
  double total = 0.0;
  for (Index i = 0; i < n_groups(); ++i) {
    const double w = group_sq_[i] - J * group_mean_[i] * group_mean_[i];
    const double d = group_mean_[i] - mu;
    total += -0.5 * J * std::log(2.0 * std::numbers::pi) - 0.5 * (J - 1.0) * std::log(sigma2) -
             0.5 * std::log(lambda) - 0.5 * std::max(w, 0.0) / sigma2 - 0.5 * J * d * d / lambda;
  }
  return total;
}

Theta ml_oracle(const RandomEffectsModel& model) {
  const auto n = static_cast<double>(model.n_groups());
  const auto J = static_cast<double>(model.n_reps());
  if (model.n_reps() < 2) throw std::invalid_argument("ml_oracle needs at least 2 replicates");
  const Vec& means = model.group_means();
  const double grand = means.mean();
  double ssw = 0.0;
  for (Index i = 0; i < model.n_groups(); ++i) {
    ssw += (model.data().row(i).array() - means[i]).square().sum();
  }
  const double ssb = J * (means.array() - grand).square().sum();

  double sigma2 = ssw / (n * (J - 1.0));
  double tau2 = (ssb / n - sigma2) / J;
  if (tau2 < 0.0) {
    tau2 = 0.0;
    sigma2 = (ssw + ssb) / (n * J);
  }
  Theta t;
  t.values.resize(3);
  t.values << grand, tau2, sigma2;
  return t;
}

Vec exact_posterior_sample(const RandomEffectsModel& model, const Theta& theta, Rng& rng) {
  const double mu = theta.values[0];
  const double tau2 = theta.values[1], sigma2 = theta.values[2];
  if (!(tau2 > 0.0 && sigma2 > 0.0)) throw std::invalid_argument("theta outside the domain");
  const auto J = static_cast<double>(model.n_reps());
  const double v = 1.0 / (1.0 / tau2 + J / sigma2);
  const double sd = std::sqrt(v);
  Vec z(model.n_groups());
  for (Index i = 0; i < z.size(); ++i) {
    const double m = v * (mu / tau2 + model.group_means()[i] * J / sigma2);
    z[i] = m + sd * rng.normal();
  }
  return z;
}

SweepResult ExactPosteriorSampler::sweep(const LatentModel& model, const Theta& theta, Vec& z,
                                         Rng& rng) const {
  const auto* re = dynamic_cast<const RandomEffectsModel*>(&model);
  if (re == nullptr) throw std::invalid_argument("ExactPosteriorSampler needs a RandomEffectsModel");
  z = exact_posterior_sample(*re, theta, rng);
  return {true, 1.0};
}

}  // namespace amala
