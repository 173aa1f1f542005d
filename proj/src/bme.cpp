#include "amala/bme.hpp"

#include <cmath>
#include <limits>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "amala/csv.hpp"
#include "amala/log.hpp"

namespace amala::bme {
namespace {

Mat lattice(int side) {
  Mat pts(2, side * side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      pts(0, r * side + c) = -1.0 + (2.0 * c + 1.0) / side;
      pts(1, r * side + c) = -1.0 + (2.0 * r + 1.0) / side;
    }
  }
  return pts;
}

double rbf(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double h) {
  return std::exp(-0.5 * (a - b).squaredNorm() / (h * h));
}

Mat gram(const Mat& pts, double h) {
  Mat g(pts.cols(), pts.cols());
  for (Index i = 0; i < pts.cols(); ++i)
    for (Index j = 0; j < pts.cols(); ++j) g(i, j) = rbf(pts.col(i), pts.col(j), h);
  return g;
}

bool is_spd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  Eigen::LLT<Mat> llt(m);
  return llt.info() == Eigen::Success;
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

constexpr const char* kArchiveMagic = "amala-bme-model";
constexpr int kArchiveVersion = 1;

}  // namespace

TemplateSpec TemplateSpec::make(int grid_size, int photo_side, int geo_side) {
  if (photo_side < 1 || geo_side < 1) throw std::invalid_argument("control lattice sides must be >= 1");
  return make(grid_size, photo_side, geo_side, 2.0 / photo_side, 2.0 / geo_side);
}

TemplateSpec TemplateSpec::make(int grid_size, int photo_side, int geo_side,
                                double photo_bandwidth, double geo_bandwidth) {
  if (grid_size < 2 || photo_side < 1 || geo_side < 1) {
    throw std::invalid_argument("TemplateSpec: grid_size >= 2 and sides >= 1 required");
  }
  if (!(photo_bandwidth > 0.0 && geo_bandwidth > 0.0)) {
    throw std::invalid_argument("TemplateSpec: bandwidths must be > 0");
  }
  TemplateSpec s;
  s.grid_size = grid_size;
  s.photo_side = photo_side;
  s.geo_side = geo_side;
  s.photo_bandwidth = photo_bandwidth;
  s.geo_bandwidth = geo_bandwidth;
  s.grid = lattice(grid_size);
  s.photo_points = lattice(photo_side);
  s.geo_points = lattice(geo_side);
  s.geo_on_grid.resize(s.grid.cols(), s.geo_points.cols());
  for (Index u = 0; u < s.grid.cols(); ++u)
    for (Index j = 0; j < s.geo_points.cols(); ++j)
      s.geo_on_grid(u, j) = rbf(s.grid.col(u), s.geo_points.col(j), geo_bandwidth);
  s.validate();
  return s;
}

void TemplateSpec::validate() const {
  auto inside = [](const Mat& p) { return (p.array().abs() <= 1.0).all(); };
  if (!inside(photo_points) || !inside(geo_points)) {
    throw std::invalid_argument("control points must lie in [-1, 1]^2");
  }
  for (const Mat& g : {photo_gram(*this), geo_gram(*this)}) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g + 1e-12 * Mat::Identity(g.rows(), g.cols()),
                                          Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-12)) {
      throw std::invalid_argument("kernel Gram matrix is not positive definite");
    }
  }
}

double photo_kernel(const TemplateSpec& spec, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return rbf(a, b, spec.photo_bandwidth);
}

double geo_kernel(const TemplateSpec& spec, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return rbf(a, b, spec.geo_bandwidth);
}

Mat photo_gram(const TemplateSpec& spec) { return gram(spec.photo_points, spec.photo_bandwidth); }
Mat geo_gram(const TemplateSpec& spec) { return gram(spec.geo_points, spec.geo_bandwidth); }

void BmeParams::validate(const TemplateSpec& spec, double alpha_bound) const {
  if (alpha.size() != spec.kp() || !alpha.allFinite() || !(alpha.norm() < alpha_bound)) {
    throw std::invalid_argument("BmeParams: alpha must have k_p finite entries with |alpha| < R");
  }
  if (!(std::isfinite(sigma2) && sigma2 > 0.0)) throw std::invalid_argument("BmeParams: sigma2 must be > 0");
  if (gamma_g.rows() != spec.latent_per_image() || !is_spd(gamma_g)) {
    throw std::invalid_argument("BmeParams: gamma_g must be SPD of size 2 k_g");
  }
}

Mat geo_covariance(const TemplateSpec& spec) {
  const Mat g = geo_gram(spec);
  Mat out = Mat::Zero(2 * g.rows(), 2 * g.cols());
  for (Index i = 0; i < g.rows(); ++i)
    for (Index j = 0; j < g.cols(); ++j) {
      out(2 * i, 2 * j) = g(i, j);
      out(2 * i + 1, 2 * j + 1) = g(i, j);
    }
  return out;
}

BmeHyperPriors BmeHyperPriors::defaults(const TemplateSpec& spec, double geo_scale,
                                        GeoPriorShape shape) {
  BmeHyperPriors h;
  h.mu_p = Vec::Zero(spec.kp());
  h.sigma_p = Mat::Identity(spec.kp(), spec.kp());
  h.sigma0_sq = 1.0;
  h.a_p = 3.0;
  h.sigma_g = shape == GeoPriorShape::kernel
                  ? Mat(geo_scale * geo_covariance(spec))
                  : Mat(geo_scale * Mat::Identity(spec.latent_per_image(), spec.latent_per_image()));
  h.a_g = 4.0 * static_cast<double>(spec.kg()) + 1.0;
  return h;
}

void BmeHyperPriors::validate(const TemplateSpec& spec) const {
  if (mu_p.size() != spec.kp() || sigma_p.rows() != spec.kp() || !is_spd(sigma_p)) {
    throw std::invalid_argument("hyper-priors: mu_p / sigma_p shape or SPD violated");
  }
  if (!(sigma0_sq > 0.0)) throw std::invalid_argument("hyper-priors: sigma0_sq must be > 0");
  if (!(a_p >= 3.0)) throw std::invalid_argument("hyper-priors: a_p must be >= 3");
  if (sigma_g.rows() != spec.latent_per_image() || !is_spd(sigma_g)) {
    throw std::invalid_argument("hyper-priors: sigma_g shape or SPD violated");
  }
  if (!(a_g >= 4.0 * static_cast<double>(spec.kg()) + 1.0)) {
    throw std::invalid_argument("hyper-priors: a_g must be >= 4 k_g + 1");
  }
}

// ---------------------------------------------------------------------------

BmeModel::BmeModel(TemplateSpec spec, BmeHyperPriors hyper, std::vector<Vec> images,
                   double alpha_bound)
    : spec_(std::move(spec)), hyper_(std::move(hyper)), images_(std::move(images)),
      alpha_bound_(alpha_bound) {
  spec_.validate();
  hyper_.validate(spec_);
  if (images_.empty()) throw std::invalid_argument("BmeModel needs at least one image");
  for (const auto& y : images_) {
    if (y.size() != spec_.pixels() || !y.allFinite()) {
      throw std::invalid_argument("BmeModel: image size does not match the grid");
    }
    data_energy_ += y.squaredNorm();
  }
  sigma_p_inv_ = hyper_.sigma_p.llt().solve(Mat::Identity(spec_.kp(), spec_.kp()));
}

Index BmeModel::stat_dim() const {
  const Index kp = spec_.kp(), m = spec_.latent_per_image();
  return kp + kp * kp + m * m;
}

Vec BmeModel::suff_stats(const Vec& z) const { return suff_stat_terms(spec_, images_, z, exec_); }

Theta BmeModel::m_step(const Vec& s) const {
  return pack(bme_m_step(s, spec_, hyper_, data_energy_, image_count(), alpha_bound_));
}

bool BmeModel::theta_in_domain(const Theta& theta) const {
  const Index kp = spec_.kp(), m = spec_.latent_per_image();
  if (theta.values.size() != kp + 1 + m * m || !theta.values.allFinite()) return false;
  try {
    unpack(theta).validate(spec_, alpha_bound_);
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

bool BmeModel::stat_in_domain(const Vec& s) const {
  return s.size() == stat_dim() && s.allFinite();
}

double BmeModel::stat_norm_bound(double z_norm) const {
  double max_y = 0.0;
  for (const auto& y : images_) max_y = std::max(max_y, y.norm());
  const auto n = static_cast<double>(image_count());
  const auto pk = static_cast<double>(spec_.pixels() * spec_.kp());
  // Kernel entries lie in (0, 1]: |K_z|_F <= sqrt(|Lambda| k_p).
  return n * (std::sqrt(pk) * max_y + pk) + z_norm * z_norm;
}

double BmeModel::log_posterior(const Vec& z, const Theta& theta) const {
  const BmeParams p = unpack(theta);
  const Eigen::LLT<Mat> gamma(p.gamma_g);
  if (gamma.info() != Eigen::Success) throw std::domain_error("Gamma_g is not SPD");
  std::vector<double> values;
  posterior_terms(spec_, images_, z, p, gamma, values, nullptr, exec_);
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

Vec BmeModel::grad_log_posterior(const Vec& z, const Theta& theta) const {
  Vec g;
  log_posterior_and_grad(z, theta, g);
  return g;
}

double BmeModel::log_posterior_and_grad(const Vec& z, const Theta& theta, Vec& grad) const {
  const BmeParams p = unpack(theta);
  const Eigen::LLT<Mat> gamma(p.gamma_g);
  if (gamma.info() != Eigen::Success) throw std::domain_error("Gamma_g is not SPD");
  std::vector<double> values;
  posterior_terms(spec_, images_, z, p, gamma, values, &grad, exec_);
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

BlockRange BmeModel::block(Index b) const {
  if (b < 0 || b >= image_count()) throw std::out_of_range("BmeModel::block");
  const Index m = spec_.latent_per_image();
  return {b * m, m};
}

double BmeModel::block_log_posterior(Index b, const Vec& z_block, const Theta& theta,
                                     Vec* grad) const {
  const BmeParams p = unpack(theta);
  const Eigen::LLT<Mat> gamma(p.gamma_g);
  if (gamma.info() != Eigen::Success) throw std::domain_error("Gamma_g is not SPD");
  return image_log_posterior(spec_, images_.at(static_cast<std::size_t>(b)), z_block, p.alpha,
                             p.sigma2, gamma, grad);
}

Theta BmeModel::probe_theta(Rng& rng) const {
  BmeParams p;
  if (reference_) {
    p = *reference_;
  } else {
    p.alpha = Vec::Constant(spec_.kp(), 0.5);
    p.sigma2 = 0.1;
    p.gamma_g = 0.02 * Mat::Identity(spec_.latent_per_image(), spec_.latent_per_image());
  }
  p.alpha += 0.3 * rng.normal_vector(p.alpha.size());
  p.sigma2 *= std::exp(0.3 * rng.normal());
  Mat a(p.gamma_g.rows(), p.gamma_g.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) a(i, j) = 0.02 * rng.normal();
  p.gamma_g += a * a.transpose();
  return pack(p);
}

Theta BmeModel::pack(const BmeParams& p) const {
  const Index kp = spec_.kp(), m = spec_.latent_per_image();
  Theta t;
  t.values.resize(kp + 1 + m * m);
  t.values.head(kp) = p.alpha;
  t.values[kp] = p.sigma2;
  t.values.tail(m * m) = Eigen::Map<const Vec>(p.gamma_g.data(), m * m);
  return t;
}

BmeParams BmeModel::unpack(const Theta& t) const {
  const Index kp = spec_.kp(), m = spec_.latent_per_image();
  if (t.values.size() != kp + 1 + m * m) throw std::invalid_argument("BME theta has the wrong size");
  BmeParams p;
  p.alpha = t.values.head(kp);
  p.sigma2 = t.values[kp];
  p.gamma_g = Eigen::Map<const Mat>(t.values.data() + kp + 1, m, m);
  return p;
}

// ---------------------------------------------------------------------------

BmeParams bme_m_step(const Vec& s, const TemplateSpec& spec, const BmeHyperPriors& hyper,
                     double data_energy, Index image_count, double alpha_bound) {
  const Index kp = spec.kp(), m = spec.latent_per_image();
  if (s.size() != kp + kp * kp + m * m) throw std::invalid_argument("bme_m_step: statistic size");
  const Vec s1 = s.head(kp);
  const Mat s2 = symmetrize(Eigen::Map<const Mat>(s.data() + kp, kp, kp));
  const Mat s3 = symmetrize(Eigen::Map<const Mat>(s.data() + kp + kp * kp, m, m));
  const auto n = static_cast<double>(image_count);
  const double n_pix = n * static_cast<double>(spec.pixels());

  const Mat sp_inv = hyper.sigma_p.llt().solve(Mat::Identity(kp, kp));
  const Vec sp_inv_mu = sp_inv * hyper.mu_p;
  auto residual = [&](const Vec& a) {
    return std::max(data_energy - 2.0 * a.dot(s1) + a.dot(s2 * a), 0.0);
  };

  BmeParams p;
  p.alpha = Vec::Zero(kp);
  p.sigma2 = (residual(p.alpha) + hyper.a_p * hyper.sigma0_sq) / (n_pix + hyper.a_p);
  for (int it = 0; it < 200; ++it) {
    Mat a = s2 + p.sigma2 * sp_inv;
    Eigen::LLT<Mat> llt(a);
    if (llt.info() != Eigen::Success) {
      log::info("m_step: alpha system not SPD, adding 1e-8 I jitter");
      a += 1e-8 * Mat::Identity(kp, kp);
      llt.compute(a);
    }
    p.alpha = llt.solve(s1 + p.sigma2 * sp_inv_mu);
    const double next = (residual(p.alpha) + hyper.a_p * hyper.sigma0_sq) / (n_pix + hyper.a_p);
    const bool done = std::abs(next - p.sigma2) <= 1e-14 * p.sigma2;
    p.sigma2 = next;
    if (done) break;
  }
  const double an = p.alpha.norm();
  if (!(an < alpha_bound)) p.alpha *= alpha_bound * (1.0 - 1e-9) / an;

  p.gamma_g = symmetrize((s3 + hyper.a_g * hyper.sigma_g) / (n + hyper.a_g));
  return p;
}

double bme_surrogate(const Vec& s, const BmeParams& p, const TemplateSpec& spec,
                     const BmeHyperPriors& hyper, double data_energy, Index image_count) {
  const Index kp = spec.kp(), m = spec.latent_per_image();
  const Vec s1 = s.head(kp);
  const Mat s2 = Eigen::Map<const Mat>(s.data() + kp, kp, kp);
  const Mat s3 = Eigen::Map<const Mat>(s.data() + kp + kp * kp, m, m);
  const auto n = static_cast<double>(image_count);
  const double n_pix = n * static_cast<double>(spec.pixels());

  const double resid = data_energy - 2.0 * p.alpha.dot(s1) + p.alpha.dot(s2 * p.alpha);
  const Vec da = p.alpha - hyper.mu_p;
  const Eigen::LLT<Mat> g(p.gamma_g);
  const double logdet = 2.0 * g.matrixLLT().diagonal().array().log().sum();
  const Mat g_inv = g.solve(Mat::Identity(m, m));

  return -0.5 * n_pix * std::log(p.sigma2) - 0.5 * resid / p.sigma2 -
         0.5 * da.dot(hyper.sigma_p.llt().solve(da)) -
         hyper.a_p * (0.5 * hyper.sigma0_sq / p.sigma2 + 0.5 * std::log(p.sigma2)) -
         0.5 * n * logdet - 0.5 * (g_inv * s3).trace() -
         0.5 * hyper.a_g * ((g_inv * hyper.sigma_g).trace() + logdet);
}

// ---------------------------------------------------------------------------

Vec render_image(const BmeParams& params, const TemplateSpec& spec, const Vec& z, Rng& rng,
                 bool noise) {
  Vec y = deformed_template(spec, params.alpha, z);
  if (noise) {
    const double sd = std::sqrt(params.sigma2);
    for (Index u = 0; u < y.size(); ++u) y[u] += sd * rng.normal();
  }
  return y;
}

SyntheticSample sample_synthetic(const BmeParams& params, const TemplateSpec& spec, int count,
                                 Rng& rng, bool paired, bool noise) {
  if (count < 0) throw std::invalid_argument("sample_synthetic: count must be >= 0");
  params.validate(spec, std::numeric_limits<double>::infinity());
  const Eigen::LLT<Mat> llt(params.gamma_g);
  const Mat lower = llt.matrixL();
  SyntheticSample out;
  const Index m = spec.latent_per_image();
  while (static_cast<int>(out.images.size()) < count) {
    const Vec z = lower * rng.normal_vector(m);
    out.z.push_back(z);
    out.images.push_back(render_image(params, spec, z, rng, noise));
    if (paired && static_cast<int>(out.images.size()) < count) {
      out.z.push_back(-z);
      out.images.push_back(render_image(params, spec, -z, rng, noise));
    }
  }
  return out;
}

BmeParams demo_truth(const TemplateSpec& spec, Eigen::Vector2d center, double radius,
                     double sigma2, double geo_scale) {
  // Least-squares fit of the blob 2 exp(-|v - c|^2 / (2 r^2)) on the grid.
  Mat k(spec.pixels(), spec.kp());
  Vec target(spec.pixels());
  for (Index u = 0; u < spec.pixels(); ++u) {
    target[u] = 2.0 * std::exp(-0.5 * (spec.grid.col(u) - center).squaredNorm() / (radius * radius));
    for (Index j = 0; j < spec.kp(); ++j) k(u, j) = photo_kernel(spec, spec.grid.col(u), spec.photo_points.col(j));
  }
  const Mat a = k.transpose() * k + 1e-6 * Mat::Identity(spec.kp(), spec.kp());
  BmeParams p;
  p.alpha = a.llt().solve(k.transpose() * target);
  p.sigma2 = sigma2;
  p.gamma_g = geo_scale * geo_covariance(spec);
  return p;
}

// ---------------------------------------------------------------------------

LaplaceScore laplace_log_evidence(const ClassModel& model, const Vec& y) {
  const TemplateSpec& spec = model.spec;
  const BmeParams& p = model.params;
  const Index m = spec.latent_per_image();
  const Eigen::LLT<Mat> gamma(p.gamma_g);
  if (gamma.info() != Eigen::Success) throw std::domain_error("Gamma_g is not SPD");
  const Mat g_inv = gamma.solve(Mat::Identity(m, m));

  auto objective = [&](const Vec& z) {
    const Vec r = y - deformed_template(spec, p.alpha, z);
    return -0.5 * r.squaredNorm() / p.sigma2 - 0.5 * z.dot(g_inv * z);
  };

  LaplaceScore out;
  Vec z = Vec::Zero(m);
  double f = objective(z);
  double lambda = 1e-3;
  Mat h;
  for (int it = 0; it < 100; ++it) {
    out.iterations = it + 1;
    const Mat jac = deformed_template_jacobian(spec, p.alpha, z);
    const Vec r = y - deformed_template(spec, p.alpha, z);
    const Vec g = jac.transpose() * r / p.sigma2 - g_inv * z;
    h = jac.transpose() * jac / p.sigma2 + g_inv;
    bool moved = false;
    double step_norm = 0.0;
    while (lambda < 1e12) {
      Mat damped = h;
      damped.diagonal() *= (1.0 + lambda);
      const Vec step = damped.llt().solve(g);
      const Vec cand = z + step;
      const double fc = objective(cand);
      if (fc >= f) {
        z = cand;
        f = fc;
        step_norm = step.norm();
        lambda = std::max(lambda * 0.1, 1e-12);
        moved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!moved || step_norm < 1e-10) break;
  }
  const Mat jac = deformed_template_jacobian(spec, p.alpha, z);
  h = jac.transpose() * jac / p.sigma2 + g_inv;
  const Eigen::LLT<Mat> hl(h);
  const double logdet_h = 2.0 * hl.matrixLLT().diagonal().array().log().sum();
  const double logdet_g = 2.0 * gamma.matrixLLT().diagonal().array().log().sum();
  const double two_pi = 2.0 * std::numbers::pi;
  const auto n_pix = static_cast<double>(spec.pixels());
  const auto dm = static_cast<double>(m);

  out.log_evidence = f - 0.5 * n_pix * std::log(two_pi * p.sigma2) -
                     0.5 * (dm * std::log(two_pi) + logdet_g) + 0.5 * dm * std::log(two_pi) -
                     0.5 * logdet_h;
  out.z_map = std::move(z);
  return out;
}

Index classify(const Vec& y, const std::vector<ClassModel>& models, std::vector<double>* scores) {
  if (models.empty()) throw std::invalid_argument("classify needs at least one fitted model");
  Index best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  if (scores != nullptr) scores->clear();
  for (std::size_t c = 0; c < models.size(); ++c) {
    const double s = laplace_log_evidence(models[c], y).log_evidence;
    if (scores != nullptr) scores->push_back(s);
    if (s > best_score) {
      best_score = s;
      best = static_cast<Index>(c);
    }
  }
  return best;
}

void write_model(std::ostream& os, const ClassModel& model) {
  const TemplateSpec& s = model.spec;
  const BmeParams& p = model.params;
  os << kArchiveMagic << ' ' << kArchiveVersion << '\n';
  os << "grid_size " << s.grid_size << '\n';
  os << "photo_side " << s.photo_side << '\n';
  os << "geo_side " << s.geo_side << '\n';
  os << "photo_bandwidth " << csv::fmt(s.photo_bandwidth) << '\n';
  os << "geo_bandwidth " << csv::fmt(s.geo_bandwidth) << '\n';
  os << "sigma2 " << csv::fmt(p.sigma2) << '\n';
  os << "alpha " << p.alpha.size();
  for (Index i = 0; i < p.alpha.size(); ++i) os << ' ' << csv::fmt(p.alpha[i]);
  os << "\ngamma_g " << p.gamma_g.rows();
  for (Index i = 0; i < p.gamma_g.rows(); ++i)
    for (Index j = 0; j < p.gamma_g.cols(); ++j) os << ' ' << csv::fmt(p.gamma_g(i, j));
  os << '\n';
}

ClassModel read_model(std::istream& is) {
  auto expect = [&](const std::string& key) {
    std::string k;
    if (!(is >> k) || k != key) throw std::runtime_error("model archive: expected '" + key + "'");
  };
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != kArchiveMagic) {
    throw std::runtime_error("model archive: bad header");
  }
  if (version != kArchiveVersion) {
    throw std::runtime_error("model archive: unsupported version " + std::to_string(version));
  }
  int grid = 0, ps = 0, gs = 0;
  double pb = 0, gb = 0;
  ClassModel m;
  expect("grid_size");
  is >> grid;
  expect("photo_side");
  is >> ps;
  expect("geo_side");
  is >> gs;
  expect("photo_bandwidth");
  is >> pb;
  expect("geo_bandwidth");
  is >> gb;
  if (!is) throw std::runtime_error("model archive: malformed spec block");
  m.spec = TemplateSpec::make(grid, ps, gs, pb, gb);
  expect("sigma2");
  is >> m.params.sigma2;
  expect("alpha");
  Index na = 0;
  is >> na;
  if (!is || na != m.spec.kp()) throw std::runtime_error("model archive: alpha size mismatch");
  m.params.alpha.resize(na);
  for (Index i = 0; i < na; ++i) is >> m.params.alpha[i];
  expect("gamma_g");
  Index ng = 0;
  is >> ng;
  if (!is || ng != m.spec.latent_per_image()) throw std::runtime_error("model archive: gamma size mismatch");
  m.params.gamma_g.resize(ng, ng);
  for (Index i = 0; i < ng; ++i)
    for (Index j = 0; j < ng; ++j) is >> m.params.gamma_g(i, j);
  if (!is) throw std::runtime_error("model archive: truncated data");
  m.params.validate(m.spec, std::numeric_limits<double>::infinity());
  return m;
}

void save_model(const std::string& path, const ClassModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_model(out, m);
}

ClassModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model archive '" + path + "'");
  return read_model(in);
}

}  // namespace amala::bme
