#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "amala/model.hpp"
#include "amala/rng.hpp"

namespace amala::bme {

enum class Execution { serial, parallel };

/// Pixel lattice on D = [-1, 1]^2 with photometric and geometric control
/// points on regular sub-lattices and Gaussian RBF kernels
/// K(a, b) = exp(-|a - b|^2 / (2 h^2)). Points are stored as 2 x N columns.
struct TemplateSpec {
  int grid_size = 20;
  int photo_side = 5;
  int geo_side = 3;
  double photo_bandwidth = 0.4;
  double geo_bandwidth = 2.0 / 3.0;

  Mat grid;          ///< 2 x |Lambda|, row-major pixel order
  Mat photo_points;  ///< 2 x k_p
  Mat geo_points;    ///< 2 x k_g
  Mat geo_on_grid;   ///< |Lambda| x k_g, K_g(v_u, x_g_j)

  /// Control points at the cell centres of a side x side tiling of D, with
  /// bandwidths equal to the control-point spacing.
  static TemplateSpec make(int grid_size, int photo_side, int geo_side);
  /// Same layout with explicit bandwidths.
  static TemplateSpec make(int grid_size, int photo_side, int geo_side, double photo_bandwidth,
                           double geo_bandwidth);

  Index pixels() const { return grid.cols(); }
  Index kp() const { return photo_points.cols(); }
  Index kg() const { return geo_points.cols(); }
  Index latent_per_image() const { return 2 * kg(); }

  /// Throws unless the kernel Gram matrices are SPD and points lie in D.
  void validate() const;
};

double photo_kernel(const TemplateSpec& spec, const Eigen::Vector2d& a, const Eigen::Vector2d& b);
double geo_kernel(const TemplateSpec& spec, const Eigen::Vector2d& a, const Eigen::Vector2d& b);
Mat photo_gram(const TemplateSpec& spec);
Mat geo_gram(const TemplateSpec& spec);

struct BmeParams {
  Vec alpha;
  double sigma2 = 1.0;
  Mat gamma_g;  ///< 2 k_g x 2 k_g, coordinates ordered (x_0, y_0, x_1, y_1, ...)

  /// |alpha| < alpha_bound, sigma2 > 0, gamma_g SPD.
  void validate(const TemplateSpec& spec, double alpha_bound) const;
};

enum class GeoPriorShape { identity, kernel };

/// K_g Gram matrix of the geometric control points, kron I_2, in the
/// (x_0, y_0, x_1, y_1, ...) ordering.
Mat geo_covariance(const TemplateSpec& spec);

struct BmeHyperPriors {
  Vec mu_p;
  Mat sigma_p;
  double sigma0_sq = 1.0;
  double a_p = 3.0;
  Mat sigma_g;
  double a_g = 37.0;

  /// mu_p = 0, sigma_p = I, sigma0_sq = 1, a_p = 3,
  /// sigma_g = geo_scale * I (identity shape) or geo_scale * geo_covariance
  /// (kernel shape), a_g = 4 k_g + 1.
  static BmeHyperPriors defaults(const TemplateSpec& spec, double geo_scale = 0.01,
                                 GeoPriorShape shape = GeoPriorShape::identity);
  void validate(const TemplateSpec& spec) const;
};

/// I_alpha(v) = sum_j K_p(v, x_p_j) alpha_j at each column of `points`.
Vec eval_template(const TemplateSpec& spec, const Vec& alpha, const Mat& points);
/// m_z(v) = sum_j K_g(v, x_g_j) z_j as a 2 x N matrix.
Mat eval_deformation(const TemplateSpec& spec, const Vec& z, const Mat& points);
/// I_alpha(v_u - m_z(v_u)) on the grid. Exact kernel evaluation, no interpolation.
Vec deformed_template(const TemplateSpec& spec, const Vec& alpha, const Vec& z);
/// d deformed_template / dz, |Lambda| x 2 k_g.
Mat deformed_template_jacobian(const TemplateSpec& spec, const Vec& alpha, const Vec& z);

/// Per-image factor -|y - m_z I_alpha|^2 / (2 sigma2) - z^T Gamma^-1 z / 2.
double image_log_posterior(const TemplateSpec& spec, const Vec& y, const Vec& z,
                           const Vec& alpha, double sigma2, const Eigen::LLT<Mat>& gamma,
                           Vec* grad);

/// Per-image K_z^T y and K_z^T K_z, with K_z(u, k) = K_p(v_u - m_z(v_u), x_p_k).
void image_photo_stats(const TemplateSpec& spec, const Vec& y, const Vec& z, Vec& kty, Mat& ktk);

/// Per-image posterior terms for stacked latents; values[i] is image i's
/// factor and grad (if given) receives the stacked gradient. The caller sums
/// values in index order, so serial and parallel results are bitwise equal.
void posterior_terms(const TemplateSpec& spec, const std::vector<Vec>& images, const Vec& z,
                     const BmeParams& params, const Eigen::LLT<Mat>& gamma,
                     std::vector<double>& values, Vec* grad, Execution exec);

/// Sufficient statistics [S1 | vec(S2) | vec(S3)] with
/// S1 = sum_i K_zi^T y_i, S2 = sum_i K_zi^T K_zi, S3 = sum_i z_i z_i^T.
Vec suff_stat_terms(const TemplateSpec& spec, const std::vector<Vec>& images, const Vec& z,
                    Execution exec);

class BmeModel final : public LatentModel {
 public:
  BmeModel(TemplateSpec spec, BmeHyperPriors hyper, std::vector<Vec> images,
           double alpha_bound = 1e6);

  const TemplateSpec& spec() const { return spec_; }
  const BmeHyperPriors& hyper() const { return hyper_; }
  const std::vector<Vec>& images() const { return images_; }
  Index image_count() const { return static_cast<Index>(images_.size()); }
  double alpha_bound() const { return alpha_bound_; }
  void set_execution(Execution exec) { exec_ = exec; }
  /// Parameter used by probe_theta (defaults to a flat template).
  void set_reference(BmeParams params) { reference_ = std::move(params); }

  Index latent_dim() const override { return image_count() * spec_.latent_per_image(); }
  Index stat_dim() const override;
  Vec suff_stats(const Vec& z) const override;
  Theta m_step(const Vec& s) const override;
  bool theta_in_domain(const Theta& theta) const override;
  bool stat_in_domain(const Vec& s) const override;
  double stat_norm_bound(double z_norm) const override;

  double log_posterior(const Vec& z, const Theta& theta) const override;
  Vec grad_log_posterior(const Vec& z, const Theta& theta) const override;
  double log_posterior_and_grad(const Vec& z, const Theta& theta, Vec& grad) const override;

  Index block_count() const override { return image_count(); }
  BlockRange block(Index b) const override;
  double block_log_posterior(Index b, const Vec& z_block, const Theta& theta,
                             Vec* grad) const override;

  Theta probe_theta(Rng& rng) const override;

  Theta pack(const BmeParams& p) const;
  BmeParams unpack(const Theta& t) const;
  /// sum_i y_i^T y_i, the data constant of the residual statistic.
  double data_energy() const { return data_energy_; }

 private:
  TemplateSpec spec_;
  BmeHyperPriors hyper_;
  std::vector<Vec> images_;
  double alpha_bound_;
  double data_energy_ = 0.0;
  Mat sigma_p_inv_;
  Execution exec_ = Execution::parallel;
  std::optional<BmeParams> reference_;
};

/// Closed-form maximizer of the penalized complete log-likelihood for a
/// statistic s: coordinate ascent between
///   alpha  = (S2 + sigma2 Sigma_p^-1)^-1 (S1 + sigma2 Sigma_p^-1 mu_p)
///   sigma2 = (C - 2 alpha^T S1 + alpha^T S2 alpha + a_p sigma0^2) / (n |Lambda| + a_p)
/// and Gamma_g = (S3 + a_g Sigma_g) / (n + a_g).
BmeParams bme_m_step(const Vec& s, const TemplateSpec& spec, const BmeHyperPriors& hyper,
                     double data_energy, Index image_count, double alpha_bound = 1e6);

/// Penalized complete log-likelihood L(s, theta) up to constants.
double bme_surrogate(const Vec& s, const BmeParams& p, const TemplateSpec& spec,
                     const BmeHyperPriors& hyper, double data_energy, Index image_count);

struct SyntheticSample {
  std::vector<Vec> images;
  std::vector<Vec> z;
};

/// Images y = m_z I_alpha + sigma eps. With `paired`, deformations come in
/// (+z, -z) pairs sharing one draw z ~ N(0, Gamma_g); otherwise every image
/// gets an independent draw. `noise = false` returns noiseless images.
SyntheticSample sample_synthetic(const BmeParams& params, const TemplateSpec& spec, int count,
                                 Rng& rng, bool paired = true, bool noise = true);
/// Renders a single image for a fixed deformation.
Vec render_image(const BmeParams& params, const TemplateSpec& spec, const Vec& z, Rng& rng,
                 bool noise = true);

/// Built-in ground truth: a bright blob centred at `center`, sigma2, and
/// Gamma_g = geo_scale * (K_g Gram kron I_2).
BmeParams demo_truth(const TemplateSpec& spec, Eigen::Vector2d center, double radius,
                     double sigma2 = 0.04, double geo_scale = 0.02);

struct ClassModel {
  TemplateSpec spec;
  BmeParams params;
};

struct LaplaceScore {
  double log_evidence = 0.0;
  Vec z_map;
  int iterations = 0;
};

/// Laplace approximation of log g(y; theta) around the MAP deformation, found
/// by damped Gauss-Newton from z = 0:
///   log p(y | z*) + log p(z*) + (l/2) log 2 pi - (1/2) log det H,
/// with H = J^T J / sigma2 + Gamma^-1.
LaplaceScore laplace_log_evidence(const ClassModel& model, const Vec& y);

/// argmax of laplace_log_evidence over classes; ties go to the lowest index.
Index classify(const Vec& y, const std::vector<ClassModel>& models,
               std::vector<double>* scores = nullptr);

/// Text archive with a version header.
void write_model(std::ostream& os, const ClassModel& m);
ClassModel read_model(std::istream& is);
void save_model(const std::string& path, const ClassModel& m);
ClassModel load_model(const std::string& path);

}  // namespace amala::bme
