// Per-image evaluation kernels of the deformable template model. Every
// routine over the image set has an OpenMP path and a serial path; both write
// per-image results into pre-sized slots and reduce them in image order.

#include <cmath>
#include <exception>
#include <stdexcept>

#include "amala/bme.hpp"

namespace amala::bme {

Vec eval_template(const TemplateSpec& spec, const Vec& alpha, const Mat& points) {
  if (alpha.size() != spec.kp()) throw std::invalid_argument("eval_template: alpha size");
  const double inv_h2 = 1.0 / (spec.photo_bandwidth * spec.photo_bandwidth);
  Vec out(points.cols());
  for (Index u = 0; u < points.cols(); ++u) {
    double t = 0.0;
    for (Index k = 0; k < spec.kp(); ++k) {
      const double dx = points(0, u) - spec.photo_points(0, k);
      const double dy = points(1, u) - spec.photo_points(1, k);
      t += std::exp(-0.5 * (dx * dx + dy * dy) * inv_h2) * alpha[k];
    }
    out[u] = t;
  }
  return out;
}

Mat eval_deformation(const TemplateSpec& spec, const Vec& z, const Mat& points) {
  if (z.size() != spec.latent_per_image()) throw std::invalid_argument("eval_deformation: z size");
  const double inv_h2 = 1.0 / (spec.geo_bandwidth * spec.geo_bandwidth);
  Mat out = Mat::Zero(2, points.cols());
  for (Index u = 0; u < points.cols(); ++u) {
    for (Index j = 0; j < spec.kg(); ++j) {
      const double dx = points(0, u) - spec.geo_points(0, j);
      const double dy = points(1, u) - spec.geo_points(1, j);
      const double w = std::exp(-0.5 * (dx * dx + dy * dy) * inv_h2);
      out(0, u) += w * z[2 * j];
      out(1, u) += w * z[2 * j + 1];
    }
  }
  return out;
}

namespace {

// Displaced location v_u - m_z(v_u) using the precomputed K_g(v_u, x_g_j).
inline void displaced(const TemplateSpec& spec, const Vec& z, Index u, double& px, double& py) {
  double mx = 0.0, my = 0.0;
  for (Index j = 0; j < spec.kg(); ++j) {
    const double w = spec.geo_on_grid(u, j);
    mx += w * z[2 * j];
    my += w * z[2 * j + 1];
  }
  px = spec.grid(0, u) - mx;
  py = spec.grid(1, u) - my;
}

// Template value and spatial gradient at (px, py).
inline double template_at(const TemplateSpec& spec, const Vec& alpha, double px, double py,
                          double& tx, double& ty) {
  const double inv_h2 = 1.0 / (spec.photo_bandwidth * spec.photo_bandwidth);
  double t = 0.0;
  tx = 0.0;
  ty = 0.0;
  for (Index k = 0; k < spec.kp(); ++k) {
    const double dx = px - spec.photo_points(0, k);
    const double dy = py - spec.photo_points(1, k);
    const double w = std::exp(-0.5 * (dx * dx + dy * dy) * inv_h2) * alpha[k];
    t += w;
    tx -= w * dx * inv_h2;
    ty -= w * dy * inv_h2;
  }
  return t;
}

}  // namespace

Vec deformed_template(const TemplateSpec& spec, const Vec& alpha, const Vec& z) {
  Vec out(spec.pixels());
  double px, py, tx, ty;
  for (Index u = 0; u < spec.pixels(); ++u) {
    displaced(spec, z, u, px, py);
    out[u] = template_at(spec, alpha, px, py, tx, ty);
  }
  return out;
}

Mat deformed_template_jacobian(const TemplateSpec& spec, const Vec& alpha, const Vec& z) {
  Mat jac(spec.pixels(), spec.latent_per_image());
  double px, py, tx, ty;
  for (Index u = 0; u < spec.pixels(); ++u) {
    displaced(spec, z, u, px, py);
    template_at(spec, alpha, px, py, tx, ty);
    for (Index j = 0; j < spec.kg(); ++j) {
      const double w = spec.geo_on_grid(u, j);
      jac(u, 2 * j) = -w * tx;
      jac(u, 2 * j + 1) = -w * ty;
    }
  }
  return jac;
}

double image_log_posterior(const TemplateSpec& spec, const Vec& y, const Vec& z,
                           const Vec& alpha, double sigma2, const Eigen::LLT<Mat>& gamma,
                           Vec* grad) {
  const Index m = spec.latent_per_image();
  if (z.size() != m || y.size() != spec.pixels()) {
    throw std::invalid_argument("image_log_posterior: shape mismatch");
  }
  Vec gz;
  if (grad != nullptr) gz = Vec::Zero(m);

  double sse = 0.0;
  double px, py, tx, ty;
  for (Index u = 0; u < spec.pixels(); ++u) {
    displaced(spec, z, u, px, py);
    const double r = y[u] - template_at(spec, alpha, px, py, tx, ty);
    sse += r * r;
    if (grad != nullptr) {
      const double c = r / sigma2;
      for (Index j = 0; j < spec.kg(); ++j) {
        const double w = c * spec.geo_on_grid(u, j);
        gz[2 * j] -= w * tx;
        gz[2 * j + 1] -= w * ty;
      }
    }
  }
  const Vec prec_z = gamma.solve(z);
  if (grad != nullptr) *grad = gz - prec_z;
  return -0.5 * sse / sigma2 - 0.5 * z.dot(prec_z);
}

void image_photo_stats(const TemplateSpec& spec, const Vec& y, const Vec& z, Vec& kty, Mat& ktk) {
  const double inv_h2 = 1.0 / (spec.photo_bandwidth * spec.photo_bandwidth);
  Mat kz(spec.pixels(), spec.kp());
  double px, py;
  for (Index u = 0; u < spec.pixels(); ++u) {
    displaced(spec, z, u, px, py);
    for (Index k = 0; k < spec.kp(); ++k) {
      const double dx = px - spec.photo_points(0, k);
      const double dy = py - spec.photo_points(1, k);
      kz(u, k) = std::exp(-0.5 * (dx * dx + dy * dy) * inv_h2);
    }
  }
  kty = kz.transpose() * y;
  ktk = kz.transpose() * kz;
}

void posterior_terms(const TemplateSpec& spec, const std::vector<Vec>& images, const Vec& z,
                     const BmeParams& params, const Eigen::LLT<Mat>& gamma,
                     std::vector<double>& values, Vec* grad, Execution exec) {
  const auto n = static_cast<Index>(images.size());
  const Index m = spec.latent_per_image();
  if (z.size() != n * m) throw std::invalid_argument("posterior_terms: latent size");
  values.assign(images.size(), 0.0);
  if (grad != nullptr) grad->resize(n * m);
  std::vector<std::exception_ptr> errors(images.size());

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      const Vec zi = z.segment(i * m, m);
      if (grad != nullptr) {
        Vec gi;
        values[ui] = image_log_posterior(spec, images[ui], zi, params.alpha, params.sigma2, gamma, &gi);
        grad->segment(i * m, m) = gi;
      } else {
        values[ui] =
            image_log_posterior(spec, images[ui], zi, params.alpha, params.sigma2, gamma, nullptr);
      }
    } catch (...) {
      errors[ui] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Vec suff_stat_terms(const TemplateSpec& spec, const std::vector<Vec>& images, const Vec& z,
                    Execution exec) {
  const auto n = static_cast<Index>(images.size());
  const Index kp = spec.kp();
  const Index m = spec.latent_per_image();
  if (z.size() != n * m) throw std::invalid_argument("suff_stat_terms: latent size");

  std::vector<Vec> kty(images.size());
  std::vector<Mat> ktk(images.size());
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    image_photo_stats(spec, images[ui], z.segment(i * m, m), kty[ui], ktk[ui]);
  }

  Vec s = Vec::Zero(kp + kp * kp + m * m);
  Eigen::Map<Mat> s2(s.data() + kp, kp, kp);
  Eigen::Map<Mat> s3(s.data() + kp + kp * kp, m, m);
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    s.head(kp) += kty[ui];
    s2 += ktk[ui];
    const Vec zi = z.segment(i * m, m);
    s3 += zi * zi.transpose();
  }
  return s;
}

}  // namespace amala::bme
