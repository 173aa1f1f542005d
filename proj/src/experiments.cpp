#include "amala/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "amala/csv.hpp"
#include "amala/log.hpp"
#include "amala/pgm.hpp"

namespace amala {

namespace fs = std::filesystem;

namespace {

// Substream tags; each random consumer gets its own derived seed.
constexpr std::uint64_t kAmalaChain = 1;
constexpr std::uint64_t kMalaChain = 2;
constexpr std::uint64_t kSamples = 3;
constexpr std::uint64_t kClassTrain = 100;
constexpr std::uint64_t kClassTest = 200;
constexpr std::uint64_t kClassFit = 300;

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

ChainSummary summarize(ChainTrace trace, std::vector<double> amplitude, std::size_t max_lag) {
  ChainSummary s;
  const Index dim = trace.draws.front().size();
  s.acf_mean.assign(max_lag + 1, 0.0);
  for (Index c = 0; c < dim; ++c) {
    s.acf.push_back(autocorrelation(trace, c, max_lag));
    for (std::size_t k = 0; k <= max_lag; ++k) s.acf_mean[k] += s.acf.back()[k] / static_cast<double>(dim);
  }
  s.msejd = msejd(trace);
  s.acceptance = acceptance_rate(trace);
  double sum = 0.0;
  for (double a : amplitude) {
    sum += a;
    s.amplitude_max = std::max(s.amplitude_max, a);
  }
  s.amplitude_mean = sum / static_cast<double>(amplitude.size());
  s.trace = std::move(trace);
  s.amplitude = std::move(amplitude);
  return s;
}

void write_acf(const fs::path& path, const ChainSummary& s) {
  std::vector<std::string> names{"mean"};
  std::vector<std::vector<double>> curves{s.acf_mean};
  for (std::size_t c = 0; c < s.acf.size(); ++c) {
    names.push_back("x" + std::to_string(c));
    curves.push_back(s.acf[c]);
  }
  auto os = open_out(path);
  write_acf_csv(os, names, curves);
}

void write_bench(const ExperimentConfig& config, const fs::path& dir) {
  const BenchResult r = run_sampler_benchmark(config);
  write_acf(dir / "acf_amala.csv", r.amala);
  write_acf(dir / "acf_mala.csv", r.mala);
  std::vector<SummaryRow> rows;
  for (const auto& [name, s] : {std::pair<std::string, const ChainSummary*>{"amala", &r.amala},
                                {"mala", &r.mala}}) {
    rows.push_back({name, "msejd", s->msejd});
    rows.push_back({name, "acceptance_rate", s->acceptance});
    rows.push_back({name, "amplitude_mean", s->amplitude_mean});
    rows.push_back({name, "amplitude_max", s->amplitude_max});
    rows.push_back({name, "amplitude_max_over_mean", s->amplitude_max / s->amplitude_mean});
    for (std::size_t lag : {5, 10, 20}) {
      if (lag < s->acf_mean.size()) rows.push_back({name, "acf_lag" + std::to_string(lag), s->acf_mean[lag]});
    }
  }
  auto os = open_out(dir / "summary.csv");
  write_summary_csv(os, rows);
  log::info("bench-sampler: msejd amala " + csv::fmt(r.amala.msejd) + ", mala " + csv::fmt(r.mala.msejd));
}

void write_theta_csv(const fs::path& path, const std::vector<std::string>& names, const Vec& estimate,
                     const Vec* reference, const std::string& reference_name) {
  auto os = open_out(path);
  os << "parameter,estimate";
  if (reference != nullptr) os << ',' << reference_name;
  os << '\n';
  for (Index i = 0; i < estimate.size(); ++i) {
    os << names[static_cast<std::size_t>(i)] << ',' << csv::fmt(estimate[i]);
    if (reference != nullptr) os << ',' << csv::fmt((*reference)[i]);
    os << '\n';
  }
}

const std::vector<std::string> kToyNames{"mu", "tau2", "sigma2"};

void write_fit_toy(const ExperimentConfig& config, const fs::path& dir) {
  const RandomEffectsModel model = toy_model(config);
  {
    auto os = open_out(dir / "data.csv");
    model.write_csv(os);
  }
  const MarkovSampler sampler(config.sampler);
  const Trajectory t = run_saem(model, sampler, config.schedule, truncation_policy(config, model),
                                config.iterations, config.seed);
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, t, kToyNames);
  }
  const Vec oracle = ml_oracle(model).values;
  write_theta_csv(dir / "final_theta.csv", kToyNames, t.final_state.theta.values, &oracle, "ml_oracle");
  log::info("fit-toy: " + std::to_string(t.truncations()) + " truncations");
}

void write_clt(const ExperimentConfig& config, const fs::path& dir) {
  const RandomEffectsModel model = toy_model(config);
  const MarkovSampler sampler(config.sampler);
  const CltSummary c =
      clt_study(model, sampler, config.schedule, truncation_policy(config, model), config.iterations,
                static_cast<int>(config.replicates), config.seed, config.toy.clt_coordinate);
  {
    auto os = open_out(dir / "replicates.csv");
    os << "replicate,seed," << kToyNames[static_cast<std::size_t>(config.toy.clt_coordinate)] << '\n';
    for (std::size_t r = 0; r < c.values.size(); ++r) {
      os << r << ',' << config.seed + r << ',' << csv::fmt(c.values[r]) << '\n';
    }
  }
  {
    auto os = open_out(dir / "clt_summary.csv");
    os << "metric,value\n";
    os << "replicates," << c.values.size() << '\n';
    os << "mean," << csv::fmt(c.mean) << '\n';
    os << "sd," << csv::fmt(c.sd) << '\n';
    os << "skewness," << csv::fmt(c.skewness) << '\n';
    os << "excess_kurtosis," << csv::fmt(c.excess_kurtosis) << '\n';
    os << "ml_oracle," << csv::fmt(ml_oracle(model).values[config.toy.clt_coordinate]) << '\n';
    os << "truncations," << c.total_truncations << '\n';
  }
  auto os = open_out(dir / "histogram.csv");
  os << "lower,upper,count\n";
  for (std::size_t b = 0; b < c.bin_counts.size(); ++b) {
    os << csv::fmt(c.bin_edges[b]) << ',' << csv::fmt(c.bin_edges[b + 1]) << ',' << c.bin_counts[b] << '\n';
  }
}

std::vector<Vec> load_images(const std::vector<std::string>& paths, const bme::TemplateSpec& spec) {
  std::vector<Vec> images;
  for (const auto& p : paths) {
    pgm::GrayImage img = pgm::read(p);
    if (img.width != spec.grid_size || img.height != spec.grid_size) {
      throw std::runtime_error(p + ": image is " + std::to_string(img.width) + "x" +
                               std::to_string(img.height) + ", expected " +
                               std::to_string(spec.grid_size) + "x" + std::to_string(spec.grid_size));
    }
    images.push_back(std::move(img.values));
  }
  return images;
}

void write_pgm(const fs::path& path, const bme::TemplateSpec& spec, const Vec& values) {
  pgm::write(path.string(), values, spec.grid_size, spec.grid_size);
}

std::string numbered(const std::string& stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03zu.pgm", i);
  return stem + buf;
}

void write_latents(const fs::path& path, const std::vector<Vec>& z) {
  auto os = open_out(path);
  os << "image";
  if (!z.empty()) {
    for (Index j = 0; j < z.front().size(); ++j) os << ",z" << j;
  }
  os << '\n';
  for (std::size_t i = 0; i < z.size(); ++i) {
    os << i;
    for (Index j = 0; j < z[i].size(); ++j) os << ',' << csv::fmt(z[i][j]);
    os << '\n';
  }
}

void write_samples(const fs::path& dir, const bme::TemplateSpec& spec, const bme::BmeParams& params,
                   int count, std::uint64_t seed, bool paired) {
  fs::create_directories(dir);
  Rng rng(seed);
  const bme::SyntheticSample s = bme::sample_synthetic(params, spec, count, rng, paired, true);
  for (std::size_t i = 0; i < s.images.size(); ++i) write_pgm(dir / numbered("sample", i), spec, s.images[i]);
  write_latents(dir / "latents.csv", s.z);
}

void write_fit_template(const ExperimentConfig& config, const fs::path& dir) {
  const bme::TemplateSpec spec = template_spec(config);
  std::vector<Vec> images;
  std::optional<bme::BmeParams> truth;
  if (config.templ.data.empty()) {
    truth = template_truth(config, spec);
    Rng rng(config.templ.data_seed);
    images = bme::sample_synthetic(*truth, spec, static_cast<int>(config.templ.images), rng,
                                   config.templ.paired, true)
                 .images;
  } else {
    images = load_images(config.templ.data, spec);
  }

  const TemplateFit fit = fit_template(config, spec, images, config.seed);
  const bme::BmeParams& p = fit.params;

  Trajectory brief;
  brief.records = fit.trajectory.records;
  brief.s_norm = fit.trajectory.s_norm;
  brief.final_state = fit.trajectory.final_state;
  const Index kp = spec.kp();
  for (const Vec& th : fit.trajectory.theta) {
    Vec v(3);
    v << th[kp], th.head(kp).norm(), th.tail(th.size() - kp - 1).reshaped(2 * spec.kg(), 2 * spec.kg()).trace();
    brief.theta.push_back(v);
  }
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, brief, {"sigma2", "alpha_norm", "gamma_trace"});
  }

  std::vector<std::string> names;
  for (Index j = 0; j < kp; ++j) names.push_back("alpha_" + std::to_string(j));
  names.emplace_back("sigma2");
  for (Index c = 0; c < p.gamma_g.cols(); ++c)
    for (Index r = 0; r < p.gamma_g.rows(); ++r) names.push_back("gamma_" + std::to_string(r) + "_" + std::to_string(c));
  bme::BmeModel packer(spec, template_priors(config, spec), {images.front()});
  const Vec estimate = packer.pack(p).values;
  if (truth) {
    const Vec reference = packer.pack(*truth).values;
    write_theta_csv(dir / "final_theta.csv", names, estimate, &reference, "truth");
  } else {
    write_theta_csv(dir / "final_theta.csv", names, estimate, nullptr, "");
  }

  write_pgm(dir / "template.pgm", spec, bme::eval_template(spec, p.alpha, spec.grid));
  bme::save_model((dir / "model.txt").string(), {spec, p});
  write_samples(dir / "samples", spec, p, 20, derive_seed(config.seed, kSamples), true);

  if (truth) {
    write_pgm(dir / "truth_template.pgm", spec, bme::eval_template(spec, truth->alpha, spec.grid));
    const Vec ti = bme::eval_template(spec, truth->alpha, spec.grid);
    const Vec fi = bme::eval_template(spec, p.alpha, spec.grid);
    auto os = open_out(dir / "recovery.csv");
    os << "metric,value\n";
    os << "template_relative_l2," << csv::fmt((fi - ti).norm() / ti.norm()) << '\n';
    os << "sigma2_estimate," << csv::fmt(p.sigma2) << '\n';
    os << "sigma2_truth," << csv::fmt(truth->sigma2) << '\n';
    os << "gamma_relative_frobenius,"
       << csv::fmt((p.gamma_g - truth->gamma_g).norm() / truth->gamma_g.norm()) << '\n';
    os << "truncations," << fit.trajectory.truncations() << '\n';
  }
}

void write_sample_synthetic(const ExperimentConfig& config, const fs::path& dir) {
  bme::ClassModel m;
  if (config.templ.model.empty()) {
    m.spec = template_spec(config);
    m.params = template_truth(config, m.spec);
  } else {
    m = bme::load_model(config.templ.model);
  }
  write_pgm(dir / "template.pgm", m.spec, bme::eval_template(m.spec, m.params.alpha, m.spec.grid));
  Rng rng(config.seed);
  const bme::SyntheticSample s =
      bme::sample_synthetic(m.params, m.spec, static_cast<int>(config.templ.images), rng, config.templ.paired, true);
  for (std::size_t i = 0; i < s.images.size(); ++i) write_pgm(dir / numbered("sample", i), m.spec, s.images[i]);
  write_latents(dir / "latents.csv", s.z);
}

void write_predictions(const fs::path& path, const std::vector<std::string>& labels,
                       const std::vector<Index>* truth, const std::vector<Index>& predicted,
                       const std::vector<std::vector<double>>& scores) {
  auto os = open_out(path);
  os << "image";
  if (truth != nullptr) os << ",true_class";
  os << ",predicted";
  for (std::size_t k = 0; k < scores.front().size(); ++k) os << ",score_" << k;
  os << '\n';
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    os << labels[i];
    if (truth != nullptr) os << ',' << (*truth)[i];
    os << ',' << predicted[i];
    for (double s : scores[i]) os << ',' << csv::fmt(s);
    os << '\n';
  }
}

void write_classify(const ExperimentConfig& config, const fs::path& dir) {
  if (config.classify.models.empty()) {
    const ClassifyDemo demo = run_classify_demo(config);
    for (std::size_t k = 0; k < demo.models.size(); ++k) {
      bme::save_model((dir / ("class_" + std::to_string(k) + ".txt")).string(), demo.models[k]);
      write_pgm(dir / ("class_" + std::to_string(k) + ".pgm"), demo.models[k].spec,
                bme::eval_template(demo.models[k].spec, demo.models[k].params.alpha, demo.models[k].spec.grid));
    }
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < demo.predicted.size(); ++i) labels.push_back(std::to_string(i));
    write_predictions(dir / "predictions.csv", labels, &demo.truth, demo.predicted, demo.scores);
    auto os = open_out(dir / "summary.csv");
    os << "metric,value\n";
    os << "test_images," << demo.predicted.size() << '\n';
    os << "error_rate," << csv::fmt(demo.error_rate) << '\n';
    return;
  }

  std::vector<bme::ClassModel> models;
  for (const auto& p : config.classify.models) models.push_back(bme::load_model(p));
  for (const auto& m : models) {
    if (m.spec.grid_size != models.front().spec.grid_size) {
      throw std::runtime_error("classify: models disagree on grid_size");
    }
  }
  if (config.classify.images.empty()) throw std::runtime_error("classify: classify.images is empty");
  const std::vector<Vec> images = load_images(config.classify.images, models.front().spec);
  std::vector<Index> predicted(images.size());
  std::vector<std::vector<double>> scores(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) predicted[i] = bme::classify(images[i], models, &scores[i]);
  write_predictions(dir / "predictions.csv", config.classify.images, nullptr, predicted, scores);
}

void write_manifest(const ExperimentConfig& config, const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel != "run-manifest.txt") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  auto os = open_out(dir / "run-manifest.txt");
  os << "# amala-saem run manifest\n";
  os << "# seed " << config.seed << "\n\n";
  write_config(os, config);
  os << "\n[outputs]\n";
  for (const auto& f : files) os << file_digest((dir / f).string()) << "  " << f << '\n';
}

}  // namespace

BenchResult run_sampler_benchmark(const ExperimentConfig& config) {
  const auto& bc = config.bench;
  const AnisoGaussianTarget target = AnisoGaussianTarget::make(bc.dim, bc.eig_min, bc.eig_max, bc.rotation_seed);
  ProposalSpec mala_spec = config.sampler.spec;
  mala_spec.delta = bc.mala_delta;

  BenchResult out;
#pragma omp parallel for schedule(static, 1)
  for (int which = 0; which < 2; ++which) {
    const bool amala = which == 0;
    const ProposalSpec& spec = amala ? config.sampler.spec : mala_spec;
    Rng rng(derive_seed(config.seed, amala ? kAmalaChain : kMalaChain));
    ChainState state = make_chain_state(target, Vec::Zero(bc.dim), spec.b);
    ChainTrace trace;
    std::vector<double> amplitude;
    trace.draws.reserve(static_cast<std::size_t>(bc.steps));
    amplitude.reserve(static_cast<std::size_t>(bc.steps));
    for (long k = 0; k < bc.burn_in + bc.steps; ++k) {
      StepOutcome o = amala ? amala_step(target, state, spec, rng) : mala_step(target, state, spec, rng);
      state = std::move(o.state);
      if (k < bc.burn_in) continue;
      trace.push(state.z, o.accepted, o.log_alpha);
      amplitude.push_back(anisotropic_term_amplitude(state.drift));
    }
    (amala ? out.amala : out.mala) =
        summarize(std::move(trace), std::move(amplitude), static_cast<std::size_t>(bc.max_lag));
  }
  return out;
}

RandomEffectsModel toy_model(const ExperimentConfig& config) {
  if (!config.toy.data.empty()) return RandomEffectsModel::read_csv(config.toy.data);
  Rng rng(config.toy.data_seed);
  return RandomEffectsModel::simulate(config.toy.groups, config.toy.reps, config.toy.mu, config.toy.tau2,
                                      config.toy.sigma2, rng);
}

TruncationPolicy truncation_policy(const ExperimentConfig& config, const LatentModel& model) {
  return TruncationPolicy::for_model(model, config.radius0, config.eps0);
}

bme::TemplateSpec template_spec(const ExperimentConfig& config) {
  return bme::TemplateSpec::make(static_cast<int>(config.templ.grid_size), static_cast<int>(config.templ.photo_side),
                                 static_cast<int>(config.templ.geo_side));
}

bme::BmeHyperPriors template_priors(const ExperimentConfig& config, const bme::TemplateSpec& spec) {
  return bme::BmeHyperPriors::defaults(
      spec, config.templ.prior_geo_scale,
      config.templ.prior_shape == "kernel" ? bme::GeoPriorShape::kernel : bme::GeoPriorShape::identity);
}

bme::BmeParams template_truth(const ExperimentConfig& config, const bme::TemplateSpec& spec) {
  return bme::demo_truth(spec, {config.templ.center_x, config.templ.center_y}, config.templ.radius,
                         config.templ.sigma2, config.templ.geo_scale);
}

TemplateFit fit_template(const ExperimentConfig& config, const bme::TemplateSpec& spec,
                         const std::vector<Vec>& images, std::uint64_t seed) {
  if (images.empty()) throw std::invalid_argument("fit_template: no images");
  const bme::BmeModel model(spec, template_priors(config, spec), images);
  const MarkovSampler sampler(config.sampler);
  RunOptions opts;
  TemplateFit fit;
  fit.trajectory = run_saem(model, sampler, config.schedule, truncation_policy(config, model),
                            config.iterations, seed, opts);
  fit.params = model.unpack(fit.trajectory.final_state.theta);
  return fit;
}

ClassifyDemo run_classify_demo(const ExperimentConfig& config) {
  const auto& cc = config.classify;
  const bme::TemplateSpec spec = template_spec(config);
  std::vector<bme::BmeParams> truths;
  for (long k = 0; k < cc.classes; ++k) {
    const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(k) /
                                                      static_cast<double>(cc.classes);
    const Eigen::Vector2d center(cc.class_offset * std::cos(angle), cc.class_offset * std::sin(angle));
    truths.push_back(bme::demo_truth(spec, center, cc.radius, config.templ.sigma2, config.templ.geo_scale));
  }

  ClassifyDemo demo;
  demo.models.resize(truths.size());
  for (std::size_t k = 0; k < truths.size(); ++k) {
    Rng rng(derive_seed(config.templ.data_seed, kClassTrain + k));
    const auto train = bme::sample_synthetic(truths[k], spec, static_cast<int>(cc.train_per_class), rng,
                                             config.templ.paired, true);
    const TemplateFit fit = fit_template(config, spec, train.images, derive_seed(config.seed, kClassFit + k));
    demo.models[k] = {spec, fit.params};
  }

  std::vector<Vec> tests;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    Rng rng(derive_seed(config.templ.data_seed, kClassTest + k));
    auto s = bme::sample_synthetic(truths[k], spec, static_cast<int>(cc.test_per_class), rng, false, true);
    for (auto& y : s.images) {
      tests.push_back(std::move(y));
      demo.truth.push_back(static_cast<Index>(k));
    }
  }
  demo.predicted.resize(tests.size());
  demo.scores.resize(tests.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < tests.size(); ++i) {
    demo.predicted[i] = bme::classify(tests[i], demo.models, &demo.scores[i]);
  }
  long wrong = 0;
  for (std::size_t i = 0; i < tests.size(); ++i) wrong += demo.predicted[i] != demo.truth[i];
  demo.error_rate = static_cast<double>(wrong) / static_cast<double>(tests.size());
  return demo;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

int run_experiment(const ExperimentConfig& config) {
  const fs::path dir(config.output);
  try {
    config.validate();
    fs::create_directories(dir);
    fs::remove(dir / "FAILED");
    log::info("running " + to_string(config.kind) + " into " + dir.string());
    switch (config.kind) {
      case ExperimentKind::bench_sampler: write_bench(config, dir); break;
      case ExperimentKind::fit_toy: write_fit_toy(config, dir); break;
      case ExperimentKind::clt_study: write_clt(config, dir); break;
      case ExperimentKind::fit_template: write_fit_template(config, dir); break;
      case ExperimentKind::sample_synthetic: write_sample_synthetic(config, dir); break;
      case ExperimentKind::classify: write_classify(config, dir); break;
    }
    write_manifest(config, dir);
    return 0;
  } catch (const std::exception& e) {
    log::error(to_string(config.kind) + " failed: " + e.what());
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream marker(dir / "FAILED");
    marker << e.what() << '\n';
    return 1;
  }
}

}  // namespace amala
