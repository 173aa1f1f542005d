#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amala/bme.hpp"
#include "amala/config.hpp"
#include "amala/diagnostics.hpp"
#include "amala/saem.hpp"
#include "amala/toy_models.hpp"

namespace amala {

/// Runs one experiment, writing its artifacts and run-manifest.txt under
/// config.output. Returns 0 on success; on failure leaves a FAILED marker
/// holding the error message and returns 1.
int run_experiment(const ExperimentConfig& config);

// Building blocks shared by the CLI and the acceptance suite.

struct ChainSummary {
  ChainTrace trace;
  std::vector<double> amplitude;
  std::vector<std::vector<double>> acf;  ///< per coordinate
  std::vector<double> acf_mean;          ///< averaged over coordinates
  double msejd = 0.0;
  double acceptance = 0.0;
  double amplitude_mean = 0.0;
  double amplitude_max = 0.0;
};

struct BenchResult {
  ChainSummary amala;
  ChainSummary mala;
};

/// Both chains on the anisotropic Gaussian, each from zero with its own
/// substream of config.seed.
BenchResult run_sampler_benchmark(const ExperimentConfig& config);

RandomEffectsModel toy_model(const ExperimentConfig& config);
TruncationPolicy truncation_policy(const ExperimentConfig& config, const LatentModel& model);

bme::TemplateSpec template_spec(const ExperimentConfig& config);
bme::BmeHyperPriors template_priors(const ExperimentConfig& config, const bme::TemplateSpec& spec);
/// Ground truth of the synthetic template task: a blob at (center_x,
/// center_y) with template.sigma2 and template.geo_scale.
bme::BmeParams template_truth(const ExperimentConfig& config, const bme::TemplateSpec& spec);

struct TemplateFit {
  bme::BmeParams params;
  Trajectory trajectory;
};

TemplateFit fit_template(const ExperimentConfig& config, const bme::TemplateSpec& spec,
                         const std::vector<Vec>& images, std::uint64_t seed);

struct ClassifyDemo {
  std::vector<bme::ClassModel> models;
  std::vector<Index> truth;
  std::vector<Index> predicted;
  std::vector<std::vector<double>> scores;
  double error_rate = 0.0;
};

/// Synthetic blob classes on a circle of radius classify.class_offset: fits
/// one model per class, then classifies fresh test images.
ClassifyDemo run_classify_demo(const ExperimentConfig& config);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace amala
