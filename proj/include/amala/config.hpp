#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "amala/saem.hpp"
#include "amala/samplers.hpp"

namespace amala {

enum class ExperimentKind { bench_sampler, fit_toy, clt_study, fit_template, sample_synthetic, classify };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& s);

struct BenchSection {
  long dim = 10;
  double eig_min = 1.0;
  double eig_max = 10.0;
  std::uint64_t rotation_seed = 42;
  long steps = 100000;
  long burn_in = 5000;
  long max_lag = 50;
  double mala_delta = 0.12;
  bool operator==(const BenchSection&) const = default;
};

struct ToySection {
  long groups = 200;
  long reps = 10;
  double mu = 1.0;
  double tau2 = 1.0;
  double sigma2 = 1.0;
  std::uint64_t data_seed = 11;
  std::string data;  ///< optional CSV (group,rep,value); simulated when empty
  long clt_coordinate = 2;
  bool operator==(const ToySection&) const = default;
};

struct TemplateSection {
  long grid_size = 20;
  long photo_side = 5;
  long geo_side = 3;
  long images = 20;
  bool paired = true;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.35;
  double sigma2 = 0.04;
  double geo_scale = 0.02;
  double prior_geo_scale = 0.01;
  std::string prior_shape = "kernel";
  std::uint64_t data_seed = 5;
  std::vector<std::string> data;  ///< optional PGM inputs; synthetic when empty
  std::string model;              ///< optional archive for sample-synthetic
  bool operator==(const TemplateSection&) const = default;
};

struct ClassifySection {
  std::vector<std::string> models;
  std::vector<std::string> images;
  long classes = 3;
  double class_offset = 0.35;
  double radius = 0.3;
  long train_per_class = 20;
  long test_per_class = 50;
  bool operator==(const ClassifySection&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::bench_sampler;
  std::uint64_t seed = 1;
  std::string output = "out";
  long iterations = 0;
  long replicates = 0;
  SamplerConfig sampler;
  StepSchedule schedule;
  double radius0 = 1e10;
  double eps0 = 1e10;
  BenchSection bench;
  ToySection toy;
  TemplateSection templ;
  ClassifySection classify;

  /// Documented defaults for one experiment kind.
  static ExperimentConfig defaults(ExperimentKind kind);
  /// Range checks shared by parse() and programmatic construction.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` format with [section] headers; '#' starts a
/// comment. `origin` prefixes error messages.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>",
                                   bool check_paths = true);
ExperimentConfig parse_config(const std::string& path);
/// Writes every field, so parse_config_text(write) reproduces the config.
void write_config(std::ostream& os, const ExperimentConfig& config);
std::string config_to_string(const ExperimentConfig& config);

}  // namespace amala
