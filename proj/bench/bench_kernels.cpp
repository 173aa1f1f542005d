// Serial vs OpenMP timings for the per-image template kernels and the
// per-block sampler sweep.

#include <benchmark/benchmark.h>

#include "amala/bme.hpp"
#include "amala/samplers.hpp"

namespace {

using namespace amala;

struct Fixture {
  bme::TemplateSpec spec = bme::TemplateSpec::make(20, 5, 3);
  bme::BmeParams truth = bme::demo_truth(spec, {0.0, 0.0}, 0.35);
  std::vector<Vec> images;
  Vec z;

  explicit Fixture(int n) {
    Rng rng(7);
    auto sample = bme::sample_synthetic(truth, spec, n, rng, false);
    images = std::move(sample.images);
    z.resize(n * spec.latent_per_image());
    for (int i = 0; i < n; ++i) z.segment(i * spec.latent_per_image(), spec.latent_per_image()) = sample.z[i];
  }
};

void posterior(benchmark::State& state, bme::Execution exec) {
  Fixture f(static_cast<int>(state.range(0)));
  const Eigen::LLT<Mat> gamma(f.truth.gamma_g);
  std::vector<double> values;
  Vec grad;
  for (auto _ : state) {
    bme::posterior_terms(f.spec, f.images, f.z, f.truth, gamma, values, &grad, exec);
    benchmark::DoNotOptimize(values.data());
  }
}

void stats(benchmark::State& state, bme::Execution exec) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Vec s = bme::suff_stat_terms(f.spec, f.images, f.z, exec);
    benchmark::DoNotOptimize(s.data());
  }
}

void sweep(benchmark::State& state, bool parallel) {
  Fixture f(static_cast<int>(state.range(0)));
  bme::BmeModel model(f.spec, bme::BmeHyperPriors::defaults(f.spec), f.images);
  const Theta theta = model.pack(f.truth);
  SamplerConfig cfg;
  cfg.blocking = Blocking::per_block;
  const MarkovSampler sampler(cfg);
  Rng rng(1);
  Vec z = f.z;
  for (auto _ : state) {
    auto r = parallel ? sampler.sweep(model, theta, z, rng) : sampler.sweep_serial(model, theta, z, rng);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK_CAPTURE(posterior, serial, bme::Execution::serial)->Arg(20)->Arg(80);
BENCHMARK_CAPTURE(posterior, openmp, bme::Execution::parallel)->Arg(20)->Arg(80);
BENCHMARK_CAPTURE(stats, serial, bme::Execution::serial)->Arg(20)->Arg(80);
BENCHMARK_CAPTURE(stats, openmp, bme::Execution::parallel)->Arg(20)->Arg(80);
BENCHMARK_CAPTURE(sweep, serial, false)->Arg(20);
BENCHMARK_CAPTURE(sweep, openmp, true)->Arg(20);

BENCHMARK_MAIN();
