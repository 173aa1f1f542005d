#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "amala/config.hpp"

using namespace amala;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "cfg.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal bench config is filled with the documented defaults") {
  const ExperimentConfig c = parse_config_text("[experiment]\nkind = bench-sampler\n");
  CHECK(c == ExperimentConfig::defaults(ExperimentKind::bench_sampler));
  CHECK(c.bench.dim == 10);
  CHECK(c.bench.rotation_seed == 42);
  CHECK(c.bench.steps == 100000);
  CHECK(c.sampler.kind == SamplerKind::amala);
}

TEST_CASE("every kind has valid defaults that round-trip") {
  for (auto k : {ExperimentKind::bench_sampler, ExperimentKind::fit_toy, ExperimentKind::clt_study,
                 ExperimentKind::fit_template, ExperimentKind::sample_synthetic, ExperimentKind::classify}) {
    CAPTURE(to_string(k));
    const ExperimentConfig c = ExperimentConfig::defaults(k);
    CHECK_NOTHROW(c.validate());
    CHECK(parse_experiment_kind(to_string(k)) == k);
    CHECK(parse_config_text(config_to_string(c), "rt", false) == c);
  }
}

TEST_CASE("round-trip preserves non-default values exactly") {
  ExperimentConfig c = ExperimentConfig::defaults(ExperimentKind::fit_template);
  c.seed = 18446744073709551615ULL;
  c.sampler.spec.delta = 0.1 + 0.2;
  c.sampler.kind = SamplerKind::hybrid_gibbs;
  c.sampler.blocking = Blocking::joint;
  c.schedule.alpha_exponent = 0.7000000000000001;
  c.templ.paired = false;
  c.templ.data = {"a.pgm", "b b.pgm"};
  c.output = "some dir/out";
  const ExperimentConfig back = parse_config_text(config_to_string(c), "rt", false);
  CHECK(back == c);
}

TEST_CASE("range checks") {
  const std::string head = "[experiment]\nkind = fit-toy\n";
  const std::string alpha = error_of(head + "[schedule]\nalpha_exponent = 0.5\n");
  CHECK(alpha.find("must lie in (2/3, 1)") != std::string::npos);
  CHECK(alpha.find("cfg.ini:4") != std::string::npos);
  CHECK(alpha.find("alpha_exponent") != std::string::npos);
  const std::string b = error_of(head + "[sampler]\nb = 0\n");
  CHECK(b.find("b") != std::string::npos);
  CHECK(b.find("cfg.ini:4") != std::string::npos);
  CHECK_FALSE(error_of(head + "[sampler]\ndelta = -1\n").empty());
  CHECK_FALSE(error_of(head + "[sampler]\neps = nan\n").empty());
  CHECK_FALSE(error_of(head + "[sampler]\nkind = hmc\n").empty());
  CHECK_FALSE(error_of(head + "[toy]\ngroups = 0\n").empty());
  CHECK_FALSE(error_of(head + "[toy]\ngroups = 12x\n").empty());
}

TEST_CASE("structural errors name the line") {
  CHECK(error_of("[experiment]\nkind = fit-toy\n[nonsense]\n").find("cfg.ini:3") != std::string::npos);
  const std::string typo = error_of("[experiment]\nkind = fit-toy\n\n[sampler]\ndleta = 1\n");
  CHECK(typo.find("cfg.ini:5") != std::string::npos);
  CHECK(typo.find("dleta") != std::string::npos);
  const std::string dup = error_of("[experiment]\nkind = fit-toy\nseed = 1\nseed = 2\n");
  CHECK(dup.find("cfg.ini:4") != std::string::npos);
  CHECK(dup.find("line 3") != std::string::npos);
  CHECK(error_of("[experiment]\nseed = 3\n").find("kind") != std::string::npos);
  CHECK_FALSE(error_of("[experiment]\nkind fit-toy\n").empty());
  CHECK_FALSE(error_of("seed = 1\n[experiment]\nkind = fit-toy\n").empty());
}

TEST_CASE("comments and whitespace") {
  const ExperimentConfig c = parse_config_text(
      "# leading comment\n\n[experiment]   # trailing\n  kind   =   fit-toy  \nseed = 9 # nine\n");
  CHECK(c.kind == ExperimentKind::fit_toy);
  CHECK(c.seed == 9);
}

TEST_CASE("referenced paths must exist") {
  const auto dir = std::filesystem::path(AMALA_TEST_TMP);
  std::filesystem::create_directories(dir);
  const std::string missing = (dir / "does-not-exist.csv").string();
  const std::string text = "[experiment]\nkind = fit-toy\n[toy]\ndata = " + missing + "\n";
  CHECK_THROWS_AS(parse_config_text(text), ConfigError);
  CHECK_NOTHROW(parse_config_text(text, "x", false));
  {
    std::ofstream(dir / "present.csv") << "group,rep,value\n";
  }
  CHECK_NOTHROW(parse_config_text("[experiment]\nkind = fit-toy\n[toy]\ndata = " +
                                  (dir / "present.csv").string() + "\n"));
}

TEST_CASE("parse_config reads a file") {
  const auto dir = std::filesystem::path(AMALA_TEST_TMP);
  std::filesystem::create_directories(dir);
  const auto path = dir / "run.ini";
  {
    std::ofstream(path) << "[experiment]\nkind = clt-study\nreplicates = 7\n";
  }
  const ExperimentConfig c = parse_config(path.string());
  CHECK(c.kind == ExperimentKind::clt_study);
  CHECK(c.replicates == 7);
  CHECK_THROWS_AS(parse_config((dir / "nope.ini").string()), ConfigError);
}
