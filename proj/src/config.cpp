#include "amala/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "amala/csv.hpp"

namespace amala {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::bench_sampler: return "bench-sampler";
    case ExperimentKind::fit_toy: return "fit-toy";
    case ExperimentKind::clt_study: return "clt-study";
    case ExperimentKind::fit_template: return "fit-template";
    case ExperimentKind::sample_synthetic: return "sample-synthetic";
    case ExperimentKind::classify: return "classify";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::bench_sampler, ExperimentKind::fit_toy, ExperimentKind::clt_study,
                 ExperimentKind::fit_template, ExperimentKind::sample_synthetic,
                 ExperimentKind::classify}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::bench_sampler:
      c.sampler.spec = {0.06, 1000.0, 2.5};
      break;
    case ExperimentKind::fit_toy:
    case ExperimentKind::clt_study:
      c.iterations = kind == ExperimentKind::fit_toy ? 5000 : 2000;
      c.replicates = kind == ExperimentKind::clt_study ? 200 : 0;
      c.sampler.spec = {0.05, 1000.0, 1.0};
      c.sampler.blocking = Blocking::per_block;
      break;
    case ExperimentKind::fit_template:
    case ExperimentKind::classify:
      c.iterations = kind == ExperimentKind::fit_template ? 3000 : 1000;
      c.sampler.spec = {1e-4, 1.0, 1.0};
      c.sampler.blocking = Blocking::per_block;
      break;
    case ExperimentKind::sample_synthetic:
      c.templ.images = 40;
      break;
  }
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& v) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

using Check = std::function<std::optional<std::string>(const ExperimentConfig&)>;

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  Check check;
  bool is_path = false;

  std::string name() const { return section + "." + key; }
};

template <typename T>
using Access = T& (*)(ExperimentConfig&);

template <typename T>
T& at(const ExperimentConfig& c, Access<T> a) {
  return a(const_cast<ExperimentConfig&>(c));
}

Field real(std::string s, std::string k, Access<double> a, Check check = {}) {
  return {std::move(s), std::move(k), [a](ExperimentConfig& c, const std::string& v) { a(c) = to_double(v); },
          [a](const ExperimentConfig& c) { return csv::fmt(at(c, a)); }, std::move(check)};
}

Field integer(std::string s, std::string k, Access<long> a, Check check = {}) {
  return {std::move(s), std::move(k), [a](ExperimentConfig& c, const std::string& v) { a(c) = to_int<long>(v); },
          [a](const ExperimentConfig& c) { return std::to_string(at(c, a)); }, std::move(check)};
}

Field seed(std::string s, std::string k, Access<std::uint64_t> a) {
  return {std::move(s), std::move(k),
          [a](ExperimentConfig& c, const std::string& v) { a(c) = to_int<std::uint64_t>(v); },
          [a](const ExperimentConfig& c) { return std::to_string(at(c, a)); }, {}};
}

Field boolean(std::string s, std::string k, Access<bool> a) {
  return {std::move(s), std::move(k), [a](ExperimentConfig& c, const std::string& v) { a(c) = to_bool(v); },
          [a](const ExperimentConfig& c) { return std::string(at(c, a) ? "true" : "false"); }, {}};
}

Field text(std::string s, std::string k, Access<std::string> a, Check check = {}, bool is_path = false) {
  return {std::move(s), std::move(k), [a](ExperimentConfig& c, const std::string& v) { a(c) = v; },
          [a](const ExperimentConfig& c) { return at(c, a); }, std::move(check), is_path};
}

Field paths(std::string s, std::string k, Access<std::vector<std::string>> a) {
  return {std::move(s), std::move(k), [a](ExperimentConfig& c, const std::string& v) { a(c) = to_list(v); },
          [a](const ExperimentConfig& c) { return join(at(c, a)); }, {}, true};
}

template <typename T, typename Pred>
Check require(Access<T> a, Pred pred, std::string message) {
  return [a, pred, message](const ExperimentConfig& c) -> std::optional<std::string> {
    if (pred(at(c, a))) return std::nullopt;
    return message;
  };
}

Check real_above(Access<double> a, double lo) {
  return require(a, [lo](double v) { return std::isfinite(v) && v > lo; },
                 "must be finite and > " + csv::fmt(lo));
}

Check long_at_least(Access<long> a, long lo) {
  return require(a, [lo](long v) { return v >= lo; }, "must be >= " + std::to_string(lo));
}

const std::vector<Field>& registry() {
  using C = ExperimentConfig;
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back({"experiment", "kind",
                 [](C& c, const std::string& v) { c.kind = parse_experiment_kind(v); },
                 [](const C& c) { return to_string(c.kind); }, {}});
    f.push_back(seed("experiment", "seed", [](C& c) -> std::uint64_t& { return c.seed; }));
    f.push_back(text("experiment", "output", [](C& c) -> std::string& { return c.output; },
                     require<std::string>([](C& c) -> std::string& { return c.output; },
                                          [](const std::string& v) { return !v.empty(); },
                                          "must not be empty")));
    f.push_back(integer("experiment", "iterations", [](C& c) -> long& { return c.iterations; },
                        [](const C& c) -> std::optional<std::string> {
                          const bool needed = c.kind != ExperimentKind::bench_sampler &&
                                              c.kind != ExperimentKind::sample_synthetic;
                          if (c.iterations < (needed ? 1 : 0)) return needed ? "must be >= 1" : "must be >= 0";
                          return std::nullopt;
                        }));
    f.push_back(integer("experiment", "replicates", [](C& c) -> long& { return c.replicates; },
                        [](const C& c) -> std::optional<std::string> {
                          if (c.kind == ExperimentKind::clt_study && c.replicates < 2) return "must be >= 2";
                          if (c.replicates < 0) return "must be >= 0";
                          return std::nullopt;
                        }));

    f.push_back({"sampler", "kind",
                 [](C& c, const std::string& v) { c.sampler.kind = parse_sampler_kind(v); },
                 [](const C& c) { return to_string(c.sampler.kind); }, {}});
    f.push_back(real("sampler", "delta", [](C& c) -> double& { return c.sampler.spec.delta; },
                     real_above([](C& c) -> double& { return c.sampler.spec.delta; }, 0.0)));
    f.push_back(real("sampler", "b", [](C& c) -> double& { return c.sampler.spec.b; },
                     real_above([](C& c) -> double& { return c.sampler.spec.b; }, 0.0)));
    f.push_back(real("sampler", "eps", [](C& c) -> double& { return c.sampler.spec.eps; },
                     real_above([](C& c) -> double& { return c.sampler.spec.eps; }, 0.0)));
    f.push_back(real("sampler", "gibbs_std", [](C& c) -> double& { return c.sampler.gibbs_std; },
                     real_above([](C& c) -> double& { return c.sampler.gibbs_std; }, 0.0)));
    f.push_back({"sampler", "blocking",
                 [](C& c, const std::string& v) { c.sampler.blocking = parse_blocking(v); },
                 [](const C& c) { return to_string(c.sampler.blocking); }, {}});

    f.push_back(real("schedule", "gamma0", [](C& c) -> double& { return c.schedule.gamma0; },
                     require<double>([](C& c) -> double& { return c.schedule.gamma0; },
                                     [](double v) { return v > 0.0 && v <= 1.0; },
                                     "must lie in (0, 1]")));
    f.push_back(real("schedule", "alpha_exponent",
                     [](C& c) -> double& { return c.schedule.alpha_exponent; },
                     require<double>([](C& c) -> double& { return c.schedule.alpha_exponent; },
                                     [](double v) { return v > 2.0 / 3.0 && v < 1.0; },
                                     "must lie in (2/3, 1)")));
    f.push_back(integer("schedule", "burn_in", [](C& c) -> long& { return c.schedule.burn_in; },
                        long_at_least([](C& c) -> long& { return c.schedule.burn_in; }, 0)));

    f.push_back(real("truncation", "radius0", [](C& c) -> double& { return c.radius0; },
                     real_above([](C& c) -> double& { return c.radius0; }, 0.0)));
    f.push_back(real("truncation", "eps0", [](C& c) -> double& { return c.eps0; },
                     real_above([](C& c) -> double& { return c.eps0; }, 0.0)));

    f.push_back(integer("bench", "dim", [](C& c) -> long& { return c.bench.dim; },
                        long_at_least([](C& c) -> long& { return c.bench.dim; }, 1)));
    f.push_back(real("bench", "eig_min", [](C& c) -> double& { return c.bench.eig_min; },
                     real_above([](C& c) -> double& { return c.bench.eig_min; }, 0.0)));
    f.push_back(real("bench", "eig_max", [](C& c) -> double& { return c.bench.eig_max; },
                     [](const C& c) -> std::optional<std::string> {
                       if (std::isfinite(c.bench.eig_max) && c.bench.eig_max >= c.bench.eig_min) return std::nullopt;
                       return "must be finite and >= bench.eig_min";
                     }));
    f.push_back(seed("bench", "rotation_seed", [](C& c) -> std::uint64_t& { return c.bench.rotation_seed; }));
    f.push_back(integer("bench", "steps", [](C& c) -> long& { return c.bench.steps; },
                        [](const C& c) -> std::optional<std::string> {
                          if (c.bench.steps >= 2 && c.bench.steps > c.bench.max_lag) return std::nullopt;
                          return "must be >= 2 and > bench.max_lag";
                        }));
    f.push_back(integer("bench", "burn_in", [](C& c) -> long& { return c.bench.burn_in; },
                        long_at_least([](C& c) -> long& { return c.bench.burn_in; }, 0)));
    f.push_back(integer("bench", "max_lag", [](C& c) -> long& { return c.bench.max_lag; },
                        long_at_least([](C& c) -> long& { return c.bench.max_lag; }, 1)));
    f.push_back(real("bench", "mala_delta", [](C& c) -> double& { return c.bench.mala_delta; },
                     real_above([](C& c) -> double& { return c.bench.mala_delta; }, 0.0)));

    f.push_back(integer("toy", "groups", [](C& c) -> long& { return c.toy.groups; },
                        long_at_least([](C& c) -> long& { return c.toy.groups; }, 1)));
    f.push_back(integer("toy", "reps", [](C& c) -> long& { return c.toy.reps; },
                        long_at_least([](C& c) -> long& { return c.toy.reps; }, 2)));
    f.push_back(real("toy", "mu", [](C& c) -> double& { return c.toy.mu; },
                     require<double>([](C& c) -> double& { return c.toy.mu; },
                                     [](double v) { return std::isfinite(v); }, "must be finite")));
    f.push_back(real("toy", "tau2", [](C& c) -> double& { return c.toy.tau2; },
                     real_above([](C& c) -> double& { return c.toy.tau2; }, 0.0)));
    f.push_back(real("toy", "sigma2", [](C& c) -> double& { return c.toy.sigma2; },
                     real_above([](C& c) -> double& { return c.toy.sigma2; }, 0.0)));
    f.push_back(seed("toy", "data_seed", [](C& c) -> std::uint64_t& { return c.toy.data_seed; }));
    f.push_back(text("toy", "data", [](C& c) -> std::string& { return c.toy.data; }, {}, true));
    f.push_back(integer("toy", "clt_coordinate", [](C& c) -> long& { return c.toy.clt_coordinate; },
                        require<long>([](C& c) -> long& { return c.toy.clt_coordinate; },
                                      [](long v) { return v >= 0 && v <= 2; }, "must be 0, 1 or 2")));

    f.push_back(integer("template", "grid_size", [](C& c) -> long& { return c.templ.grid_size; },
                        long_at_least([](C& c) -> long& { return c.templ.grid_size; }, 2)));
    f.push_back(integer("template", "photo_side", [](C& c) -> long& { return c.templ.photo_side; },
                        long_at_least([](C& c) -> long& { return c.templ.photo_side; }, 1)));
    f.push_back(integer("template", "geo_side", [](C& c) -> long& { return c.templ.geo_side; },
                        long_at_least([](C& c) -> long& { return c.templ.geo_side; }, 1)));
    f.push_back(integer("template", "images", [](C& c) -> long& { return c.templ.images; },
                        long_at_least([](C& c) -> long& { return c.templ.images; }, 1)));
    f.push_back(boolean("template", "paired", [](C& c) -> bool& { return c.templ.paired; }));
    f.push_back(real("template", "center_x", [](C& c) -> double& { return c.templ.center_x; },
                     require<double>([](C& c) -> double& { return c.templ.center_x; },
                                     [](double v) { return v >= -1.0 && v <= 1.0; }, "must lie in [-1, 1]")));
    f.push_back(real("template", "center_y", [](C& c) -> double& { return c.templ.center_y; },
                     require<double>([](C& c) -> double& { return c.templ.center_y; },
                                     [](double v) { return v >= -1.0 && v <= 1.0; }, "must lie in [-1, 1]")));
    f.push_back(real("template", "radius", [](C& c) -> double& { return c.templ.radius; },
                     real_above([](C& c) -> double& { return c.templ.radius; }, 0.0)));
    f.push_back(real("template", "sigma2", [](C& c) -> double& { return c.templ.sigma2; },
                     real_above([](C& c) -> double& { return c.templ.sigma2; }, 0.0)));
    f.push_back(real("template", "geo_scale", [](C& c) -> double& { return c.templ.geo_scale; },
                     real_above([](C& c) -> double& { return c.templ.geo_scale; }, 0.0)));
    f.push_back(real("template", "prior_geo_scale", [](C& c) -> double& { return c.templ.prior_geo_scale; },
                     real_above([](C& c) -> double& { return c.templ.prior_geo_scale; }, 0.0)));
    f.push_back(text("template", "prior_shape", [](C& c) -> std::string& { return c.templ.prior_shape; },
                     require<std::string>([](C& c) -> std::string& { return c.templ.prior_shape; },
                                          [](const std::string& v) { return v == "identity" || v == "kernel"; },
                                          "must be 'identity' or 'kernel'")));
    f.push_back(seed("template", "data_seed", [](C& c) -> std::uint64_t& { return c.templ.data_seed; }));
    f.push_back(paths("template", "data", [](C& c) -> std::vector<std::string>& { return c.templ.data; }));
    f.push_back(text("template", "model", [](C& c) -> std::string& { return c.templ.model; }, {}, true));

    f.push_back(paths("classify", "models", [](C& c) -> std::vector<std::string>& { return c.classify.models; }));
    f.push_back(paths("classify", "images", [](C& c) -> std::vector<std::string>& { return c.classify.images; }));
    f.push_back(integer("classify", "classes", [](C& c) -> long& { return c.classify.classes; },
                        long_at_least([](C& c) -> long& { return c.classify.classes; }, 1)));
    f.push_back(real("classify", "class_offset", [](C& c) -> double& { return c.classify.class_offset; },
                     require<double>([](C& c) -> double& { return c.classify.class_offset; },
                                     [](double v) { return v >= 0.0 && v < 1.0; }, "must lie in [0, 1)")));
    f.push_back(real("classify", "radius", [](C& c) -> double& { return c.classify.radius; },
                     real_above([](C& c) -> double& { return c.classify.radius; }, 0.0)));
    f.push_back(integer("classify", "train_per_class", [](C& c) -> long& { return c.classify.train_per_class; },
                        long_at_least([](C& c) -> long& { return c.classify.train_per_class; }, 1)));
    f.push_back(integer("classify", "test_per_class", [](C& c) -> long& { return c.classify.test_per_class; },
                        long_at_least([](C& c) -> long& { return c.classify.test_per_class; }, 1)));
    return f;
  }();
  return fields;
}

std::vector<std::string> field_paths(const Field& f, const ExperimentConfig& c) {
  if (!f.is_path) return {};
  const std::string v = f.get(c);
  return to_list(v);
}

struct Entry {
  const Field* field;
  std::string value;
  int line;
};

}  // namespace

void ExperimentConfig::validate() const {
  for (const Field& f : registry()) {
    if (!f.check) continue;
    if (auto msg = f.check(*this)) throw ConfigError(f.name() + ": " + *msg);
  }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin, bool check_paths) {
  std::map<std::string, const Field*> by_name;
  std::map<std::string, bool> sections;
  for (const Field& f : registry()) {
    by_name[f.name()] = &f;
    sections[f.section] = true;
  }
  auto fail = [&](int line, const std::string& msg) -> ConfigError {
    return ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
  };

  std::vector<Entry> entries;
  std::map<std::string, int> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail(line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail(line_no, "expected 'key = value', got '" + line + "'");
    if (section.empty()) throw fail(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string name = section + "." + key;
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw fail(line_no, "unknown key '" + key + "' in [" + section + "]");
    if (seen.count(name)) {
      throw fail(line_no, "duplicate key '" + name + "' (first set on line " + std::to_string(seen[name]) + ")");
    }
    seen[name] = line_no;
    entries.push_back({it->second, trim(line.substr(eq + 1)), line_no});
  }

  const auto kind_it = seen.find("experiment.kind");
  if (kind_it == seen.end()) throw ConfigError(origin + ": missing required key 'experiment.kind'");
  ExperimentKind kind{};
  for (const Entry& e : entries) {
    if (e.field->name() != "experiment.kind") continue;
    try {
      kind = parse_experiment_kind(e.value);
    } catch (const std::exception& ex) {
      throw fail(e.line, "experiment.kind: " + std::string(ex.what()));
    }
  }

  ExperimentConfig config = ExperimentConfig::defaults(kind);
  for (const Entry& e : entries) {
    try {
      e.field->set(config, e.value);
    } catch (const std::exception& ex) {
      throw fail(e.line, e.field->name() + ": " + ex.what());
    }
  }

  for (const Field& f : registry()) {
    const auto line_it = seen.find(f.name());
    const int line = line_it == seen.end() ? 0 : line_it->second;
    auto where = [&](const std::string& msg) {
      return line ? fail(line, f.name() + ": " + msg)
                  : ConfigError(origin + ": " + f.name() + " (default): " + msg);
    };
    if (f.check) {
      if (auto msg = f.check(config)) throw where(*msg);
    }
    if (check_paths) {
      for (const std::string& p : field_paths(f, config)) {
        if (!std::filesystem::exists(p)) throw where("path '" + p + "' does not exist");
      }
    }
  }
  return config;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void write_config(std::ostream& os, const ExperimentConfig& config) {
  std::string section;
  for (const Field& f : registry()) {
    if (f.section != section) {
      os << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    os << f.key << " = " << f.get(config) << '\n';
  }
}

std::string config_to_string(const ExperimentConfig& config) {
  std::ostringstream os;
  write_config(os, config);
  return os.str();
}

}  // namespace amala
