#include "swapbound/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace swapbound;

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::string out;
  std::optional<double> multiplier;
  std::optional<double> tolerance;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "Experiment config (JSON)");
  sub->add_option("--preset", o.preset, "Built-in scenario: paper-mean or paper-cov");
  sub->add_option("--seed", o.seed, "Override master seed");
  sub->add_option("--trials", o.trials, "Override Monte-Carlo trial count");
  sub->add_option("--out", o.out, "Output directory (default: $SWAPBOUND_OUT_DIR, then config output_dir)");
}

ExperimentConfig resolve_config(const Options& o) {
  if (o.config.empty() == o.preset.empty()) throw ValidationError("exactly one of --config or --preset is required");
  ExperimentConfig c = load_config_file(o.config.empty() ? preset_path(o.preset) : fs::path(o.config));
  if (o.seed) c.scenario.master_seed = *o.seed;
  if (o.trials) {
    if (*o.trials < 1) throw ValidationError("--trials must be >= 1");
    c.scenario.trials = *o.trials;
  }
  if (o.multiplier) {
    if (!(*o.multiplier > 1.0)) throw ValidationError("--multiplier must be > 1");
    c.threshold_multiplier = *o.multiplier;
  }
  if (o.tolerance) {
    if (!(*o.tolerance > 0.0)) throw ValidationError("--tolerance must be > 0");
    c.threshold_tolerance_db = *o.tolerance;
  }
  return c;
}

fs::path resolve_out(const Options& o, const ExperimentConfig& c) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("SWAPBOUND_OUT_DIR"); env && *env) return env;
  if (!c.output_dir.empty()) return c.output_dir;
  return "swapbound_out";
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    fn(os);
    files.push_back(name);
  }
  const fs::path& dir() const { return dir_; }

  std::vector<std::string> files;

 private:
  fs::path dir_;
};

std::vector<MseTable> load_or_run_mse(const ExperimentConfig& c, Outputs& out) {
  if (c.threshold_source == ExperimentConfig::ThresholdSource::sigma_t) return run_sigma_t(c);
  std::vector<MseTable> tables;
  for (const auto& a : c.arrays) {
    auto t = read_mse_csv(out.dir() / ("mse_" + a.label + ".csv"), c, a.label);
    if (!t) break;
    t->elements = make_compressor(a, c.scenario.n).rows();
    tables.push_back(std::move(*t));
  }
  if (tables.size() == c.arrays.size()) {
    std::cerr << "reusing mse tables in " << out.dir() << "\n";
    return tables;
  }
  tables = run_mse(c);
  for (const auto& t : tables)
    out.write("mse_" + t.label + ".csv", [&](std::ostream& os) { write_mse_csv(os, c, t); });
  return tables;
}

int run(const std::string& name, const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = resolve_config(o);
  Outputs out(resolve_out(o, c));

  if (name == "bounds") {
    const auto rows = run_bounds(c);
    out.write("bounds.csv", [&](std::ostream& os) { write_bounds_csv(os, c, rows); });
  } else if (name == "oracle") {
    const long trials = o.trials ? *o.trials : (c.oracle_trials > 0 ? c.oracle_trials : 10000);
    if (trials < 100) throw ValidationError("oracle needs at least 100 trials");
    const auto rows = run_oracle(c, trials);
    out.write("oracle.csv", [&](std::ostream& os) { write_oracle_csv(os, c, rows); });
  } else if (name == "mse") {
    const auto tables = run_mse(c);
    for (const auto& t : tables) {
      out.write("mse_" + t.label + ".csv", [&](std::ostream& os) { write_mse_csv(os, c, t); });
      out.write("estimates_" + t.label + ".csv", [&](std::ostream& os) { write_estimates_csv(os, c, t); });
    }
  } else if (name == "threshold") {
    const auto tables = load_or_run_mse(c, out);
    const auto report = run_threshold(c, tables);
    const auto j = threshold_to_json(c, report);
    out.write("threshold.json", [&](std::ostream& os) { os << j.dump(2) << "\n"; });
    std::cout << j.dump(2) << "\n";
  }

  RunManifest m;
  m.subcommand = name;
  m.config_hash = config_hash(c);
  m.master_seed = c.scenario.master_seed;
  m.version = SWAPBOUND_VERSION;
  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.outputs = out.files;
  m.outputs.push_back("manifest.json");
  std::ofstream(out.dir() / "manifest.json") << manifest_to_json(m, c).dump(2) << "\n";
  std::cerr << "wrote " << m.outputs.size() << " files to " << out.dir() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace-swap bounds and DOA threshold experiments"};
  app.set_version_flag("--version", SWAPBOUND_VERSION);
  app.require_subcommand(1);

  Options o;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* name : {"bounds", "mse", "threshold", "oracle"}) {
    static const std::map<std::string, std::string> help = {
        {"bounds", "Analytic swap bounds over the SNR grid (plus optional Monte-Carlo columns)"},
        {"mse", "Monte-Carlo ML MSE, CRB, swap bound and method-of-intervals curves"},
        {"threshold", "Threshold SNR per array and the measured shift"},
        {"oracle", "Monte-Carlo swap-event frequencies only"}};
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    add_common(sub, o);
    if (std::string(name) == "threshold") {
      sub->add_option("--multiplier", o.multiplier, "Threshold criterion: curve <= multiplier * CRB");
      sub->add_option("--tolerance", o.tolerance, "Pass/fail tolerance on the threshold shift in dB");
    }
    subs.emplace_back(name, sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) return run(name, o);
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const NoThresholdError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
