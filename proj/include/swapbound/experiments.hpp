// Batch experiments behind the command-line tool: strict JSON configs,
// bound/oracle/MSE/threshold runners, and their CSV/JSON outputs.
//
// Output formats (schema_version 1). Every CSV starts with comment lines
//   # swapbound <table> schema_version=1
//   # config_hash=<16 hex digits>
// followed by a header row. Numbers use the shortest round-trip decimal form.
//
//   bounds.csv     snr_db,event,model,array,compressed,probability,mc_probability,mc_std
//   oracle.csv     snr_db,event,model,array,compressed,mc_probability,mc_std,trials
//   mse_<a>.csv    snr_db,mse,crb,sigma_t,pss_bound,trials,swap_frequency
//   estimates_<a>.csv  snr_db,trial,theta_a,theta_b,theta1_hat
//   threshold.json, manifest.json
#pragma once

#include "swapbound/estimation.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace swapbound {

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  enum class ThresholdSource { mse, sigma_t };

  std::string name;
  Scenario scenario;  // scenario.array is replaced per entry of `arrays`
  std::vector<ArraySpec> arrays;
  std::vector<SwapEvent> bound_events{SwapEvent::F, SwapEvent::G};
  long oracle_trials = 0;
  SwapEvent mi_event = SwapEvent::F;
  double threshold_multiplier = 2.0;
  double threshold_tolerance_db = 1.5;
  ThresholdSource threshold_source = ThresholdSource::mse;
  std::string output_dir;

  Scenario scenario_for(const ArraySpec& array) const;
};

/// Validates every field; unknown keys are rejected at every level.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config_file(const std::filesystem::path& path);
std::filesystem::path preset_path(const std::string& name);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::string format_double(double v);

// ---------------------------------------------------------------------------
// Runners

struct BoundRow {
  double snr_db = 0.0;
  SwapEvent event = SwapEvent::F;
  ModelKind model = ModelKind::mean;
  std::string array;
  bool compressed = true;
  double probability = 0.0;
  std::optional<McEstimate> mc;
};

std::vector<BoundRow> run_bounds(const ExperimentConfig& config);
/// Monte-Carlo event frequencies only (no analytic column).
std::vector<BoundRow> run_oracle(const ExperimentConfig& config, long trials);

struct MseTable {
  std::string label;
  Index elements = 0;
  std::vector<double> snr_db;
  std::vector<double> mse;
  std::vector<double> crb;
  std::vector<double> sigma_t;
  std::vector<double> pss_bound;
  std::vector<double> swap_frequency;
  long trials = 0;
  MseCurve curve;  // empty when loaded from disk
};

std::vector<MseTable> run_mse(const ExperimentConfig& config);
/// Analytic columns only (CRB, bound, sigma_T); mse left empty.
std::vector<MseTable> run_sigma_t(const ExperimentConfig& config);

ThresholdReport run_threshold(const ExperimentConfig& config, const std::vector<MseTable>& tables);
nlohmann::json threshold_to_json(const ExperimentConfig& config, const ThresholdReport& report);

// ---------------------------------------------------------------------------
// Writers

void write_bounds_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<BoundRow>& rows);
void write_oracle_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<BoundRow>& rows);
void write_mse_csv(std::ostream& os, const ExperimentConfig& config, const MseTable& table);
void write_estimates_csv(std::ostream& os, const ExperimentConfig& config, const MseTable& table);

/// Reads an mse_<label>.csv written for the same config hash; nullopt otherwise.
std::optional<MseTable> read_mse_csv(const std::filesystem::path& path, const ExperimentConfig& config,
                                     const std::string& label);

struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string version;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> outputs;
};

nlohmann::json manifest_to_json(const RunManifest& manifest, const ExperimentConfig& config);

}  // namespace swapbound
