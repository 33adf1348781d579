#include "swapbound/experiments.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace swapbound {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw ValidationError(where + ": unknown key '" + item.key() + "'");
}

template <class T>
T get_required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing required key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <class T>
T get_optional(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get_required<T>(j, key, where);
}

std::vector<double> parse_grid(const json& g) {
  if (g.is_array()) return g.get<std::vector<double>>();
  reject_unknown_keys(g, {"start", "stop", "step"}, "snr_grid_db");
  const double start = get_required<double>(g, "start", "snr_grid_db");
  const double stop = get_required<double>(g, "stop", "snr_grid_db");
  const double step = get_required<double>(g, "step", "snr_grid_db");
  if (!(step > 0.0)) throw ValidationError("snr_grid_db: step must be > 0");
  std::vector<double> out;
  for (long k = 0;; ++k) {
    const double v = start + k * step;
    if (v > stop + 1e-9 * step) break;
    out.push_back(v);
  }
  return out;
}

ArraySpec parse_array(const json& j) {
  const std::string where = "arrays[]";
  reject_unknown_keys(j, {"label", "kind", "m1", "m2", "m", "seed"}, where);
  ArraySpec a;
  a.label = get_required<std::string>(j, "label", where);
  if (a.label.empty() || a.label.find_first_of("/\\ ,") != std::string::npos)
    throw ValidationError(where + ": label must be nonempty without spaces, commas or slashes");
  const auto kind = get_required<std::string>(j, "kind", where);
  if (kind == "dense") {
    a.kind = ArraySpec::Kind::dense;
  } else if (kind == "coprime") {
    a.kind = ArraySpec::Kind::coprime;
    a.m1 = get_required<int>(j, "m1", where);
    a.m2 = get_required<int>(j, "m2", where);
  } else if (kind == "random") {
    a.kind = ArraySpec::Kind::random;
    a.m = get_required<Index>(j, "m", where);
    a.seed = get_required<std::uint64_t>(j, "seed", where);
  } else {
    throw ValidationError(where + ": unknown kind '" + kind + "'");
  }
  return a;
}

json array_to_json(const ArraySpec& a) {
  switch (a.kind) {
    case ArraySpec::Kind::dense: return {{"label", a.label}, {"kind", "dense"}};
    case ArraySpec::Kind::coprime: return {{"label", a.label}, {"kind", "coprime"}, {"m1", a.m1}, {"m2", a.m2}};
    case ArraySpec::Kind::random: return {{"label", a.label}, {"kind", "random"}, {"m", a.m}, {"seed", a.seed}};
  }
  return {};
}

VectorXcd parse_complex_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected an array of [re, im]");
  VectorXcd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != 2) throw ValidationError(where + ": entries are [re, im]");
    v(static_cast<Index>(i)) = cd(j[i][0].get<double>(), j[i][1].get<double>());
  }
  return v;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

void write_header(std::ostream& os, const char* table, const ExperimentConfig& config) {
  os << "# swapbound " << table << " schema_version=" << kSchemaVersion << "\n";
  os << "# config_hash=" << config_hash(config) << "\n";
}

std::uint64_t oracle_seed(const ExperimentConfig& config, std::size_t array_index, SwapEvent event,
                          std::size_t snr_index) {
  std::uint64_t s = splitmix64(config.scenario.master_seed ^ 0x0AC1E5EEDULL);
  s = splitmix64(s + array_index);
  s = splitmix64(s + (event == SwapEvent::F ? 1 : 2));
  return splitmix64(s + snr_index);
}

template <class Fn>
std::vector<BoundRow> sweep_bounds(const ExperimentConfig& config, Fn&& fill) {
  const Scenario& base = config.scenario;
  std::vector<BoundRow> rows;
  for (std::size_t a = 0; a <= config.arrays.size(); ++a) {
    const bool uncompressed = a == config.arrays.size();
    const std::string label = uncompressed ? "uncompressed" : config.arrays[a].label;
    const CompressionOperator psi =
        uncompressed ? identity_compressor(base.n) : make_compressor(config.arrays[a], base.n);
    for (SwapEvent event : config.bound_events) {
      for (std::size_t s = 0; s < base.snr_grid_db.size(); ++s) {
        BoundRow row;
        row.snr_db = base.snr_grid_db[s];
        row.event = event;
        row.model = base.kind;
        row.array = label;
        row.compressed = !uncompressed;
        fill(row, psi, uncompressed, a, s);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Scenario ExperimentConfig::scenario_for(const ArraySpec& array) const {
  Scenario s = scenario;
  s.array = array;
  return s;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig parse_config(const json& j) {
  const std::string where = "config";
  reject_unknown_keys(j,
                      {"schema_version", "name", "model", "dense_elements", "arrays", "thetas", "amplitudes",
                       "source_covariance", "snapshots", "snr_grid_db", "trials", "master_seed", "estimator",
                       "bounds", "method_of_intervals_event", "threshold", "output_dir"},
                      where);
  if (get_required<int>(j, "schema_version", where) != kSchemaVersion)
    throw ValidationError("config: unsupported schema_version");

  ExperimentConfig c;
  Scenario& s = c.scenario;
  c.name = get_optional<std::string>(j, "name", "", where);
  const auto model = get_required<std::string>(j, "model", where);
  if (model == "mean")
    s.kind = ModelKind::mean;
  else if (model == "covariance")
    s.kind = ModelKind::covariance;
  else
    throw ValidationError("config: model must be 'mean' or 'covariance'");

  s.n = get_required<int>(j, "dense_elements", where);
  if (!j.contains("arrays") || !j.at("arrays").is_array() || j.at("arrays").empty())
    throw ValidationError("config: 'arrays' must be a nonempty list");
  std::set<std::string> labels;
  for (const auto& a : j.at("arrays")) {
    c.arrays.push_back(parse_array(a));
    if (!labels.insert(c.arrays.back().label).second || c.arrays.back().label == "uncompressed")
      throw ValidationError("config: array labels must be unique and not 'uncompressed'");
  }
  s.thetas = get_required<std::vector<double>>(j, "thetas", where);

  if (s.kind == ModelKind::mean) {
    if (j.contains("source_covariance")) throw ValidationError("config: 'source_covariance' applies to the covariance model");
    if (!j.contains("amplitudes")) throw ValidationError("config: mean model needs 'amplitudes'");
    s.alpha = parse_complex_vector(j.at("amplitudes"), "amplitudes");
  } else {
    if (j.contains("amplitudes")) throw ValidationError("config: 'amplitudes' applies to the mean model");
    if (!j.contains("source_covariance")) throw ValidationError("config: covariance model needs 'source_covariance'");
    s.r_alpha = matrix_from_json(j.at("source_covariance"));
  }

  s.snapshots = get_required<int>(j, "snapshots", where);
  if (!j.contains("snr_grid_db")) throw ValidationError("config: missing required key 'snr_grid_db'");
  s.snr_grid_db = parse_grid(j.at("snr_grid_db"));
  s.trials = get_required<long>(j, "trials", where);
  s.master_seed = get_required<std::uint64_t>(j, "master_seed", where);

  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    reject_unknown_keys(e, {"points_per_rayleigh", "refine_step", "covariance_criterion"}, "estimator");
    s.estimator.points_per_rayleigh = get_optional<double>(e, "points_per_rayleigh", 8.0, "estimator");
    s.estimator.refine_step = get_optional<double>(e, "refine_step", 1e-4, "estimator");
    const auto crit = get_optional<std::string>(e, "covariance_criterion", "stochastic", "estimator");
    if (crit == "stochastic")
      s.estimator.cov_criterion = CovCriterion::stochastic;
    else if (crit == "deterministic")
      s.estimator.cov_criterion = CovCriterion::deterministic;
    else
      throw ValidationError("estimator: covariance_criterion must be 'stochastic' or 'deterministic'");
  }

  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    reject_unknown_keys(b, {"events", "oracle_trials"}, "bounds");
    if (b.contains("events")) {
      c.bound_events.clear();
      for (const auto& e : b.at("events")) c.bound_events.push_back(parse_event(e.get<std::string>()));
      if (c.bound_events.empty()) throw ValidationError("bounds: events must be nonempty");
    }
    c.oracle_trials = get_optional<long>(b, "oracle_trials", 0, "bounds");
    if (c.oracle_trials != 0 && c.oracle_trials < 100)
      throw ValidationError("bounds: oracle_trials must be 0 or >= 100");
  }

  c.mi_event = j.contains("method_of_intervals_event")
                   ? parse_event(get_required<std::string>(j, "method_of_intervals_event", where))
                   : s.default_event();

  if (j.contains("threshold")) {
    const json& t = j.at("threshold");
    reject_unknown_keys(t, {"multiplier", "tolerance_db", "source"}, "threshold");
    c.threshold_multiplier = get_optional<double>(t, "multiplier", 2.0, "threshold");
    c.threshold_tolerance_db = get_optional<double>(t, "tolerance_db", 1.5, "threshold");
    const auto src = get_optional<std::string>(t, "source", "mse", "threshold");
    if (src == "mse")
      c.threshold_source = ExperimentConfig::ThresholdSource::mse;
    else if (src == "sigma_t")
      c.threshold_source = ExperimentConfig::ThresholdSource::sigma_t;
    else
      throw ValidationError("threshold: source must be 'mse' or 'sigma_t'");
    if (!(c.threshold_multiplier > 1.0)) throw ValidationError("threshold: multiplier must be > 1");
    if (!(c.threshold_tolerance_db > 0.0)) throw ValidationError("threshold: tolerance_db must be > 0");
  }
  c.output_dir = get_optional<std::string>(j, "output_dir", "", where);

  s.array = c.arrays.front();
  s.validate();
  for (const auto& a : c.arrays) {
    const CompressionOperator psi = make_compressor(a, s.n);
    if (psi.rows() < 3) throw ValidationError("config: every array needs at least 3 elements");
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const Scenario& s = c.scenario;
  json arrays = json::array();
  for (const auto& a : c.arrays) arrays.push_back(array_to_json(a));
  json events = json::array();
  for (SwapEvent e : c.bound_events) events.push_back(to_string(e));
  json j = {
      {"schema_version", kSchemaVersion},
      {"name", c.name},
      {"model", to_string(s.kind)},
      {"dense_elements", s.n},
      {"arrays", arrays},
      {"thetas", s.thetas},
      {"snapshots", s.snapshots},
      {"snr_grid_db", s.snr_grid_db},
      {"trials", s.trials},
      {"master_seed", s.master_seed},
      {"estimator",
       {{"points_per_rayleigh", s.estimator.points_per_rayleigh},
        {"refine_step", s.estimator.refine_step},
        {"covariance_criterion", s.estimator.cov_criterion == CovCriterion::stochastic ? "stochastic" : "deterministic"}}},
      {"bounds", {{"events", events}, {"oracle_trials", c.oracle_trials}}},
      {"method_of_intervals_event", to_string(c.mi_event)},
      {"threshold",
       {{"multiplier", c.threshold_multiplier},
        {"tolerance_db", c.threshold_tolerance_db},
        {"source", c.threshold_source == ExperimentConfig::ThresholdSource::mse ? "mse" : "sigma_t"}}},
      {"output_dir", c.output_dir},
  };
  if (s.kind == ModelKind::mean) {
    json amps = json::array();
    for (Index i = 0; i < s.alpha.size(); ++i) amps.push_back({s.alpha(i).real(), s.alpha(i).imag()});
    j["amplitudes"] = amps;
  } else {
    j["source_covariance"] = matrix_to_json(s.r_alpha);
  }
  return j;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

std::filesystem::path preset_path(const std::string& name) {
  if (name != "paper-mean" && name != "paper-cov")
    throw ValidationError("unknown preset '" + name + "' (expected paper-mean or paper-cov)");
  std::filesystem::path dir = SWAPBOUND_PRESET_DIR;
  if (const char* env = std::getenv("SWAPBOUND_PRESET_DIR")) dir = env;
  return dir / (name + ".json");
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return hex64(h);
}

// ---------------------------------------------------------------------------
// Runners

std::vector<BoundRow> run_bounds(const ExperimentConfig& config) {
  const Scenario& base = config.scenario;
  return sweep_bounds(config, [&](BoundRow& row, const CompressionOperator& psi, bool uncompressed,
                                  std::size_t a, std::size_t s) {
    const double snr = base.snr_grid_db[s];
    if (base.kind == ModelKind::mean) {
      const MeanModel model = base.mean_model(snr);
      row.probability = uncompressed ? swap_bound_uncompressed(model, row.event, base.snapshots).probability
                                     : swap_bound(model, psi, row.event, base.snapshots).probability;
      if (config.oracle_trials > 0)
        row.mc = mc_event_probability(model, psi, base.snapshots, row.event, config.oracle_trials,
                                      oracle_seed(config, a, row.event, s));
    } else {
      const CovarianceModel model = base.cov_model(snr);
      row.probability = uncompressed ? swap_bound_uncompressed(model, row.event, base.snapshots).probability
                                     : swap_bound(model, psi, row.event, base.snapshots).probability;
      if (config.oracle_trials > 0)
        row.mc = mc_event_probability(model, psi, base.snapshots, row.event, config.oracle_trials,
                                      oracle_seed(config, a, row.event, s));
    }
  });
}

std::vector<BoundRow> run_oracle(const ExperimentConfig& config, long trials) {
  const Scenario& base = config.scenario;
  return sweep_bounds(config, [&](BoundRow& row, const CompressionOperator& psi, bool, std::size_t a,
                                  std::size_t s) {
    const double snr = base.snr_grid_db[s];
    const std::uint64_t seed = oracle_seed(config, a, row.event, s);
    if (base.kind == ModelKind::mean)
      row.mc = mc_event_probability(base.mean_model(snr), psi, base.snapshots, row.event, trials, seed);
    else
      row.mc = mc_event_probability(base.cov_model(snr), psi, base.snapshots, row.event, trials, seed);
  });
}

std::vector<MseTable> run_sigma_t(const ExperimentConfig& config) {
  std::vector<MseTable> out;
  for (const auto& array : config.arrays) {
    const Scenario s = config.scenario_for(array);
    const CompressionOperator psi = make_compressor(array, s.n);
    MseTable t;
    t.label = array.label;
    t.elements = psi.rows();
    t.snr_db = s.snr_grid_db;
    t.trials = s.trials;
    t.crb = crb_curve(s, psi);
    t.pss_bound = pss_bound_curve(s, psi, config.mi_event);
    t.sigma_t = method_of_intervals(t.pss_bound, t.crb);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<MseTable> run_mse(const ExperimentConfig& config) {
  std::vector<MseTable> out = run_sigma_t(config);
  for (std::size_t a = 0; a < config.arrays.size(); ++a) {
    MseTable& t = out[a];
    t.curve = mse_sweep(config.scenario_for(config.arrays[a]));
    for (const auto& pt : t.curve.points) {
      t.mse.push_back(pt.mse);
      t.swap_frequency.push_back(pt.swap_frequency);
    }
  }
  return out;
}

ThresholdReport run_threshold(const ExperimentConfig& config, const std::vector<MseTable>& tables) {
  std::vector<ArrayThreshold> arrays;
  const bool use_mse = config.threshold_source == ExperimentConfig::ThresholdSource::mse;
  for (const auto& t : tables) {
    ArrayThreshold at;
    at.label = t.label;
    at.elements = t.elements;
    try {
      at.threshold_snr_db =
          threshold_snr(t.snr_db, use_mse ? t.mse : t.sigma_t, t.crb, config.threshold_multiplier);
    } catch (const NoThresholdError&) {
      at.threshold_snr_db.reset();
    }
    arrays.push_back(std::move(at));
  }
  const Index compressed = tables.size() >= 2 ? tables[1].elements : tables.front().elements;
  return make_threshold_report(std::move(arrays), config.scenario.n, compressed);
}

json threshold_to_json(const ExperimentConfig& config, const ThresholdReport& report) {
  json arrays = json::array();
  for (const auto& a : report.arrays) {
    json entry = {{"label", a.label}, {"elements", a.elements}};
    if (a.threshold_snr_db) {
      entry["threshold_snr_db"] = *a.threshold_snr_db;
      entry["status"] = "ok";
    } else {
      entry["threshold_snr_db"] = nullptr;
      entry["status"] = "no threshold in range";
    }
    arrays.push_back(entry);
  }
  json j = {{"schema_version", kSchemaVersion},
            {"config_hash", config_hash(config)},
            {"source", config.threshold_source == ExperimentConfig::ThresholdSource::mse ? "mse" : "sigma_t"},
            {"multiplier", config.threshold_multiplier},
            {"arrays", arrays},
            {"predicted_delta_db", report.predicted_delta_db},
            {"tolerance_db", config.threshold_tolerance_db}};
  if (report.delta_db) {
    j["delta_db"] = *report.delta_db;
    j["pass"] = std::abs(*report.delta_db - report.predicted_delta_db) <= config.threshold_tolerance_db;
  } else {
    j["delta_db"] = nullptr;
    j["pass"] = false;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Writers

void write_bounds_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<BoundRow>& rows) {
  write_header(os, "bounds", config);
  os << "snr_db,event,model,array,compressed,probability,mc_probability,mc_std\n";
  for (const auto& r : rows) {
    os << format_double(r.snr_db) << ',' << to_string(r.event) << ',' << to_string(r.model) << ',' << r.array
       << ',' << (r.compressed ? 1 : 0) << ',' << format_double(r.probability) << ',';
    if (r.mc) os << format_double(r.mc->probability) << ',' << format_double(r.mc->std_error);
    else os << ',';
    os << '\n';
  }
}

void write_oracle_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<BoundRow>& rows) {
  write_header(os, "oracle", config);
  os << "snr_db,event,model,array,compressed,mc_probability,mc_std,trials\n";
  for (const auto& r : rows) {
    os << format_double(r.snr_db) << ',' << to_string(r.event) << ',' << to_string(r.model) << ',' << r.array
       << ',' << (r.compressed ? 1 : 0) << ',' << format_double(r.mc->probability) << ','
       << format_double(r.mc->std_error) << ',' << r.mc->trials << '\n';
  }
}

void write_mse_csv(std::ostream& os, const ExperimentConfig& config, const MseTable& t) {
  write_header(os, "mse", config);
  os << "snr_db,mse,crb,sigma_t,pss_bound,trials,swap_frequency\n";
  for (std::size_t i = 0; i < t.snr_db.size(); ++i) {
    os << format_double(t.snr_db[i]) << ',' << format_double(t.mse.at(i)) << ',' << format_double(t.crb[i]) << ','
       << format_double(t.sigma_t[i]) << ',' << format_double(t.pss_bound[i]) << ',' << t.trials << ','
       << format_double(t.swap_frequency.at(i)) << '\n';
  }
}

void write_estimates_csv(std::ostream& os, const ExperimentConfig& config, const MseTable& t) {
  write_header(os, "estimates", config);
  os << "snr_db,trial,theta_a,theta_b,theta1_hat\n";
  for (std::size_t s = 0; s < t.curve.estimates.size(); ++s) {
    for (std::size_t k = 0; k < t.curve.estimates[s].size(); ++k) {
      const auto& e = t.curve.estimates[s][k];
      os << format_double(t.snr_db[s]) << ',' << k << ',' << format_double(e[0]) << ',' << format_double(e[1]) << ','
         << format_double(associate_theta1(e, config.scenario.thetas)) << '\n';
    }
  }
}

std::optional<MseTable> read_mse_csv(const std::filesystem::path& path, const ExperimentConfig& config,
                                     const std::string& label) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);
  if (line != "# swapbound mse schema_version=" + std::to_string(kSchemaVersion)) return std::nullopt;
  std::getline(in, line);
  if (line != "# config_hash=" + config_hash(config)) return std::nullopt;
  std::getline(in, line);  // column header
  MseTable t;
  t.label = label;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) return std::nullopt;
    t.snr_db.push_back(std::stod(cells[0]));
    t.mse.push_back(std::stod(cells[1]));
    t.crb.push_back(std::stod(cells[2]));
    t.sigma_t.push_back(std::stod(cells[3]));
    t.pss_bound.push_back(std::stod(cells[4]));
    t.trials = std::stol(cells[5]);
    t.swap_frequency.push_back(std::stod(cells[6]));
  }
  if (t.snr_db != config.scenario.snr_grid_db) return std::nullopt;
  return t;
}

json manifest_to_json(const RunManifest& m, const ExperimentConfig& config) {
  return {{"schema_version", kSchemaVersion},
          {"subcommand", m.subcommand},
          {"config_hash", m.config_hash},
          {"master_seed", m.master_seed},
          {"artifact_version", m.version},
          {"wall_clock_seconds", m.wall_clock_seconds},
          {"outputs", m.outputs},
          {"config", config_to_json(config)}};
}

}  // namespace swapbound
