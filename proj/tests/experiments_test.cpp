#include "swapbound/experiments.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace swapbound;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "small",
    "model": "covariance",
    "dense_elements": 12,
    "arrays": [{"label": "dense", "kind": "dense"},
               {"label": "coprime", "kind": "coprime", "m1": 3, "m2": 2}],
    "thetas": [0.0, 0.2617993877991494],
    "source_covariance": {"rows": 2, "cols": 2, "data": [[1,0],[0,0],[0,0],[1,0]]},
    "snapshots": 10,
    "snr_grid_db": {"start": -10, "stop": 0, "step": 5},
    "trials": 3,
    "master_seed": 5
  })");
}

}  // namespace

TEST(Config, ParsesAndFillsDefaults) {
  const auto c = parse_config(small_config());
  EXPECT_EQ(c.scenario.kind, ModelKind::covariance);
  EXPECT_EQ(c.scenario.snr_grid_db, (std::vector<double>{-10, -5, 0}));
  EXPECT_EQ(c.arrays.size(), 2u);
  EXPECT_EQ(c.mi_event, SwapEvent::G);
  EXPECT_EQ(c.threshold_multiplier, 2.0);
  EXPECT_EQ(c.bound_events.size(), 2u);
}

TEST(Config, RejectsUnknownKeysEverywhere) {
  auto j = small_config();
  j["extra"] = 1;
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j["arrays"][1]["spacing"] = 2;
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j["threshold"] = {{"multiplier", 2.0}, {"knee", 1}};
  EXPECT_THROW(parse_config(j), ValidationError);
}

TEST(Config, RejectsBadValues) {
  auto j = small_config();
  j["snr_grid_db"] = json::array();
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j["arrays"][1]["m2"] = 3;
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j["amplitudes"] = {{1, 0}, {1, 0}};
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j["arrays"][0]["label"] = "coprime";
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j["trials"] = "many";
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j["schema_version"] = 2;
  EXPECT_THROW(parse_config(j), ValidationError);
  j = small_config();
  j.erase("thetas");
  EXPECT_THROW(parse_config(j), ValidationError);
}

TEST(Config, RoundTripAndHash) {
  const auto c = parse_config(small_config());
  const auto again = parse_config(config_to_json(c));
  EXPECT_EQ(config_hash(c), config_hash(again));
  EXPECT_EQ(config_hash(c).size(), 16u);
  auto changed = c;
  changed.scenario.master_seed = 6;
  EXPECT_NE(config_hash(c), config_hash(changed));
}

TEST(Config, PresetsLoad) {
  const auto mean = load_config_file(preset_path("paper-mean"));
  EXPECT_EQ(mean.scenario.n, 188);
  EXPECT_EQ(make_compressor(mean.arrays[1], 188).rows(), 28);
  EXPECT_EQ(mean.scenario.trials, 200);
  EXPECT_EQ(mean.scenario.snapshots, 1);
  const auto cov = load_config_file(preset_path("paper-cov"));
  EXPECT_EQ(cov.scenario.n, 36);
  EXPECT_EQ(make_compressor(cov.arrays[1], 36).rows(), 12);
  EXPECT_EQ(cov.scenario.snapshots, 200);
  EXPECT_THROW(preset_path("paper-other"), ValidationError);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 4.9e-324}) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Bounds, OneRowPerSnrEventArray) {
  const auto c = parse_config(small_config());
  const auto rows = run_bounds(c);
  EXPECT_EQ(rows.size(), 3u * 2u * 3u);  // 3 SNRs x 2 events x (2 arrays + uncompressed)
  std::ostringstream a, b;
  write_bounds_csv(a, c, rows);
  write_bounds_csv(b, c, run_bounds(c));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("# swapbound bounds schema_version=1\n# config_hash=" + config_hash(c), 0), 0u);
}

TEST(Mse, CsvRoundTripAndThreshold) {
  auto c = parse_config(small_config());
  const auto tables = run_mse(c);
  ASSERT_EQ(tables.size(), 2u);
  const auto dir = std::filesystem::temp_directory_path() / "swapbound_experiments_test";
  std::filesystem::create_directories(dir);
  for (const auto& t : tables) {
    std::ofstream os(dir / ("mse_" + t.label + ".csv"));
    write_mse_csv(os, c, t);
  }
  const auto back = read_mse_csv(dir / "mse_dense.csv", c, "dense");
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->mse, tables[0].mse);
  EXPECT_EQ(back->crb, tables[0].crb);
  EXPECT_EQ(back->sigma_t, tables[0].sigma_t);

  auto other = c;
  other.scenario.master_seed = 99;
  EXPECT_FALSE(read_mse_csv(dir / "mse_dense.csv", other, "dense").has_value());

  const auto report = run_threshold(c, tables);
  const auto j = threshold_to_json(c, report);
  EXPECT_NEAR(j["predicted_delta_db"].get<double>(), 10 * std::log10(12.0 / 6.0), 1e-12);
  EXPECT_EQ(j["arrays"].size(), 2u);
  std::filesystem::remove_all(dir);
}

TEST(Oracle, ProducesMcColumns) {
  const auto c = parse_config(small_config());
  const auto rows = run_oracle(c, 200);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    ASSERT_TRUE(r.mc.has_value());
    EXPECT_EQ(r.mc->trials, 200);
  }
}

TEST(Manifest, ListsOutputsAndHash) {
  const auto c = parse_config(small_config());
  RunManifest m{"bounds", config_hash(c), c.scenario.master_seed, "test", 0.5, {"bounds.csv", "manifest.json"}};
  const auto j = manifest_to_json(m, c);
  EXPECT_EQ(j["config_hash"], config_hash(c));
  EXPECT_EQ(j["outputs"].size(), 2u);
  EXPECT_EQ(config_hash(parse_config(j["config"])), config_hash(c));
}
