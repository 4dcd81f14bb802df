#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "isacsim/experiment.hpp"

using namespace isacsim;
namespace ex = isacsim::experiment;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_acf_config() {
  return nlohmann::json{
      {"schema", 1},
      {"kind", "acf_compare"},
      {"seed", 41},
      {"params",
       {{"n", 8},
        {"l", 4},
        {"m", 1},
        {"basis", "ofdm"},
        {"constellation", {{"kind", "qam"}, {"order", 16}}},
        {"rrc_alpha", 0.35},
        {"trials", 200}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Config, FailClosedValidation) {
  auto j = small_acf_config();
  j["extra"] = 1;
  EXPECT_THROW(ex::ExperimentConfig::parse(j), ex::ConfigError);

  j = small_acf_config();
  j["params"]["bogus"] = true;
  const auto cfg = ex::ExperimentConfig::parse(j);  // params checked at run time
  EXPECT_THROW(ex::run_experiment(cfg, "/tmp/isacsim_test_bogus"), ex::ConfigError);

  j = small_acf_config();
  j["schema"] = 2;
  EXPECT_THROW(ex::ExperimentConfig::parse(j), ex::ConfigError);

  j = small_acf_config();
  j["kind"] = "unknown_kind";
  EXPECT_THROW(ex::run_experiment(ex::ExperimentConfig::parse(j), "/tmp/isacsim_test_unk"),
               ex::ConfigError);
}

TEST(Runner, DeterministicOutputs) {
  const auto cfg = ex::ExperimentConfig::parse(small_acf_config());
  const fs::path dir_a = "/tmp/isacsim_test_run_a";
  const fs::path dir_b = "/tmp/isacsim_test_run_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const auto man_a = ex::run_experiment(cfg, dir_a, 1);
  const auto man_b = ex::run_experiment(cfg, dir_b, 2);  // thread count must not matter
  ASSERT_EQ(man_a.outputs.size(), man_b.outputs.size());
  for (std::size_t i = 0; i < man_a.outputs.size(); ++i) {
    EXPECT_EQ(man_a.outputs[i].first, man_b.outputs[i].first);
    EXPECT_EQ(man_a.outputs[i].second, man_b.outputs[i].second) << man_a.outputs[i].first;
    EXPECT_EQ(slurp(dir_a / man_a.outputs[i].first), slurp(dir_b / man_b.outputs[i].first));
  }
  EXPECT_EQ(man_a.config_hash, man_b.config_hash);

  // Different seed changes the Monte Carlo artifact.
  auto j = small_acf_config();
  j["seed"] = 42;
  const fs::path dir_c = "/tmp/isacsim_test_run_c";
  fs::remove_all(dir_c);
  const auto man_c = ex::run_experiment(ex::ExperimentConfig::parse(j), dir_c, 1);
  EXPECT_NE(slurp(dir_a / "acf_mc.csv"), slurp(dir_c / "acf_mc.csv"));
}

TEST(Runner, AcfStatsSchemaAndContent) {
  const auto cfg = ex::ExperimentConfig::parse(small_acf_config());
  const fs::path dir = "/tmp/isacsim_test_schema";
  fs::remove_all(dir);
  ex::run_experiment(cfg, dir, 1);
  std::ifstream in(dir / "acf_stats.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "lag,iceberg,sea,total,total_db");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 32);  // LN lags
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Runner, RegionLagMapping) {
  // 1 GHz grid: range spacing c/2 ns = 0.1499 m; the printed window relative
  // to the 20 m reference covers lags 25..75.
  const auto lags = ex::detail::region_lags(23.74, 31.24, 20.0, 1.0e9, 1280);
  EXPECT_EQ(lags.front(), 25);
  EXPECT_EQ(lags.back(), 75);
}

TEST(Runner, PulseDesignArtifacts) {
  nlohmann::json j{{"schema", 1},
                   {"kind", "pulse_design"},
                   {"seed", 1},
                   {"params",
                    {{"n", 32},
                     {"l", 4},
                     {"design_alpha", 0.25},
                     {"rrc_alpha", 0.25},
                     {"objective", "sum"},
                     {"region_lo_m", 23.74},
                     {"region_hi_m", 31.24},
                     {"region_reference_m", 20.0},
                     {"sample_rate_hz", 1.0e9}}}};
  const fs::path dir = "/tmp/isacsim_test_pd";
  fs::remove_all(dir);
  ex::run_experiment(ex::ExperimentConfig::parse(j), dir, 1);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_LT(summary.at("region_sum_designed").get<double>(),
            summary.at("region_sum_rrc").get<double>());
  EXPECT_TRUE(fs::exists(dir / "spectrum.csv"));
  EXPECT_TRUE(fs::exists(dir / "iceberg.csv"));
}
