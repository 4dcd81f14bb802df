// Experiment runner CLI: `isacsim run <config.json> [--out DIR] [--seed N]
// [--threads K]`. Exit codes: 0 success, 2 validation error, 3 numerical
// non-convergence.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>

#include "isacsim/experiment.hpp"

namespace ex = isacsim::experiment;

int main(int argc, char** argv) {
  CLI::App app{"isacsim: random-signal sensing experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  uint64_t seed_override = 0;
  bool has_seed = false;
  int threads = 1;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed_override, "override the config seed")
      ->each([&](const std::string&) { has_seed = true; });
  run->add_option("--threads", threads, "worker count (affects wall time only)");

  auto* kinds = app.add_subcommand("kinds", "list experiment kinds");

  CLI11_PARSE(app, argc, argv);

  if (kinds->parsed()) {
    for (const char* k :
         {"acf_compare", "coherent_integration", "modulation_compare", "pcs_sweep",
          "cd_curve", "pulse_design", "ranging_two_target", "mimo_sensing_sweep",
          "mimo_isac_tradeoff"})
      std::printf("%s\n", k);
    return 0;
  }

  try {
    std::ifstream in(config_path);
    if (!in) {
      std::fprintf(stderr, "error: cannot open config '%s'\n", config_path.c_str());
      return 2;
    }
    nlohmann::json j;
    in >> j;
    auto cfg = ex::ExperimentConfig::parse(j);
    if (has_seed) cfg.seed = seed_override;
    const auto manifest = ex::run_experiment(cfg, out_dir, threads);
    std::printf("ok: %s v%s, %.2f s, %zu outputs -> %s\n", cfg.kind.c_str(),
                manifest.version.c_str(), manifest.wall_time_s, manifest.outputs.size(),
                out_dir.c_str());
    return 0;
  } catch (const ex::ConvergenceError& e) {
    std::fprintf(stderr, "non-convergence: %s\n", e.what());
    return 3;
  } catch (const ex::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const isacsim::InvalidArgument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const isacsim::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config parse error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
