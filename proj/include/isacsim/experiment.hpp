// Reproducible experiment runner: parses a JSON config (fail-closed), runs
// the named experiment through the library modules, and writes CSV/JSON
// artifacts plus a manifest with per-output content hashes. Identical
// (config, seed, version) produce byte-identical outputs.
#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "isacsim/acf.hpp"
#include "isacsim/cdtheory.hpp"
#include "isacsim/constellation.hpp"
#include "isacsim/io.hpp"
#include "isacsim/mimo.hpp"
#include "isacsim/modulation.hpp"
#include "isacsim/pcs.hpp"
#include "isacsim/pulse.hpp"
#include "isacsim/ranging.hpp"

namespace isacsim::experiment {

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

/// Fail-closed key validation: rejects unknown fields so a config cannot
/// silently carry dead parameters.
inline void expect_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                        const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown field '" + where + "." + it.key() + "'");
}

template <typename T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing field '" + where + "." + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError("bad value for '" + where + "." + key + "'");
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline constellation::Constellation parse_constellation(const nlohmann::json& j,
                                                        const std::string& where) {
  expect_keys(j, {"kind", "order"}, where);
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "gaussian") return constellation::Constellation::gaussian();
  const int order = get<int>(j, "order", where);
  if (kind == "psk") return constellation::make_standard(constellation::Kind::psk, order);
  if (kind == "qam") return constellation::make_standard(constellation::Kind::qam, order);
  throw ConfigError(where + ".kind must be psk|qam|gaussian");
}

inline modulation::Kind parse_basis_kind(const std::string& name, const std::string& where) {
  if (name == "sc") return modulation::Kind::sc;
  if (name == "ofdm") return modulation::Kind::ofdm;
  if (name == "cdma") return modulation::Kind::cdma;
  if (name == "afdm") return modulation::Kind::afdm;
  if (name == "otfs") return modulation::Kind::otfs;
  throw ConfigError(where + ": unknown basis kind '" + name + "'");
}

/// Sidelobe-region lags from a range window (meters) relative to a reference
/// range (the strong scatterer whose sidelobes cover the window).
inline std::vector<Eigen::Index> region_lags(double lo_m, double hi_m, double reference_m,
                                             double sample_rate_hz, Eigen::Index grid) {
  const double spacing_m =
      0.5 * ranging::kSpeedOfLight / sample_rate_hz;  // range per lag
  const auto lo =
      static_cast<Eigen::Index>(std::ceil((lo_m - reference_m) / spacing_m - 1e-9));
  const auto hi =
      static_cast<Eigen::Index>(std::floor((hi_m - reference_m) / spacing_m + 1e-9));
  require(lo >= 1 && hi >= lo && hi < grid, "region_lags: window outside the lag grid");
  std::vector<Eigen::Index> lags;
  for (Eigen::Index k = lo; k <= hi; ++k) lags.push_back(k);
  return lags;
}

/// The Fig.-8/9 sensing prior: unitary basis from the seed with a geometric
/// eigenvalue profile over the first `strong` modes and a weak floor after
/// them (a `strong`-dimensional dominant scattering subspace).
inline CMat structured_prior(Eigen::Index nt, Eigen::Index strong, double decay,
                             double scale, double weak_frac, uint64_t seed) {
  Rng rng(seed, 0);
  CMat a(nt, nt);
  for (Eigen::Index i = 0; i < nt; ++i)
    for (Eigen::Index j = 0; j < nt; ++j) a(i, j) = rng.cnormal();
  const CMat q = Eigen::HouseholderQR<CMat>(a).householderQ();
  RVec lam(nt);
  for (Eigen::Index i = 0; i < nt; ++i)
    lam(i) = i < strong ? scale * std::pow(decay, static_cast<double>(i)) : scale * weak_frac;
  return q * lam.asDiagonal().toDenseMatrix().cast<cxd>() * q.adjoint();
}

}  // namespace detail

struct ExperimentConfig {
  std::string kind;
  uint64_t seed = 0;
  nlohmann::json params;

  static ExperimentConfig parse(const nlohmann::json& j) {
    detail::expect_keys(j, {"schema", "kind", "seed", "params"}, "config");
    if (detail::get<int>(j, "schema", "config") != 1)
      throw ConfigError("unsupported config schema");
    ExperimentConfig c;
    c.kind = detail::get<std::string>(j, "kind", "config");
    if (!j.contains("seed")) throw ConfigError("missing field 'config.seed'");
    c.seed = j.at("seed").get<uint64_t>();
    c.params = j.value("params", nlohmann::json::object());
    return c;
  }
};

struct RunManifest {
  std::string config_hash;
  std::string version = kVersion;
  double wall_time_s = 0.0;
  std::vector<std::pair<std::string, std::string>> outputs;  // (file, fnv64)

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["wall_time_s"] = wall_time_s;
    auto& arr = j["outputs"] = nlohmann::json::array();
    for (const auto& [f, h] : outputs) arr.push_back({{"file", f}, {"checksum", h}});
    return j;
  }
};

namespace detail {

using OutputList = std::vector<std::filesystem::path>;

// ---- acf_compare -----------------------------------------------------------
inline void run_acf_compare(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                            int threads, OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"n", "l", "m", "basis", "constellation", "rrc_alpha", "trials"}, "params");
  const Eigen::Index n = get<Eigen::Index>(p, "n", "params");
  const Eigen::Index l = get<Eigen::Index>(p, "l", "params");
  const Eigen::Index m = get_or<Eigen::Index>(p, "m", 1);
  const Eigen::Index trials = get_or<Eigen::Index>(p, "trials", 10000);
  const auto basis = modulation::make_basis(
      parse_basis_kind(get<std::string>(p, "basis", "params"), "params.basis"), n);
  const auto con = parse_constellation(p.at("constellation"), "params.constellation");
  const auto pul = pulse::rrc_taps(get<double>(p, "rrc_alpha", "params"), l, n);

  const auto stats = acf::expected_squared_acf(basis, con, pul, m);
  {
    io::CsvWriter csv(dir / "acf_stats.csv", {"lag", "iceberg", "sea", "total", "total_db"});
    const RVec db = stats.total_db(n);
    for (Eigen::Index k = 0; k < stats.total.size(); ++k)
      csv.row_values({static_cast<double>(k), stats.iceberg(k), stats.sea(k),
                      stats.total(k), db(k)});
    outs.push_back(dir / "acf_stats.csv");
  }
  const auto mc = acf::mc_expected_squared_acf(basis, con, pul, m, trials, cfg.seed, threads);
  {
    io::CsvWriter csv(dir / "acf_mc.csv",
                      {"lag", "mc_mean", "ci_half", "closed_form", "inside_ci"});
    for (Eigen::Index k = 0; k < mc.mean.size(); ++k)
      csv.row_values({static_cast<double>(k), mc.mean(k), mc.ci_half(k), stats.total(k),
                      std::abs(mc.mean(k) - stats.total(k)) <= mc.ci_half(k) ? 1.0 : 0.0});
    outs.push_back(dir / "acf_mc.csv");
  }
}

// ---- coherent_integration --------------------------------------------------
inline void run_coherent_integration(const ExperimentConfig& cfg,
                                     const std::filesystem::path& dir, int threads,
                                     OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"n", "l", "m_list", "basis", "constellation", "rrc_alpha", "trials"},
              "params");
  const Eigen::Index n = get<Eigen::Index>(p, "n", "params");
  const Eigen::Index l = get<Eigen::Index>(p, "l", "params");
  const auto m_list = get<std::vector<Eigen::Index>>(p, "m_list", "params");
  const Eigen::Index trials = get_or<Eigen::Index>(p, "trials", 400);
  const auto basis = modulation::make_basis(
      parse_basis_kind(get<std::string>(p, "basis", "params"), "params.basis"), n);
  const auto con = parse_constellation(p.at("constellation"), "params.constellation");
  const auto pul = pulse::rrc_taps(get<double>(p, "rrc_alpha", "params"), l, n);

  // Sea-dominated lags: iceberg below 1% of the M=1 sea level.
  const auto base_stats = acf::expected_squared_acf(basis, con, pul, 1);
  std::vector<Eigen::Index> sea_lags;
  for (Eigen::Index k = 1; k < base_stats.total.size(); ++k)
    if (base_stats.iceberg(k) <= 0.01 * base_stats.sea(k)) sea_lags.push_back(k);
  require(sea_lags.size() >= 16, "coherent_integration: too few sea-dominated lags");

  io::CsvWriter csv(dir / "coherent.csv",
                    {"m", "sea_median_closed", "sea_median_mc", "drop_db_closed",
                     "drop_db_mc"});
  double ref_closed = 0.0, ref_mc = 0.0;
  for (const Eigen::Index m : m_list) {
    const auto stats = acf::expected_squared_acf(basis, con, pul, m);
    const auto mc = acf::mc_expected_squared_acf(basis, con, pul, m, trials,
                                                 cfg.seed + static_cast<uint64_t>(m),
                                                 threads);
    std::vector<double> closed_vals, mc_vals;
    for (const Eigen::Index k : sea_lags) {
      closed_vals.push_back(stats.total(k));
      mc_vals.push_back(mc.mean(k));
    }
    auto median = [](std::vector<double> v) {
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2),
                       v.end());
      return v[v.size() / 2];
    };
    const double mc_med = median(mc_vals), closed_med = median(closed_vals);
    if (m == m_list.front()) {
      ref_closed = closed_med;
      ref_mc = mc_med;
    }
    csv.row_values({static_cast<double>(m), closed_med, mc_med,
                    db10(ref_closed / closed_med), db10(ref_mc / mc_med)});
  }
  outs.push_back(dir / "coherent.csv");
}

// ---- modulation_compare ----------------------------------------------------
inline void run_modulation_compare(const ExperimentConfig& cfg,
                                   const std::filesystem::path& dir, int /*threads*/,
                                   OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"n", "l", "m_list", "bases", "constellation", "rrc_alpha"}, "params");
  const Eigen::Index n = get<Eigen::Index>(p, "n", "params");
  const Eigen::Index l = get<Eigen::Index>(p, "l", "params");
  const auto m_list = get<std::vector<Eigen::Index>>(p, "m_list", "params");
  const auto base_names = get<std::vector<std::string>>(p, "bases", "params");
  const auto con = parse_constellation(p.at("constellation"), "params.constellation");
  const auto pul = pulse::rrc_taps(get<double>(p, "rrc_alpha", "params"), l, n);

  io::CsvWriter csv(dir / "modulation_compare.csv",
                    {"basis", "m", "lag", "total", "total_db"});
  std::map<std::string, acf::AcfStats> stats1;
  for (const auto& name : base_names) {
    const auto basis = modulation::make_basis(parse_basis_kind(name, "params.bases"), n);
    for (const Eigen::Index m : m_list) {
      const auto stats = acf::expected_squared_acf(basis, con, pul, m);
      const RVec db = stats.total_db(n);
      for (Eigen::Index k = 0; k < stats.total.size(); ++k)
        csv.row({name, std::to_string(m), std::to_string(k), io::fmt(stats.total(k)),
                 io::fmt(db(k))});
      if (m == 1) stats1.emplace(name, stats);
    }
  }
  outs.push_back(dir / "modulation_compare.csv");

  // Sea-level gap summary over sea-dominated lags at M = 1.
  nlohmann::json summary;
  if (stats1.count("ofdm")) {
    const auto& ofdm = stats1.at("ofdm");
    std::vector<Eigen::Index> sea_lags;
    for (Eigen::Index k = 1; k < ofdm.total.size(); ++k)
      if (ofdm.iceberg(k) <= 0.01 * ofdm.sea(k)) sea_lags.push_back(k);
    for (const auto& [name, st] : stats1) {
      if (name == "ofdm") continue;
      double acc = 0.0;
      for (const Eigen::Index k : sea_lags) acc += db10(st.total(k) / ofdm.total(k));
      summary["sea_gap_db_vs_ofdm"][name] = acc / static_cast<double>(sea_lags.size());
    }
  }
  io::write_json(dir / "summary.json", summary);
  outs.push_back(dir / "summary.json");
}

// ---- pcs_sweep ---------------------------------------------------------------
inline void run_pcs_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                          int /*threads*/, OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"order", "snr_db", "c0_list", "gh_order", "tol", "max_iter"}, "params");
  const int order = get<int>(p, "order", "params");
  const double snr = from_db10(get<double>(p, "snr_db", "params"));
  const auto c0_list = get<std::vector<double>>(p, "c0_list", "params");
  pcs::PcsProblem prob;
  prob.alphabet = constellation::make_standard(constellation::Kind::qam, order).points();
  prob.snr = snr;
  prob.gh_order = get_or<int>(p, "gh_order", 16);
  const auto curve = pcs::sweep_tradeoff(prob, c0_list, get_or<double>(p, "tol", 1e-7),
                                         get_or<int>(p, "max_iter", 5000));
  io::CsvWriter csv(dir / "tradeoff.csv", {"c0", "mi_bits", "kurtosis", "support_size"});
  nlohmann::json dists = nlohmann::json::array();
  for (const auto& pt : curve) {
    csv.row_values({pt.c0, pt.mi_bits, pt.kurtosis, static_cast<double>(pt.support_size)});
    nlohmann::json d;
    d["c0"] = pt.c0;
    auto& probs = d["probs"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < pt.probs.size(); ++i) probs.push_back(pt.probs(i));
    dists.push_back(std::move(d));
  }
  outs.push_back(dir / "tradeoff.csv");
  io::write_json(dir / "distributions.json", dists);
  outs.push_back(dir / "distributions.json");
}

// ---- cd_curve ----------------------------------------------------------------
inline void run_cd_curve(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         int /*threads*/, OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"power_budget", "d_list", "grid_points", "h_order", "y_order", "tol",
                  "max_iter"},
              "params");
  const double b = get<double>(p, "power_budget", "params");
  const auto d_list = get<std::vector<double>>(p, "d_list", "params");
  const auto prob = cdtheory::make_problem(b, d_list.front(),
                                           get_or<Eigen::Index>(p, "grid_points", 61),
                                           get_or<int>(p, "h_order", 13),
                                           get_or<int>(p, "y_order", 21));
  const auto curve = cdtheory::cd_curve(prob, d_list, get_or<double>(p, "tol", 1e-6),
                                        get_or<int>(p, "max_iter", 8000));
  io::CsvWriter csv(dir / "cd_curve.csv",
                    {"distortion_cap", "rate_nats", "avg_distortion", "avg_power"});
  io::CsvWriter dist(dir / "distributions.csv", {"distortion_cap", "x", "prob"});
  for (const auto& pt : curve) {
    csv.row_values({pt.distortion_cap, pt.rate_nats, pt.avg_distortion, pt.avg_power});
    for (Eigen::Index i = 0; i < pt.probs.size(); ++i)
      dist.row_values({pt.distortion_cap, prob.x_grid(i), pt.probs(i)});
  }
  outs.push_back(dir / "cd_curve.csv");
  outs.push_back(dir / "distributions.csv");
}

// ---- pulse_design ------------------------------------------------------------
inline void run_pulse_design(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                             int /*threads*/, OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"n", "l", "design_alpha", "rrc_alpha", "objective", "region_lo_m",
                  "region_hi_m", "region_reference_m", "sample_rate_hz"},
              "params");
  const Eigen::Index n = get<Eigen::Index>(p, "n", "params");
  const Eigen::Index l = get<Eigen::Index>(p, "l", "params");
  const double fs = get<double>(p, "sample_rate_hz", "params");
  pulse::PulseDesignSpec spec;
  spec.alpha = get<double>(p, "design_alpha", "params");
  spec.n = n;
  spec.l = l;
  spec.sidelobe_region = region_lags(
      get<double>(p, "region_lo_m", "params"), get<double>(p, "region_hi_m", "params"),
      get<double>(p, "region_reference_m", "params"), fs, l * n);
  const auto obj_name = get_or<std::string>(p, "objective", "sum");
  spec.objective = obj_name == "max" ? pulse::DesignObjective::max
                                     : pulse::DesignObjective::sum;
  pulse::DesignReport rep;
  const auto designed = pulse::design_pulse(spec, 1e-9, &rep);
  if (!rep.converged) throw ConvergenceError("pulse_design: solver did not converge");
  const auto rrc = pulse::rrc_taps(get<double>(p, "rrc_alpha", "params"), l, n);

  io::CsvWriter gcsv(dir / "spectrum.csv", {"index", "g_designed", "g_rrc"});
  for (Eigen::Index i = 0; i < n; ++i)
    gcsv.row_values({static_cast<double>(i), designed.g(i), rrc.g(i)});
  outs.push_back(dir / "spectrum.csv");

  const CVec acf_d = acf::periodic_acf(designed.taps);
  const CVec acf_r = acf::periodic_acf(rrc.taps);
  io::CsvWriter icsv(dir / "iceberg.csv", {"lag", "designed", "rrc"});
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  for (Eigen::Index k = 0; k < l * n; ++k)
    icsv.row_values({static_cast<double>(k), n2 * std::norm(acf_d(k)),
                     n2 * std::norm(acf_r(k))});
  outs.push_back(dir / "iceberg.csv");

  nlohmann::json summary;
  summary["region_sum_designed"] =
      pulse::iceberg_region_sum(designed, spec.sidelobe_region);
  summary["region_sum_rrc"] = pulse::iceberg_region_sum(rrc, spec.sidelobe_region);
  summary["region_lags"] = {spec.sidelobe_region.front(), spec.sidelobe_region.back()};
  io::write_json(dir / "summary.json", summary);
  outs.push_back(dir / "summary.json");
}

// ---- ranging_two_target --------------------------------------------------------
inline void run_ranging_two_target(const ExperimentConfig& cfg,
                                   const std::filesystem::path& dir, int /*threads*/,
                                   OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"n", "l", "design_alpha", "rrc_alpha", "constellation", "m_list",
                  "trials", "sample_rate_hz", "strong_range_m", "weak_range_m",
                  "gap_db_lo", "gap_db_hi", "noise_sigma", "region_lo_m", "region_hi_m"},
              "params");
  const Eigen::Index n = get<Eigen::Index>(p, "n", "params");
  const Eigen::Index l = get<Eigen::Index>(p, "l", "params");
  const double fs = get<double>(p, "sample_rate_hz", "params");
  const double ts = 1.0 / fs;
  const auto con = parse_constellation(p.at("constellation"), "params.constellation");
  const auto basis = modulation::make_basis(modulation::Kind::ofdm, n);
  const auto m_list = get<std::vector<Eigen::Index>>(p, "m_list", "params");
  const Eigen::Index trials = get<Eigen::Index>(p, "trials", "params");
  const double strong_m = get<double>(p, "strong_range_m", "params");
  const double weak_m = get<double>(p, "weak_range_m", "params");
  const double gap_lo = get<double>(p, "gap_db_lo", "params");
  const double gap_hi = get<double>(p, "gap_db_hi", "params");
  const double noise_sigma = get<double>(p, "noise_sigma", "params");
  const double lo_m = get<double>(p, "region_lo_m", "params");
  const double hi_m = get<double>(p, "region_hi_m", "params");

  // Pulses: RRC benchmark and the region-optimized design.
  const auto rrc = pulse::rrc_taps(get<double>(p, "rrc_alpha", "params"), l, n);
  pulse::PulseDesignSpec spec;
  spec.alpha = get<double>(p, "design_alpha", "params");
  spec.n = n;
  spec.l = l;
  spec.sidelobe_region = region_lags(lo_m, hi_m, strong_m, fs, l * n);
  const auto designed = pulse::design_pulse(spec, 1e-9);

  const double spacing_m = 0.5 * ranging::kSpeedOfLight * ts;
  const auto region_lo = static_cast<Eigen::Index>(std::llround(lo_m / spacing_m));
  const auto region_hi = static_cast<Eigen::Index>(std::llround(hi_m / spacing_m));
  const std::vector<double> truth{
      spacing_m * std::llround(weak_m / spacing_m)};  // on-grid truth

  io::CsvWriter csv(dir / "rmse.csv", {"pulse", "m", "rmse_m"});
  for (const auto* pul : {&rrc, &designed}) {
    const std::string name = (pul == &rrc) ? "rrc" : "designed";
    for (const Eigen::Index m : m_list) {
      double sq = 0.0;
      for (Eigen::Index t = 0; t < trials; ++t) {
        Rng trial_rng(cfg.seed, 1000000 + static_cast<uint64_t>(t));
        const double gap_db = gap_lo + (gap_hi - gap_lo) * trial_rng.uniform();
        ranging::Scene scene;
        scene.sample_interval = ts;
        scene.noise_sigma = noise_sigma;
        scene.targets.push_back(
            {ranging::range_to_delay(strong_m), cxd{1.0, 0.0}});
        scene.targets.push_back(
            {ranging::range_to_delay(weak_m), cxd{std::pow(10.0, -gap_db / 20.0), 0.0}});
        std::vector<ranging::RangeProfile> profiles;
        profiles.reserve(static_cast<std::size_t>(m));
        for (Eigen::Index j = 0; j < m; ++j) {
          const uint64_t stream =
              (static_cast<uint64_t>(t) * 4096 + static_cast<uint64_t>(j)) * 2;
          const CVec s = con.sample(n, cfg.seed, stream);
          const auto x = acf::shape_signal(s, basis, *pul);
          const CVec y = ranging::synthesize_echo(x, scene, cfg.seed, stream + 1);
          profiles.push_back(ranging::matched_filter_profile(y, x, ts));
        }
        const auto integ = ranging::integrate_profiles(profiles);
        const auto est =
            ranging::estimate_ranges(integ, 1, region_lo, region_hi, &truth);
        sq += est.rmse_m * est.rmse_m;
      }
      csv.row({name, std::to_string(m), io::fmt(std::sqrt(sq / static_cast<double>(trials)))});
    }
  }
  outs.push_back(dir / "rmse.csv");
}

// ---- mimo scenarios -----------------------------------------------------------
inline mimo::MimoScenario parse_mimo_scenario(const nlohmann::json& p, double snr_db,
                                              uint64_t seed) {
  const Eigen::Index nt = get<Eigen::Index>(p, "n_t", "params");
  const Eigen::Index ns = get<Eigen::Index>(p, "n_s", "params");
  const Eigen::Index nc = get<Eigen::Index>(p, "n_c", "params");
  const Eigen::Index n = get<Eigen::Index>(p, "n", "params");
  const double pt = get_or<double>(p, "p_t", 1.0);
  const double sigma_s = std::sqrt(pt / from_db10(snr_db));
  auto sc = mimo::MimoScenario::make(nt, ns, nc, n, 0.7, pt, sigma_s,
                                     get_or<double>(p, "sigma_c", 1.0), seed);
  const auto& prior = p.at("prior");
  expect_keys(prior, {"strong", "decay", "scale", "weak_frac"}, "params.prior");
  sc.r_h = structured_prior(nt, get<Eigen::Index>(prior, "strong", "params.prior"),
                            get<double>(prior, "decay", "params.prior"),
                            get<double>(prior, "scale", "params.prior"),
                            get<double>(prior, "weak_frac", "params.prior"), seed + 1);
  return sc;
}

inline void run_mimo_sensing_sweep(const ExperimentConfig& cfg,
                                   const std::filesystem::path& dir, int /*threads*/,
                                   OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"n_t", "n_s", "n_c", "n", "p_t", "sigma_c", "prior", "snr_db_list",
                  "trials", "sgd_iters"},
              "params");
  const auto snrs = get<std::vector<double>>(p, "snr_db_list", "params");
  const Eigen::Index trials = get<Eigen::Index>(p, "trials", "params");
  io::CsvWriter csv(dir / "sensing_sweep.csv",
                    {"snr_db", "elmmse_ddp", "elmmse_dip", "elmmse_wf", "gap_wf_dip",
                     "gap_wf_dip_ci", "gap_dip_ddp", "gap_dip_ddp_ci"});
  for (const double snr_db : snrs) {
    auto sc = parse_mimo_scenario(p, snr_db, cfg.seed);
    const auto wf = mimo::wf_precoder(sc);
    mimo::SgdConfig sgd;
    sgd.iters = get_or<int>(p, "sgd_iters", 1500);
    sgd.seed = cfg.seed + 7;
    const auto dip = mimo::dip_precoder(sc, sgd);
    RVec v_wf(trials), v_dip(trials), v_ddp(trials);
    for (Eigen::Index t = 0; t < trials; ++t) {
      const CMat s = mimo::sample_payload(sc, cfg.seed + 99, static_cast<uint64_t>(t));
      v_ddp(t) = mimo::conditional_mmse(mimo::ddp_precoder(s, sc).w, s, sc);
      v_dip(t) = mimo::conditional_mmse(dip.w, s, sc);
      v_wf(t) = mimo::conditional_mmse(wf.w, s, sc);
    }
    auto paired = [&](const RVec& a, const RVec& b) {
      const RVec d = a - b;
      const double m = d.mean();
      const double var = (d.array() - m).square().sum() / static_cast<double>(trials - 1);
      return std::pair<double, double>{
          m, 2.5758293035489004 * std::sqrt(var / static_cast<double>(trials))};
    };
    const auto [g1, c1] = paired(v_wf, v_dip);
    const auto [g2, c2] = paired(v_dip, v_ddp);
    csv.row_values({snr_db, v_ddp.mean(), v_dip.mean(), v_wf.mean(), g1, c1, g2, c2});
  }
  outs.push_back(dir / "sensing_sweep.csv");
}

inline void run_mimo_isac_tradeoff(const ExperimentConfig& cfg,
                                   const std::filesystem::path& dir, int /*threads*/,
                                   OutputList& outs) {
  const auto& p = cfg.params;
  expect_keys(p, {"n_t", "n_s", "n_c", "n", "p_t", "sigma_c", "prior", "snr_db",
                  "r0_fractions", "trials", "sgd_iters", "w_iters", "ddp_realizations"},
              "params");
  auto sc = parse_mimo_scenario(p, get<double>(p, "snr_db", "params"), cfg.seed);
  const auto fracs = get<std::vector<double>>(p, "r0_fractions", "params");
  const Eigen::Index trials = get<Eigen::Index>(p, "trials", "params");
  const Eigen::Index ddp_reals = get_or<Eigen::Index>(p, "ddp_realizations", 8);
  const double cap = mimo::max_rate(sc);
  mimo::IsacConfig icfg;
  icfg.sgd.iters = get_or<int>(p, "sgd_iters", 800);
  icfg.sgd.seed = cfg.seed + 7;
  icfg.w_iters = get_or<int>(p, "w_iters", 250);

  io::CsvWriter csv(dir / "isac_tradeoff.csv",
                    {"r0", "rate_det", "elmmse_det", "elmmse_det_ci", "rate_dip",
                     "elmmse_dip", "elmmse_dip_ci", "rate_ddp_min", "elmmse_ddp"});
  for (const double frac : fracs) {
    const double r0 = frac * cap;
    const auto det = mimo::isac_precoder(mimo::PrecoderKind::isac_det, sc, r0, icfg);
    const auto dip = mimo::isac_precoder(mimo::PrecoderKind::isac_dip, sc, r0, icfg);
    const auto e_det = mimo::elmmse_mc(det.w, sc, trials, cfg.seed + 99);
    const auto e_dip = mimo::elmmse_mc(dip.w, sc, trials, cfg.seed + 99);
    double e_ddp = 0.0, r_ddp = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < ddp_reals; ++m) {
      const CMat s = mimo::sample_payload(sc, cfg.seed + 99, static_cast<uint64_t>(m));
      const auto ddp = mimo::isac_precoder(mimo::PrecoderKind::isac_ddp, sc, r0, icfg, &s);
      e_ddp += mimo::conditional_mmse(ddp.w, s, sc);
      r_ddp = std::min(r_ddp, mimo::rate_bps(ddp.w, sc));
    }
    e_ddp /= static_cast<double>(ddp_reals);
    csv.row_values({r0, mimo::rate_bps(det.w, sc), e_det.mean, e_det.ci_half,
                    mimo::rate_bps(dip.w, sc), e_dip.mean, e_dip.ci_half, r_ddp, e_ddp});
  }
  outs.push_back(dir / "isac_tradeoff.csv");
  nlohmann::json meta;
  meta["capacity_bps"] = cap;
  io::write_json(dir / "meta.json", meta);
  outs.push_back(dir / "meta.json");
}

}  // namespace detail

/// Executes the named experiment and writes its artifacts plus manifest.json.
inline RunManifest run_experiment(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir, int threads = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto start = std::chrono::steady_clock::now();
  detail::OutputList outs;
  try {
    if (cfg.kind == "acf_compare")
      detail::run_acf_compare(cfg, out_dir, threads, outs);
    else if (cfg.kind == "coherent_integration")
      detail::run_coherent_integration(cfg, out_dir, threads, outs);
    else if (cfg.kind == "modulation_compare")
      detail::run_modulation_compare(cfg, out_dir, threads, outs);
    else if (cfg.kind == "pcs_sweep")
      detail::run_pcs_sweep(cfg, out_dir, threads, outs);
    else if (cfg.kind == "cd_curve")
      detail::run_cd_curve(cfg, out_dir, threads, outs);
    else if (cfg.kind == "pulse_design")
      detail::run_pulse_design(cfg, out_dir, threads, outs);
    else if (cfg.kind == "ranging_two_target")
      detail::run_ranging_two_target(cfg, out_dir, threads, outs);
    else if (cfg.kind == "mimo_sensing_sweep")
      detail::run_mimo_sensing_sweep(cfg, out_dir, threads, outs);
    else if (cfg.kind == "mimo_isac_tradeoff")
      detail::run_mimo_isac_tradeoff(cfg, out_dir, threads, outs);
    else
      throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
  } catch (...) {
    // Remove partial outputs so a failed run leaves no half-written artifacts.
    for (const auto& f : outs) {
      std::error_code ec;
      fs::remove(f, ec);
    }
    throw;
  }

  RunManifest manifest;
  nlohmann::json cj;
  cj["schema"] = 1;
  cj["kind"] = cfg.kind;
  cj["seed"] = cfg.seed;
  cj["params"] = cfg.params;
  manifest.config_hash = io::fnv1a_hex(cj.dump());
  manifest.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& f : outs)
    manifest.outputs.emplace_back(f.filename().string(), io::hash_file(f));
  io::write_json(out_dir / "manifest.json", manifest.to_json());
  return manifest;
}

}  // namespace isacsim::experiment
