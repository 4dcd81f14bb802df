#include <gtest/gtest.h>

#include "isacsim/mimo.hpp"

using namespace isacsim;
namespace mm = isacsim::mimo;

namespace {

CMat random_cmat(Eigen::Index r, Eigen::Index c, uint64_t seed) {
  Rng rng(seed, 3);
  CMat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.cnormal();
  return m;
}

CMat hermitian_sqrt(const CMat& a) {
  const auto eig = numerics::hermitian_eig(a);
  return eig.vectors *
         eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal().toDenseMatrix().cast<cxd>() *
         eig.vectors.adjoint();
}

mm::MimoScenario small_scenario(uint64_t seed = 5, Eigen::Index nt = 4, Eigen::Index n = 8) {
  return mm::MimoScenario::make(nt, nt, 2, n, 0.7, static_cast<double>(nt), 0.5, 1.0, seed);
}

}  // namespace

TEST(Lmmse, NoiselessRecovery) {
  auto sc = small_scenario(1, 4, 4);
  sc.sigma_s = 1e-7;
  const CMat x = random_cmat(4, 4, 11);  // square, generically invertible
  const CMat h = random_cmat(4, 4, 12) * hermitian_sqrt(sc.r_h / 4.0);
  const CMat y = h * x;
  const CMat est = mm::lmmse_estimate(y, x, sc);
  EXPECT_LE((est - h).norm(), 1e-4 * h.norm());
}

TEST(Lmmse, ZeroPriorGivesZero) {
  auto sc = small_scenario(2, 4, 6);
  sc.r_h = CMat::Zero(4, 4);
  const CMat x = random_cmat(4, 6, 13);
  const CMat y = random_cmat(4, 6, 14);
  EXPECT_LE(mm::lmmse_estimate(y, x, sc).norm(), 1e-12);
}

TEST(Lmmse, MonteCarloMseMatchesFormula) {
  // Empirical MSE of the estimator over (H, Z) draws against the
  // conditional_mmse closed form, within 2%.
  const auto sc = small_scenario(3, 4, 8);
  const CMat w = mm::wf_precoder(sc).w;
  const CMat s = mm::sample_payload(sc, 77, 0);
  const CMat x = w * s;
  const CMat rsqrt = hermitian_sqrt(sc.r_h / static_cast<double>(sc.n_s));
  Rng rng(21, 9);
  double mse = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    CMat g(sc.n_s, sc.n_t), z(sc.n_s, sc.n);
    for (Eigen::Index i = 0; i < sc.n_s; ++i) {
      for (Eigen::Index j = 0; j < sc.n_t; ++j) g(i, j) = rng.cnormal();
      for (Eigen::Index j = 0; j < sc.n; ++j) z(i, j) = sc.sigma_s * rng.cnormal();
    }
    const CMat h = g * rsqrt;  // E[H^H H] = R_H
    const CMat y = h * x + z;
    mse += (mm::lmmse_estimate(y, x, sc) - h).squaredNorm();
  }
  mse /= trials;
  const double formula = mm::conditional_mmse(w, s, sc);
  EXPECT_NEAR(mse, formula, 0.02 * formula);
}

TEST(ConditionalMmse, ClosedFormCases) {
  auto sc = small_scenario(4, 4, 8);
  // W = 0: prior MSE Tr(R).
  EXPECT_NEAR(mm::conditional_mmse(CMat::Zero(4, 4), mm::sample_payload(sc, 1, 0), sc),
              std::real(sc.r_h.trace()), 1e-9);
  // R = I and W S S^H W^H = c I: n_t / (1 + c/(s^2 N_s)).
  sc.r_h = CMat::Identity(4, 4);
  const double cval = 2.5;
  CMat s = CMat::Zero(4, 8);
  s.leftCols(4) = std::sqrt(cval) * CMat::Identity(4, 4);
  const double reg = sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s);
  EXPECT_NEAR(mm::conditional_mmse(CMat::Identity(4, 4), s, sc),
              4.0 / (1.0 + cval / reg), 1e-9);
}

TEST(ConditionalMmse, InverseFreeFormMatchesDirectInverse) {
  const auto sc = small_scenario(6, 4, 8);
  const double c = 1.0 / (sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s));
  for (uint64_t t = 0; t < 20; ++t) {
    const CMat s = mm::sample_payload(sc, 50, t);
    const CMat w = mm::detail::project_ball(random_cmat(4, 4, 100 + t), sc.p_t);
    const CMat m = sc.r_h.inverse() + c * w * s * s.adjoint() * w.adjoint();
    const double direct = std::real(m.inverse().trace());
    EXPECT_NEAR(mm::conditional_mmse(w, s, sc), direct, 1e-8 * direct);
  }
}

TEST(Elmmse, LawOfLargeNumbersAndJensen) {
  const auto sc = small_scenario(7, 4, 8);
  const CMat w = mm::wf_precoder(sc).w;
  // n -> infinity proxy: with many snapshots S S^H / n -> I, so the ergodic
  // value approaches the deterministic-training formula; the residual Jensen
  // gap is O(1/n) and must shrink accordingly.
  auto mid = sc, big = sc;
  mid.n = 16 * sc.n_t;
  big.n = 64 * sc.n_t;
  const auto mc_mid = mm::elmmse_mc(w, mid, 300, 9);
  const auto mc = mm::elmmse_mc(w, big, 300, 9);
  EXPECT_NEAR(mc.mean, mm::deterministic_lmmse(w, big), 0.02 * mc.mean);
  const double gap_mid = mc_mid.mean - mm::deterministic_lmmse(w, mid);
  const double gap_big = mc.mean - mm::deterministic_lmmse(w, big);
  EXPECT_LE(gap_big, 0.5 * gap_mid + mc.ci_half);
  // Jensen direction at finite n: ergodic >= deterministic evaluation.
  const auto mc_small = mm::elmmse_mc(w, sc, 2000, 10);
  EXPECT_GE(mc_small.mean, mm::deterministic_lmmse(w, sc) - mc_small.ci_half);
}

TEST(Elmmse, DeterministicUnderSeedAndPaired) {
  const auto sc = small_scenario(8, 4, 8);
  const CMat w = mm::wf_precoder(sc).w;
  const auto a = mm::elmmse_mc(w, sc, 200, 42);
  const auto b = mm::elmmse_mc(w, sc, 200, 42);
  EXPECT_EQ(a.mean, b.mean);
}

TEST(WfPrecoder, IdentityPriorEqualPower) {
  auto sc = small_scenario(9, 4, 8);
  sc.r_h = CMat::Identity(4, 4);
  const auto p = mm::wf_precoder(sc);
  EXPECT_NEAR(p.w.squaredNorm(), sc.p_t, 1e-8);
  const auto svd = numerics::complex_svd(p.w);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(svd.singular_values(i), std::sqrt(sc.p_t / 4.0), 1e-8);
}

TEST(WfPrecoder, TwoEigenvalueHandSolution) {
  // R = diag(4, 1), sigma_s^2 N_s / N = 1, P_T = 0.5: the water level stays
  // below 1, so all power lands on the strong-prior (lambda = 4) direction
  // with gain sqrt(0.5).
  mm::MimoScenario sc;
  sc.n_t = 2;
  sc.n_s = 2;
  sc.n_c = 1;
  sc.n = 2;
  sc.r_h = CMat::Zero(2, 2);
  sc.r_h(0, 0) = 4.0;
  sc.r_h(1, 1) = 1.0;
  sc.h_c = CMat::Ones(1, 2);
  sc.sigma_s = 1.0;
  sc.sigma_c = 1.0;
  sc.p_t = 0.5;
  const auto p = mm::wf_precoder(sc);
  EXPECT_NEAR(p.w.squaredNorm(), 0.5, 1e-8);
  EXPECT_NEAR(std::abs(p.w(0, 0)), std::sqrt(0.5), 1e-8);
  EXPECT_NEAR(std::abs(p.w(1, 1)), 0.0, 1e-10);
}

TEST(DdpPrecoder, OrthogonalDataReducesToWf) {
  auto sc = small_scenario(10, 4, 8);
  sc.r_h = CMat::Identity(4, 4);
  // S with S S^H = n I: scaled unitary rows.
  CMat s = CMat::Zero(4, 8);
  const CMat q = numerics::complex_svd(random_cmat(4, 4, 200)).u;
  s.leftCols(4) = std::sqrt(static_cast<double>(sc.n)) * q;
  const auto ddp = mm::ddp_precoder(s, sc);
  const auto wf = mm::wf_precoder(sc);
  EXPECT_NEAR(mm::conditional_mmse(ddp.w, s, sc), mm::conditional_mmse(wf.w, s, sc), 1e-9);
  EXPECT_NEAR(ddp.w.squaredNorm(), sc.p_t, 1e-7);
}

TEST(DdpPrecoder, PerRealizationDominance) {
  const auto sc = small_scenario(11, 4, 8);
  const auto wf = mm::wf_precoder(sc);
  Rng rng(31, 7);
  for (uint64_t t = 0; t < 10; ++t) {
    const CMat s = mm::sample_payload(sc, 60, t);
    const auto ddp = mm::ddp_precoder(s, sc);
    const double own = mm::conditional_mmse(ddp.w, s, sc);
    EXPECT_LE(own, mm::conditional_mmse(wf.w, s, sc) + 1e-9);
    for (int v = 0; v < 100; ++v) {
      CMat cand = random_cmat(4, 4, 1000 + t * 100 + v);
      cand *= std::sqrt(sc.p_t) / cand.norm();
      EXPECT_LE(own, mm::conditional_mmse(cand, s, sc) + 1e-9);
    }
  }
}

TEST(DdpPrecoder, KktResidual) {
  const auto sc = small_scenario(12, 2, 4);
  const CMat s = mm::sample_payload(sc, 61, 0);
  const auto ddp = mm::ddp_precoder(s, sc);
  const CMat g = mm::grad_conditional_mmse(ddp.w, s, sc);
  // Stationarity of the Lagrangian: grad + nu W = 0 with nu >= 0 from the
  // active power constraint.
  const double nu = -std::real((g.adjoint() * ddp.w).trace()) / ddp.w.squaredNorm();
  EXPECT_GE(nu, 0.0);
  EXPECT_LE((g + nu * ddp.w).norm(), 1e-6 * g.norm());
  EXPECT_NEAR(ddp.w.squaredNorm(), sc.p_t, 1e-7);
}

TEST(DdpPrecoder, PairingChoiceIsOptimal) {
  // Certify the descending-descending pairing of prior eigenvalues and data
  // singular values by enumerating all pairings on small instances.
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const auto sc = small_scenario(700 + seed, 3, 6);
    const CMat s = mm::sample_payload(sc, 62, seed);
    const auto eig = numerics::hermitian_eig(sc.r_h);
    const auto svd = numerics::complex_svd(s);
    const double c = 1.0 / (sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s));
    std::vector<int> perm{0, 1, 2};
    double best = std::numeric_limits<double>::infinity();
    double identity_val = 0.0;
    do {
      // Water-fill with lambda_i paired to d_{perm[i]}.
      auto power = [&](double mu, int i) {
        const double d = svd.singular_values(perm[static_cast<std::size_t>(i)]);
        const double lam = eig.values(i);
        if (d <= 1e-12 || lam <= 1e-14) return 0.0;
        return std::max(mu / (std::sqrt(c) * d) - 1.0 / (lam * c * d * d), 0.0);
      };
      auto filled = [&](double mu) {
        return power(mu, 0) + power(mu, 1) + power(mu, 2);
      };
      double hi = 1.0;
      while (filled(hi) < sc.p_t) hi *= 2.0;
      const double mu = numerics::bisect_water_level(filled, sc.p_t, 0.0, hi, 1e-12);
      double obj = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double d = svd.singular_values(perm[static_cast<std::size_t>(i)]);
        obj += 1.0 / (1.0 / eig.values(i) + c * d * d * power(mu, i));
      }
      if (perm[0] == 0 && perm[1] == 1 && perm[2] == 2) identity_val = obj;
      best = std::min(best, obj);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(identity_val, best, 1e-9 + 1e-9 * best) << "seed=" << seed;
    // And the production precoder attains the enumerated optimum.
    const auto ddp = mm::ddp_precoder(s, sc);
    EXPECT_NEAR(mm::conditional_mmse(ddp.w, s, sc), best, 1e-7 * best);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  const auto sc = small_scenario(13, 2, 4);
  const CMat s = mm::sample_payload(sc, 63, 0);
  Rng rng(64, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const CMat w = mm::detail::project_ball(random_cmat(2, 2, 300 + rep), sc.p_t);
    const CMat g = mm::grad_conditional_mmse(w, s, sc);
    CMat dir = random_cmat(2, 2, 400 + rep);
    dir /= dir.norm();
    const double t = 1e-5;
    const double fp = mm::conditional_mmse(w + t * dir, s, sc);
    const double fmm = mm::conditional_mmse(w - t * dir, s, sc);
    const double fd = (fp - fmm) / (2.0 * t);
    const double analytic = 2.0 * std::real((g.adjoint() * dir).trace());
    EXPECT_NEAR(fd, analytic, 1e-5 * std::max(1.0, std::abs(analytic))) << rep;
  }
}

TEST(DipPrecoder, SymmetricScenarioNearScaledIdentity) {
  auto sc = small_scenario(14, 4, 8);
  sc.r_h = CMat::Identity(4, 4);
  mm::SgdConfig cfg;
  cfg.iters = 800;
  cfg.seed = 3;
  const auto dip = mm::dip_precoder(sc, cfg);
  EXPECT_FALSE(dip.diverged);
  const CMat ident = std::sqrt(sc.p_t / 4.0) * CMat::Identity(4, 4);
  const auto mc_dip = mm::elmmse_mc(dip.w, sc, 3000, 90);
  const auto mc_id = mm::elmmse_mc(ident, sc, 3000, 90);
  EXPECT_LE(mc_dip.mean, mc_id.mean * 1.01);
  EXPECT_GE(mc_dip.mean, mc_id.mean * 0.93);  // cannot beat the symmetric optimum by much
}

TEST(Rate, ClosedFormsAndInvariance) {
  auto sc = small_scenario(15, 4, 8);
  EXPECT_EQ(mm::rate_bps(CMat::Zero(4, 4), sc), 0.0);
  sc.h_c = CMat::Identity(2, 4);  // n_c = 2 rows of identity
  sc.n_c = 2;
  const CMat w = std::sqrt(sc.p_t / 4.0) * CMat::Identity(4, 4);
  EXPECT_NEAR(mm::rate_bps(w, sc),
              2.0 * std::log2(1.0 + sc.p_t / (4.0 * sc.sigma_c * sc.sigma_c)), 1e-9);
  const CMat v = numerics::complex_svd(random_cmat(4, 4, 500)).u;
  EXPECT_NEAR(mm::rate_bps(w * v, sc), mm::rate_bps(w, sc), 1e-9);
}

TEST(IsacPrecoder, ZeroFloorMatchesSensingOnly) {
  const auto sc = small_scenario(16, 4, 8);
  mm::IsacConfig cfg;
  cfg.sgd.iters = 400;
  const auto isac = mm::isac_precoder(mm::PrecoderKind::isac_det, sc, 0.0, cfg);
  const auto wf = mm::wf_precoder(sc);
  EXPECT_NEAR(mm::deterministic_lmmse(isac.w, sc), mm::deterministic_lmmse(wf.w, sc),
              0.01 * mm::deterministic_lmmse(wf.w, sc));
}

TEST(IsacPrecoder, TightFloorPinsRate) {
  const auto sc = small_scenario(17, 4, 8);
  const double cap = mm::max_rate(sc);
  mm::IsacConfig cfg;
  cfg.sgd.iters = 300;
  const auto isac = mm::isac_precoder(mm::PrecoderKind::isac_det, sc, 0.98 * cap, cfg);
  EXPECT_GE(mm::rate_bps(isac.w, sc), 0.98 * cap - 1e-3);
  EXPECT_LE(isac.w.squaredNorm(), sc.p_t + 1e-6);
  // Sensing suffers relative to the unconstrained precoder.
  const auto wf = mm::wf_precoder(sc);
  EXPECT_GE(mm::deterministic_lmmse(isac.w, sc),
            mm::deterministic_lmmse(wf.w, sc) - 1e-9);
  EXPECT_THROW(mm::isac_precoder(mm::PrecoderKind::isac_det, sc, cap * 1.05, cfg),
               InfeasibleError);
}

TEST(IsacPrecoder, TradeoffMonotoneAlongFloorSweep) {
  const auto sc = small_scenario(18, 4, 8);
  const double cap = mm::max_rate(sc);
  mm::IsacConfig cfg;
  cfg.sgd.iters = 300;
  double prev_rate = -1.0, prev_mmse = -1.0;
  for (const double frac : {0.2, 0.5, 0.8, 0.95}) {
    const auto isac = mm::isac_precoder(mm::PrecoderKind::isac_det, sc, frac * cap, cfg);
    const double r = mm::rate_bps(isac.w, sc);
    const double e = mm::deterministic_lmmse(isac.w, sc);
    EXPECT_GE(r, frac * cap - 1e-3);
    EXPECT_GE(r, prev_rate - 1e-6);
    EXPECT_GE(e, prev_mmse - 1e-6);
    prev_rate = r;
    prev_mmse = e;
    EXPECT_LE(isac.penalty_residual, 0.05);
  }
}

TEST(IsacPrecoder, DdpAndDipModesSatisfyContracts) {
  const auto sc = small_scenario(19, 4, 8);
  const double cap = mm::max_rate(sc);
  const CMat s = mm::sample_payload(sc, 65, 0);
  mm::IsacConfig cfg;
  cfg.sgd.iters = 300;
  cfg.w_iters = 200;
  const auto ddp = mm::isac_precoder(mm::PrecoderKind::isac_ddp, sc, 0.6 * cap, cfg, &s);
  EXPECT_GE(mm::rate_bps(ddp.w, sc), 0.6 * cap - 1e-3);
  EXPECT_LE(ddp.w.squaredNorm(), sc.p_t + 1e-6);
  const auto dip = mm::isac_precoder(mm::PrecoderKind::isac_dip, sc, 0.6 * cap, cfg);
  EXPECT_GE(mm::rate_bps(dip.w, sc), 0.6 * cap - 1e-3);
  EXPECT_LE(dip.w.squaredNorm(), sc.p_t + 1e-6);
}
