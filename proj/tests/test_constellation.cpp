#include <gtest/gtest.h>

#include "isacsim/constellation.hpp"

using namespace isacsim;
namespace con = isacsim::constellation;

namespace {

// Brute-force lattice-moment oracle: kurtosis is scale-free, so compute it
// from unnormalized integer coordinates. `corner_limit < 0` means square.
double lattice_kurtosis(int side, int cut) {
  const double corner_limit = static_cast<double>(side - 1 - 2 * cut);
  double m2 = 0.0, m4 = 0.0;
  long count = 0;
  for (int a = -(side - 1); a <= side - 1; a += 2)
    for (int b = -(side - 1); b <= side - 1; b += 2) {
      if (cut > 0 && std::abs(a) > corner_limit && std::abs(b) > corner_limit) continue;
      const double r2 = static_cast<double>(a) * a + static_cast<double>(b) * b;
      m2 += r2;
      m4 += r2 * r2;
      ++count;
    }
  m2 /= static_cast<double>(count);
  m4 /= static_cast<double>(count);
  return m4 / (m2 * m2);
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

TEST(Constellation, QpskPoints) {
  const auto c = con::make_standard(con::Kind::psk, 4);
  ASSERT_EQ(c.size(), 4);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::abs(std::abs(c.points()(i).real()) - s), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(std::abs(c.points()(i).imag()) - s), 0.0, 1e-12);
    EXPECT_NEAR(c.probs()(i), 0.25, 1e-15);
  }
}

TEST(Constellation, Qam16Points) {
  const auto c = con::make_standard(con::Kind::qam, 16);
  const double s = 1.0 / std::sqrt(10.0);
  for (Eigen::Index i = 0; i < 16; ++i) {
    const double a = c.points()(i).real() / s;
    const double b = c.points()(i).imag() / s;
    EXPECT_NEAR(a, std::round(a), 1e-12);
    EXPECT_NEAR(b, std::round(b), 1e-12);
    EXPECT_TRUE(std::abs(std::round(a)) == 1 || std::abs(std::round(a)) == 3);
    EXPECT_TRUE(std::abs(std::round(b)) == 1 || std::abs(std::round(b)) == 3);
  }
}

TEST(Constellation, RejectsBpskAnd8Qam) {
  EXPECT_THROW(con::make_standard(con::Kind::psk, 2), InvalidArgument);
  EXPECT_THROW(con::make_standard(con::Kind::qam, 8), InvalidArgument);
  EXPECT_THROW(con::make_standard(con::Kind::qam, 4), InvalidArgument);
}

TEST(Constellation, MomentsOfStandardAlphabets) {
  for (int order : {4, 8, 16}) {
    const auto r = con::make_standard(con::Kind::psk, order).moments();
    EXPECT_TRUE(r.all_ok()) << order << "-psk";
    EXPECT_NEAR(r.kurtosis, 1.0, 1e-12);
  }
  const auto r16 = con::make_standard(con::Kind::qam, 16).moments();
  EXPECT_TRUE(r16.all_ok());
  EXPECT_NEAR(r16.kurtosis, 1.32, 1e-12);
}

TEST(Constellation, DegenerateAlphabetFlagged) {
  CVec pts = CVec::Constant(3, cxd{1.0, 0.0});
  const con::Constellation c(pts, RVec::Constant(3, 1.0 / 3.0), "degenerate");
  const auto r = c.moments();
  EXPECT_FALSE(r.mean_ok);
  EXPECT_FALSE(r.pseudo_variance_ok);
}

// Kurtosis table entries, each recomputed from the integer lattice oracle and
// checked against the frozen reference values to 4 decimals.
TEST(Constellation, KurtosisTable) {
  struct Row {
    int order, side, cut;
    double expected;
  };
  const Row rows[] = {
      {16, 4, 0, 1.32},    {64, 8, 0, 1.381},   {128, 12, 2, 1.3427},
      {256, 16, 0, 1.3953}, {512, 24, 4, 1.3506}, {1024, 32, 0, 1.3988},
      {2048, 48, 8, 1.3525},
  };
  for (const auto& row : rows) {
    const double oracle = lattice_kurtosis(row.side, row.cut);
    const double computed = con::kurtosis(con::make_standard(con::Kind::qam, row.order));
    EXPECT_NEAR(computed, oracle, 1e-12) << row.order << "-qam vs lattice oracle";
    EXPECT_EQ(round4(oracle), row.expected) << row.order << "-qam vs reference table";
  }
  for (int order : {4, 8, 16, 64}) {
    EXPECT_NEAR(con::kurtosis(con::make_standard(con::Kind::psk, order)), 1.0, 1e-14);
  }
}

TEST(Constellation, KurtosisRequiresUnitPower) {
  CVec pts(2);
  pts << cxd{2.0, 0.0}, cxd{-2.0, 0.0};
  const con::Constellation c(pts, RVec::Constant(2, 0.5), "scaled");
  EXPECT_THROW(con::kurtosis(c), ContractError);
}

TEST(Constellation, SuperGaussianTestAlphabet) {
  const auto c = con::super_gaussian_test();
  const auto r = c.moments();
  EXPECT_TRUE(r.all_ok());
  EXPECT_NEAR(r.kurtosis, 25.0 / 9.0, 1e-12);  // confirmed by the moment oracle
  EXPECT_GT(r.kurtosis, 2.0);
}

TEST(Sampling, DegenerateSinglePoint) {
  CVec pts = CVec::Constant(1, cxd{1.0, 0.0});
  const con::Constellation c(pts, RVec::Constant(1, 1.0), "point");
  const CVec s = c.sample(1, 7);
  EXPECT_EQ(s(0), (cxd{1.0, 0.0}));
}

TEST(Sampling, DeterministicUnderSeed) {
  const auto c = con::make_standard(con::Kind::qam, 16);
  const CVec a = c.sample(1000, 42, 3);
  const CVec b = c.sample(1000, 42, 3);
  EXPECT_TRUE((a.array() == b.array()).all());
  const CVec d = c.sample(1000, 43, 3);
  EXPECT_FALSE((a.array() == d.array()).all());
}

TEST(Sampling, QpskFrequenciesAndChiSquare) {
  const auto c = con::make_standard(con::Kind::psk, 4);
  const Eigen::Index n = 1000000;
  const CVec s = c.sample(n, 11);
  std::array<long, 4> counts{0, 0, 0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k)
      if (std::abs(s(i) - c.points()(k)) < 1e-12) {
        ++counts[static_cast<std::size_t>(k)];
        break;
      }
  }
  double chi2 = 0.0;
  const double expect = n / 4.0;
  for (long cnt : counts) {
    EXPECT_NEAR(static_cast<double>(cnt) / n, 0.25, 0.002);
    chi2 += (cnt - expect) * (cnt - expect) / expect;
  }
  EXPECT_LT(chi2, 16.27);  // chi-square 99.9th percentile, 3 dof
}

TEST(Sampling, GaussianKurtosisConvergesToTwo) {
  const auto g = con::Constellation::gaussian();
  EXPECT_NEAR(g.kurtosis(), 2.0, 0.0);
  const Eigen::Index n = 1000000;
  const CVec s = g.sample(n, 5);
  double m2 = 0, m4 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a2 = std::norm(s(i));
    m2 += a2;
    m4 += a2 * a2;
  }
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m4 / (m2 * m2), 2.0, 0.02);
}

TEST(Sampling, NonUniformEmpiricalKurtosisWithinDeltaMethodCi) {
  // Shaped 16-QAM: inner/outer rings suppressed.
  auto base = con::make_standard(con::Kind::qam, 16);
  RVec probs(16);
  for (Eigen::Index i = 0; i < 16; ++i) {
    const double r2 = std::norm(base.points()(i));
    probs(i) = std::abs(r2 - 1.0) < 1e-9 ? 0.1 : 0.04;
  }
  probs /= probs.sum();
  const con::Constellation c(base.points(), probs, "shaped");
  const auto mom = c.moments(1.0);  // tolerance irrelevant, report only
  const double true_kappa = mom.kurtosis;

  const Eigen::Index n = 400000;
  const CVec s = c.sample(n, 17);
  double m2 = 0, m4 = 0, v22 = 0, v44 = 0, v24 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a2 = std::norm(s(i));
    m2 += a2;
    m4 += a2 * a2;
  }
  m2 /= n;
  m4 /= n;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a2 = std::norm(s(i));
    v22 += (a2 - m2) * (a2 - m2);
    v44 += (a2 * a2 - m4) * (a2 * a2 - m4);
    v24 += (a2 - m2) * (a2 * a2 - m4);
  }
  v22 /= n;
  v44 /= n;
  v24 /= n;
  const double kappa_hat = m4 / (m2 * m2);
  // Delta method on kappa = m4 / m2^2.
  const double var = (v44 / std::pow(m2, 4) + 4.0 * m4 * m4 * v22 / std::pow(m2, 6) -
                      4.0 * m4 * v24 / std::pow(m2, 5)) /
                     static_cast<double>(n);
  const double sigma = std::sqrt(std::max(var, 0.0));
  EXPECT_LE(std::abs(kappa_hat - true_kappa), 3.0 * sigma + 1e-12);
}

TEST(Constellation, JsonRoundTrip) {
  const auto c = con::make_standard(con::Kind::qam, 64);
  const auto j = c.to_json();
  const auto back = con::Constellation::from_json(j);
  EXPECT_EQ(back.label(), c.label());
  EXPECT_LE((back.points() - c.points()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((back.probs() - c.probs()).cwiseAbs().maxCoeff(), 0.0);

  const auto g = con::Constellation::gaussian();
  EXPECT_TRUE(con::Constellation::from_json(g.to_json()).is_gaussian());
}
