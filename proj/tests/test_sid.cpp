#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qbil/sid.hpp"

using namespace qbil;
using namespace qbil::sid;

namespace {

std::vector<Vec2> axis_points(double lo, double hi, int n) {
  std::vector<Vec2> p;
  for (int i = 0; i < n; ++i) p.push_back({lo + (hi - lo) * i / (n - 1), 0.0});
  return p;
}

}  // namespace

TEST(Sid, GaussLaguerreMoments) {
  const auto [x, w] = gauss_laguerre(20);
  double m0 = 0, m1 = 0, m2 = 0, m5 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m0 += w[i];
    m1 += w[i] * x[i];
    m2 += w[i] * x[i] * x[i];
    m5 += w[i] * std::pow(x[i], 5);
  }
  // int u^k e^-u du = k!
  EXPECT_NEAR(m0, 1.0, 1e-12);
  EXPECT_NEAR(m1, 1.0, 1e-12);
  EXPECT_NEAR(m2, 2.0, 1e-11);
  EXPECT_NEAR(m5 / 120.0, 1.0, 1e-10);
}

TEST(Sid, SparseSetMatchesClosedForm) {
  // U^m_0 = 1/2 for the four labels (+-m0, 0), (0, +-m0); on the x axis
  // B(y) = sum_m U^m_0 e^{-i m.y} = 1 + cos(m0 y) and p_int(x) = 2 B(x - s/2) B(x + s/2)
  const double m0 = 3.0, s = 0.3;
  const auto model = sparse_mode_set(m0);
  const auto st = model.state();
  const auto pts = axis_points(-4.0, 4.0, 81);
  const auto diag = pint_pattern_diagonal(st, model.unitaries, model.modes, {s, 0.0}, pts);
  const auto mb = pint_pattern(st, model.unitaries, model.modes, {s, 0.0}, pts);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double x = pts[k].x;
    const double expect = 2.0 * (1.0 + std::cos(m0 * (x - s / 2))) * (1.0 + std::cos(m0 * (x + s / 2)));
    EXPECT_NEAR(diag[k], expect, 1e-12);
    EXPECT_NEAR(mb[k], expect, 1e-12);
  }
}

TEST(Sid, SparseSetPersists) {
  const auto model = sparse_mode_set(3.0);
  const auto scan = rl_decay_scan(model.state(), model.unitaries, model.modes, {0.3, 0.0}, 50.0, 40);
  EXPECT_EQ(scan.verdict, Verdict::kPersists);
  EXPECT_GT(scan.ratio, 0.1);
}

TEST(Sid, DenseGaussianSetDecaysLikeTheAnalyticEnvelope) {
  // p_int(x) / p_int(0) = exp(-sigma^2 x^2 / hbar^2) for x along s
  const double sigma = 1.0, x_max = 5.0;
  const auto model = gaussian_mode_set(20, 50, sigma, 7);
  const auto scan = rl_decay_scan(model.state(), model.unitaries, model.modes, {0.3, 0.0}, x_max, 40);
  EXPECT_EQ(scan.verdict, Verdict::kDecays);
  for (std::size_t k = 0; k < scan.radius.size(); ++k) {
    const double inner = 0.9 * scan.radius[k];  // the window maximum sits at its inner edge
    const double expect = std::exp(-sigma * sigma * inner * inner);
    EXPECT_NEAR(scan.envelope[k] / scan.envelope[0] / expect, 1.0, 0.05) << scan.radius[k];
  }
}

TEST(Sid, BasesAgreeForRandomBlocks) {
  const auto model = random_model(3, 16, 1.0, 11, WeightProfile::kGaussian);
  const auto st = model.state();
  const auto pts = axis_points(0.0, 20.0, 31);
  const auto a = pint_pattern(st, model.unitaries, model.modes, {0.3, 0.0}, pts);
  const auto b = pint_pattern_diagonal(st, model.unitaries, model.modes, {0.3, 0.0}, pts);
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  EXPECT_TRUE(st.renormalized);
  double total = 0.0;
  for (const auto& w : st.weights)
    for (double v : w) total += v;
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Sid, SameSeedSameModel) {
  const auto a = random_model(2, 8, 1.0, 5);
  const auto b = random_model(2, 8, 1.0, 5);
  const auto c = random_model(2, 8, 1.0, 6);
  EXPECT_EQ(a.unitaries.blocks[1], b.unitaries.blocks[1]);
  EXPECT_NE(a.unitaries.blocks[1], c.unitaries.blocks[1]);
}

TEST(Sid, EquilibriumInputValidation) {
  auto model = sparse_mode_set(3.0);
  auto bad = model;
  bad.weights[0][1] = -0.1;
  EXPECT_THROW(bad.state(), Error);
  bad = model;
  bad.unitaries.blocks[0](0, 0) *= 1.01;
  try {
    bad.state();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("non-unitary"), std::string::npos);
  }
  bad = model;
  bad.weights[0].push_back(0.0);
  try {
    bad.state();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("index mismatch"), std::string::npos);
  }
  EXPECT_THROW(ModeSet({{0, 1.0, {1, 0}}, {0, 1.0, {1, 0}}}), Error);
  EXPECT_NO_THROW(ModeSet({{0, 1.0, {1, 0}}, {0, 2.0, {1, 0}}}));  // different blocks
}

TEST(Sid, UnitaryWithGivenFirstColumn) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Eigen::VectorXcd c(9);
  for (int i = 0; i < 9; ++i) c(i) = {g(rng), g(rng)};
  c /= c.norm();
  const auto u = unitary_with_first_column(c);
  EXPECT_LT(unitarity_defect(u), 1e-14);
  EXPECT_LT((u.col(0) - c).norm(), 1e-14);
  EXPECT_LT(unitarity_defect(dft_unitary(5)), 1e-14);
  EXPECT_LT(unitarity_defect(random_unitary(12, rng)), 1e-13);
}

TEST(Sid, ScanRadiiLayout) {
  const auto r = scan_radii(50.0, 40, 0.01);
  ASSERT_EQ(r.size(), 40u);
  EXPECT_EQ(r.front(), 0.0);
  EXPECT_NEAR(r[1], 0.5, 1e-12);
  EXPECT_EQ(r.back(), 50.0);
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  const auto model = sparse_mode_set(3.0);
  EXPECT_THROW(rl_decay_scan(model.state(), model.unitaries, model.modes, {0.3, 0}, 50.0, 5), Error);
}
