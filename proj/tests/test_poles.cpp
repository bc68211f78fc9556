#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "qbil/poles.hpp"

using namespace qbil;
using namespace qbil::poles;

TEST(Poles, BetaZeroClosedForm) {
  // nu = 0, U0 = 10, A = 1: L = ln 200
  const auto b = pole_beta0(10.0, 1.0, 0);
  const double l = std::log(200.0);
  EXPECT_NEAR(b.real(), 10.0 - 2.0 / 40.0 * l, 1e-13);
  EXPECT_NEAR(b.imag(), -0.5 * l, 1e-13);
}

TEST(Poles, HigherWallOrderInLogSpace) {
  // nu = 3 with a large U0 must not overflow: ln(2 U0^5 / A^2) evaluated directly
  const auto b = pole_beta0(1e70, 1e-5, 3);
  const double l = std::log(2.0) + 5.0 * std::log(1e70) + 10.0 * std::log(10.0);
  EXPECT_NEAR(-b.imag() / (0.5 * l), 1.0, 1e-14);
}

TEST(Poles, DecoherenceTimeInNaturalUnits) {
  // hbar = M = a = 1: gamma = R0 I0 / 2, t_D = 2 / (R0 I0)
  const auto r = decoherence_time(WallParams{10.0, 1.0, 0, 1.0, 1.0, 1.0});
  EXPECT_NEAR(r.gamma, 0.5 * r.r0 * r.i0, 1e-14);
  EXPECT_NEAR(r.t_d, 2.0 / (r.r0 * r.i0), 1e-14);
  EXPECT_NEAR(r.t_d * r.gamma, 1.0, 1e-14);
}

TEST(Poles, QuadraticInRadius) {
  WallParams w{10.0, 1.0, 0, 0.5, 1.0, 1.0};
  const double t1 = decoherence_time(w).t_d;
  w.radius = 1.5;
  EXPECT_NEAR(decoherence_time(w).t_d / t1, 9.0, 1e-12);
  const auto sweep = sweep_radius(w, 0.1, 10.0, 5);
  ASSERT_EQ(sweep.size(), 5u);
  EXPECT_NEAR(sweep.front().radius, 0.1, 1e-15);
  EXPECT_NEAR(sweep.back().radius, 10.0, 1e-13);
  EXPECT_NEAR(sweep.back().t_d / sweep.front().t_d, 1e4, 1e-8);
}

TEST(Poles, FlatWallNeverDecoheres) {
  const auto r = decoherence_time(WallParams{10.0, 1.0, 0, kInfiniteRadius, 1.0, 1.0});
  EXPECT_EQ(r.gamma, 0.0);
  EXPECT_TRUE(std::isinf(r.t_d));
  EXPECT_TRUE(std::isinf(decoherence_time_from_product(1.0, kInfiniteRadius, 1.0, 1.0)));
}

TEST(Poles, ElectronCentimetreProducts) {
  // 2 M a^2 / hbar for an electron and a = 1 cm, computed by hand: 1.72760 (kg m^2 / J s = s)
  const double needed = product_for_time(1.0, 1e-2, kElectronMass, kHbar);
  EXPECT_NEAR(needed, 2 * 9.1093837015e-31 * 1e-4 / 1.054571817e-34, 1e-12);
  EXPECT_NEAR(needed, 1.7276, 1e-4);
  EXPECT_NEAR(decoherence_time_from_product(needed, 1e-2, kElectronMass, kHbar), 1.0, 1e-14);
  // the product 1.728e3 corresponds to a millisecond, not a second
  EXPECT_NEAR(decoherence_time_from_product(1.728e3, 1e-2, kElectronMass, kHbar), 1.0e-3, 1e-6);
}

TEST(Poles, ValidityDomain) {
  EXPECT_THROW(pole_beta0(-1.0, 1.0, 0), Error);
  EXPECT_THROW(pole_beta0(1.0, 0.0, 0), Error);
  EXPECT_THROW(pole_beta0(0.5, 1.0, 0), Error);  // ln(2 * 0.25) < 0
  EXPECT_THROW(decoherence_time(pole_beta0(10.0, 1.0, 0), 0.0, 1.0, 1.0), Error);
  EXPECT_THROW(sweep_radius(WallParams{10.0, 1.0, 0, 1.0, 1.0, 1.0}, 1.0, 0.5, 4), Error);
}
