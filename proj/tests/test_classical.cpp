#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "qbil/classical.hpp"

using namespace qbil;
using namespace qbil::classical;

namespace {

constexpr double kPi = std::numbers::pi;

ApparatusGeometry straight() { return build_apparatus({}); }

ApparatusGeometry curved(double sagitta = 0.05) {
  ApparatusConfig c;
  c.hypotenuse = HypotenuseKind::kArc;
  c.arc_sagitta = sagitta;
  return build_apparatus(c);
}

ClassicalState generic_start() { return {{0.23, 0.31}, direction_from_angle(0.7123), 0.0}; }

double wrap(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

}  // namespace

TEST(Classical, StraightCensusIsTheDihedralOrbit) {
  // reflections in y = 0, x = 0 and x + y = L generate the 8-element dihedral group,
  // so a generic direction th visits exactly {+-th + k pi/2}
  const auto g = straight();
  const double th = 0.7123;
  std::set<long> expect;
  for (int k = 0; k < 4; ++k)
    for (double s : {1.0, -1.0}) expect.insert(std::lround(wrap(s * th + k * kPi / 2) * 1e9));
  const auto tr = trace_trajectory(generic_start(), g, 2000);
  std::set<long> seen;
  for (const auto& b : tr.bounces) seen.insert(std::lround(b.theta_out * 1e9));
  EXPECT_EQ(seen, expect);
  EXPECT_EQ(direction_census(g, generic_start(), 10000), 8u);
}

TEST(Classical, VerticalLaunchIsPeriodFour) {
  // (0.5, 0.2) straight down: base, hypotenuse at (0.5, 0.5), left wall at (0, 0.5), hypotenuse again
  const auto g = straight();
  const auto tr = trace_trajectory({{0.5, 0.2}, {0.0, -1.0}, 0.0}, g, 12);
  const DomainIndex expect[] = {DomainIndex::D1, DomainIndex::D4, DomainIndex::D2, DomainIndex::D4};
  for (std::size_t k = 0; k < tr.bounces.size(); ++k) EXPECT_EQ(tr.bounces[k].wall, expect[k % 4]) << k;
  EXPECT_NEAR(tr.bounces[1].point.x, 0.5, 1e-15);
  EXPECT_NEAR(tr.bounces[2].point.y, 0.5, 1e-15);
  EXPECT_EQ(direction_census(g, {{0.5, 0.2}, {0.0, -1.0}, 0.0}, 1000), 4u);
  // the orbit closes after path length 0.5 + 0.5 + 0.5 + 0.5
  EXPECT_NEAR(tr.bounces[3].path_length, 0.2 + 0.5 + 0.5 + 0.5, 1e-12);
}

TEST(Classical, BouncePointsLieOnWallsAndObeyReflectionLaw) {
  for (const auto& g : {straight(), curved()}) {
    const auto tr = trace_trajectory(generic_start(), g, 500);
    for (const auto& b : tr.bounces) {
      switch (b.wall) {
        case DomainIndex::D1: EXPECT_NEAR(b.point.y, 0.0, 1e-12); break;
        case DomainIndex::D2: EXPECT_NEAR(b.point.x, 0.0, 1e-12); break;
        default: EXPECT_NEAR(g.distance_to_hypotenuse(b.point), 0.0, 1e-11); break;
      }
      const Vec2 n = inward_normal(g, b.wall, b.point);
      const Vec2 din = direction_from_angle(b.theta_in), dout = direction_from_angle(b.theta_out);
      EXPECT_LT(dot(din, n), 0.0);
      EXPECT_NEAR(dot(dout, n), -dot(din, n), 1e-12);
      EXPECT_NEAR(cross(n, dout), cross(n, din), 1e-12);
    }
  }
}

TEST(Classical, ReversedTrajectoryRetracesPath) {
  const auto g = straight();
  const auto tr = trace_trajectory(generic_start(), g, 50);
  // start just short of the last bounce, moving against the incoming direction
  const auto& last = tr.bounces.back();
  const Vec2 din = direction_from_angle(last.theta_in);
  const auto rt = trace_trajectory({last.point - din * 1e-9, -din, 0.0}, g, 49);
  for (std::size_t k = 0; k < 49; ++k) {
    EXPECT_NEAR(rt.bounces[k].point.x, tr.bounces[48 - k].point.x, 1e-8) << k;
    EXPECT_NEAR(rt.bounces[k].point.y, tr.bounces[48 - k].point.y, 1e-8) << k;
    EXPECT_EQ(rt.bounces[k].wall, tr.bounces[48 - k].wall);
  }
}

TEST(Classical, CornerHitIsAnError) {
  const auto g = straight();
  const Vec2 p{0.5, 0.2};
  try {
    trace_trajectory({p, normalized(Vec2{0, 0} - p), 0.0}, g, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("corner"), std::string::npos);
  }
}

TEST(Classical, StartOutsideIsRejected) {
  EXPECT_THROW(trace_trajectory({{0.7, 0.7}, {1, 0}, 0.0}, straight(), 3), Error);
  EXPECT_THROW(trace_trajectory({{0.48, 0.48}, {1, 0}, 0.0}, curved(), 3), Error);
  EXPECT_THROW(trace_trajectory({{0.3, 0.3}, {2, 0}, 0.0}, straight(), 3), Error);
}

TEST(Classical, StraightWallsHaveZeroExponent) {
  EXPECT_LT(std::abs(lyapunov_exponent(straight(), generic_start(), 10000)), 1e-6);
}

TEST(Classical, ArcWallIsChaotic) {
  const auto g = curved();
  const double lam = lyapunov_exponent(g, generic_start(), 10000);
  EXPECT_GT(lam, 0.3);
  // independent estimate from the exponential separation of two parallel rays
  const auto dev = parallel_deviation(g, generic_start(), 1e-10, 200);
  const double rate = deviation_growth_rate(dev, 1e-9, 1e-4);
  EXPECT_NEAR(rate / lam, 1.0, 0.3);
  // a different start gives the same exponent
  const double lam2 = lyapunov_exponent(g, {{0.1, 0.6}, direction_from_angle(-1.1), 0.0}, 10000);
  EXPECT_NEAR(lam2 / lam, 1.0, 0.05);
}

TEST(Classical, ArcCensusKeepsGrowing) {
  const auto c = direction_census_growth(curved(), generic_start(), {100, 1000, 10000});
  EXPECT_EQ(c[0], 100u);
  EXPECT_GT(c[1], 900u);
  EXPECT_GT(c[2], 9000u);
}

TEST(Classical, AngleClusteringWrapsAround) {
  EXPECT_EQ(count_distinct_angles({0.0, 1e-12, 2 * kPi - 1e-12, 1.0}, 1e-9), 2u);
  EXPECT_EQ(count_distinct_angles({}), 0u);
  EXPECT_EQ(angle_of({1.0, -0.0}), 0.0);
  EXPECT_FALSE(std::signbit(angle_of({1.0, -0.0})));
}

TEST(Classical, AdvanceMatchesBounceBookkeeping) {
  const auto g = curved();
  Billiard a(g, generic_start()), b(g, generic_start());
  for (int k = 0; k < 20; ++k) a.bounce();
  b.advance(a.state().path_length + 0.01);
  EXPECT_NEAR(b.state().path_length, a.state().path_length + 0.01, 1e-12);
}

TEST(Classical, TrajectoryCsvHeader) {
  std::ostringstream os;
  write_trajectory_csv(os, trace_trajectory(generic_start(), straight(), 3));
  const auto s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "bounce,x,y,theta,wall");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}
