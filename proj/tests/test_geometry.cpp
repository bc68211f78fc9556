#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qbil/geometry.hpp"

using namespace qbil;

namespace {

ApparatusConfig arc_config(double sagitta) {
  ApparatusConfig c;
  c.hypotenuse = HypotenuseKind::kArc;
  c.arc_sagitta = sagitta;
  return c;
}

}  // namespace

TEST(Geometry, ArcRadiusFromSagitta) {
  const auto g = build_apparatus(arc_config(0.05));
  const auto& arc = std::get<ArcHypotenuse>(g.hypotenuse());
  // chord = L sqrt2: the circle through both endpoints bulging inwards by h at the midpoint
  const double h = 0.05, half = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(arc.radius, (h * h + half * half) / (2 * h), 1e-14);
  EXPECT_NEAR(norm(Vec2{1, 0} - arc.center), arc.radius, 1e-12);
  EXPECT_NEAR(norm(Vec2{0, 1} - arc.center), arc.radius, 1e-12);
  const Vec2 apex{0.5 - h / std::sqrt(2.0), 0.5 - h / std::sqrt(2.0)};
  EXPECT_NEAR(norm(apex - arc.center), arc.radius, 1e-12);
  EXPECT_TRUE(g.is_arc());
}

TEST(Geometry, ArcRejectsDegenerateAndFocusingSagitta) {
  EXPECT_THROW(build_apparatus(arc_config(0.0)), Error);
  EXPECT_THROW(build_apparatus(arc_config(-0.05)), Error);
  EXPECT_THROW(build_apparatus(arc_config(0.8)), Error);
}

TEST(Geometry, RejectsBadSlitsAndBox) {
  ApparatusConfig c;
  c.slit_separation = 0.04;  // narrower than the slits themselves
  EXPECT_THROW(build_apparatus(c), Error);
  c = {};
  c.slit_center = 0.1;  // left slit pokes past the corner
  EXPECT_THROW(build_apparatus(c), Error);
  c = {};
  c.film_offset = 0.1;  // inside the floor absorber
  EXPECT_THROW(build_apparatus(c), Error);
}

TEST(Geometry, ClassificationOfReferencePoints) {
  const auto g = build_apparatus({});
  EXPECT_EQ(domain_of(g, {0.3, 0.3}), DomainIndex::D0);
  EXPECT_EQ(domain_of(g, {0.3, -0.01}), DomainIndex::D1);     // screen between the slits
  EXPECT_EQ(domain_of(g, {0.35, -0.01}), DomainIndex::Box);   // left slit channel at x = 0.35
  EXPECT_EQ(domain_of(g, {0.65, -0.01}), DomainIndex::Box);   // right slit channel
  EXPECT_EQ(domain_of(g, {-0.01, 0.5}), DomainIndex::D2);
  EXPECT_EQ(domain_of(g, {0.51, 0.51}), DomainIndex::D4);
  EXPECT_EQ(domain_of(g, {0.7, 0.7}), DomainIndex::Exterior);
  EXPECT_EQ(domain_of(g, {0.5, -1.0}), DomainIndex::Box);
}

TEST(Geometry, SealedSlitBecomesWall) {
  ApparatusConfig c;
  c.seal_slit1 = true;
  const auto g = build_apparatus(c);
  EXPECT_EQ(domain_of(g, {0.35, -0.01}), DomainIndex::D1);
  EXPECT_EQ(domain_of(g, {0.65, -0.01}), DomainIndex::Box);
}

TEST(Geometry, ArcPointsBetweenChordAndCircleAreWall) {
  const auto g = build_apparatus(arc_config(0.05));
  // apex at 0.5 - 0.05 / sqrt2 = 0.4646 on the diagonal; (0.48, 0.48) is 0.022 beyond it
  EXPECT_EQ(domain_of(g, {0.48, 0.48}), DomainIndex::D4);
  EXPECT_FALSE(g.inside_billiard({0.48, 0.48}));
  EXPECT_EQ(domain_of(g, {0.495, 0.495}), DomainIndex::Exterior);
  EXPECT_TRUE(g.inside_billiard({0.4, 0.4}));
}

TEST(Geometry, WallPotentialRampsAcrossTheSkin) {
  EXPECT_DOUBLE_EQ(wall_ramp(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wall_ramp(1.0), 1.0);
  EXPECT_DOUBLE_EQ(wall_ramp(0.5), 0.5);
  EXPECT_NEAR((wall_ramp(1e-6) - wall_ramp(0.0)) / 1e-6, 0.0, 1e-5);  // flat at the face
  const auto g = build_apparatus({});
  const auto grid = make_square_grid(g, 216);
  const auto pot = rasterize_potential(g, grid);
  double umax = 0.0;
  for (std::size_t k = 0; k < pot.size(); ++k) {
    if (pot.label[k] == DomainIndex::D0 || pot.label[k] == DomainIndex::Box) {
      EXPECT_EQ(pot.potential[k], 0.0);
    }
    umax = std::max(umax, pot.potential[k]);
  }
  EXPECT_LE(umax, 25000.0);
  EXPECT_GT(umax, 0.9 * 25000.0);
}

TEST(Geometry, AbsorberOnlyNearFloorAndSides) {
  const auto g = build_apparatus({});
  const auto grid = make_square_grid(g, 216);
  const auto pot = rasterize_potential(g, grid);
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const auto k = grid.index(i, j);
      if (pot.absorber[k] == 0.0) continue;
      EXPECT_EQ(pot.label[k], DomainIndex::Box);
      const Vec2 p = grid.center(i, j);
      const double q = std::min({p.y - g.box_bottom(), p.x - grid.x0, grid.x0 + grid.dx * grid.nx - p.x});
      EXPECT_LT(q, 0.2);
    }
  // strongest at the floor corner, quartic profile
  EXPECT_NEAR(absorber_at(g, {0.5, g.box_bottom() + 0.1}, -0.05, 1.05), 20000.0 * std::pow(0.5, 4), 1e-9);
}

TEST(Geometry, UnderResolvedGridIsRejected) {
  const auto g = build_apparatus({});
  EXPECT_THROW(rasterize_potential(g, make_square_grid(g, 40)), Error);
}

TEST(Geometry, SquareGridCoversBounds) {
  const auto g = build_apparatus({});
  const auto grid = make_square_grid(g, 216);
  const auto b = g.bounds();
  EXPECT_DOUBLE_EQ(grid.dx, grid.dy);
  EXPECT_DOUBLE_EQ(grid.x0, b[0]);
  EXPECT_GE(grid.y0 + grid.ny * grid.dy, b[3] - 1e-12);
  EXPECT_LT(grid.y0 + (grid.ny - 1) * grid.dy, b[3]);
}

TEST(Geometry, FilmLineSitsInsideTheBox) {
  const auto g = build_apparatus({});
  EXPECT_NEAR(g.film_y(), -0.06 - 1.5 + 0.3, 1e-12);
  EXPECT_EQ(domain_of(g, {0.5, g.film_y()}), DomainIndex::Box);
}

TEST(Geometry, LocalConstantsPerDomain) {
  EXPECT_EQ(local_constants(DomainIndex::D4, true), "H, Ptheta");
  EXPECT_EQ(local_constants(DomainIndex::D1, false), "H, Px");
  EXPECT_EQ(local_constants(DomainIndex::D2, false), "H, Py");
}
