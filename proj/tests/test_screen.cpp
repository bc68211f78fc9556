#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qbil/screen.hpp"

using namespace qbil;

namespace {

ScreenRecord cosine_pattern(double v, double k, std::size_t n = 400) {
  ScreenRecord r;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    r.x.push_back(x);
    r.p.push_back(2.0 * (1.0 + v * std::cos(k * x)));
  }
  return r;
}

GridSpec small_grid() {
  GridSpec g;
  g.nx = 4;
  g.ny = 3;
  g.dx = 0.5;
  g.dy = 0.5;
  g.dt = 0.1;
  return g;
}

}  // namespace

TEST(Screen, VisibilityOfPureCosine) {
  for (double v : {0.1, 0.5, 0.9}) EXPECT_NEAR(visibility(cosine_pattern(v, 40.0), 0.05, 0.95), v, 2e-3);
}

TEST(Screen, SmoothingReducesContrastAsGaussianTransfer) {
  // a Gaussian kernel of std s multiplies cos(kx) by exp(-k^2 s^2 / 2)
  const double k = 40.0, fwhm = 0.05;
  const double s = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const auto r = cosine_pattern(0.8, k, 2000);
  EXPECT_NEAR(visibility(r, 0.2, 0.8, fwhm), 0.8 * std::exp(-0.5 * k * k * s * s), 2e-3);
}

TEST(Screen, FlatPatternHasNoFringes) {
  ScreenRecord r;
  for (int i = 0; i < 50; ++i) {
    r.x.push_back(i * 0.02);
    r.p.push_back(1.0);
  }
  EXPECT_THROW(visibility(r, 0.0, 1.0), Error);
}

TEST(Screen, FilmRecorderIntegratesOverWindow) {
  const auto g = small_grid();
  WaveField f(g);
  f(2, 1) = {0.0, 2.0};
  FilmRecorder rec(g, 1, 2, 8, 2);  // samples steps 2, 4, 6 with weight 2 dt
  for (std::size_t s = 0; s < 10; ++s) rec.observe(f, s);
  EXPECT_NEAR(rec.record().p[2], 3 * 4.0 * 0.2, 1e-15);
  EXPECT_EQ(rec.record().p[1], 0.0);
  EXPECT_NEAR(rec.record().t_begin, 0.2, 1e-15);
  EXPECT_NEAR(rec.record().t_end, 0.8, 1e-15);
  EXPECT_NEAR(rec.record().x[0], 0.25, 1e-15);
}

TEST(Screen, CadenceOnlyChangesQuadrature) {
  const auto g = small_grid();
  WaveField f(g);
  FilmRecorder a(g, 0, 0, 12, 1), b(g, 0, 0, 12, 3);
  for (std::size_t s = 0; s < 12; ++s) {
    f(1, 0) = 1.0;  // constant intensity: both quadratures are exact
    a.observe(f, s);
    b.observe(f, s);
  }
  EXPECT_NEAR(a.record().p[1], b.record().p[1], 1e-14);
}

TEST(Screen, OfflineAccumulationMatchesRecorder) {
  const auto g = small_grid();
  std::vector<WaveField> frames;
  FilmRecorder rec(g, 2, 0, 5, 1);
  for (std::size_t s = 0; s < 5; ++s) {
    WaveField f(g);
    f(3, 2) = static_cast<double>(s);
    f.t = s * g.dt;
    rec.observe(f, s);
    frames.push_back(f);
  }
  const auto off = accumulate_film(frames, g, 2, g.dt);
  EXPECT_EQ(off.p, rec.record().p);
}

TEST(Screen, DecompositionSumsBack) {
  auto both = cosine_pattern(0.6, 30.0, 50);
  auto one = cosine_pattern(0.0, 30.0, 50);
  auto two = one;
  for (auto& v : one.p) v *= 0.5;
  for (auto& v : two.p) v *= 0.5;
  const auto r = decompose_interference(both, one, two);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_NEAR((*r.p1)[i] + (*r.p2)[i] + (*r.p_int)[i], r.p[i], 1e-14);
    EXPECT_NEAR((*r.p_int)[i], 2.0 * 0.6 * std::cos(30.0 * r.x[i]), 1e-12);
  }
  // |p_int| = 1.2 |cos| <= 2 sqrt(1 * 1) everywhere
  EXPECT_LT(cauchy_schwarz_excess(r), 0.0);
}

TEST(Screen, DecompositionRejectsMismatchedRuns) {
  auto a = cosine_pattern(0.6, 30.0, 50), b = a, c = a;
  c.t_end = 7.0;
  EXPECT_THROW(decompose_interference(a, b, c), Error);
  c = a;
  c.x[3] += 1e-9;
  EXPECT_THROW(decompose_interference(a, b, c), Error);
}

TEST(Screen, CorrelationBasics) {
  const auto a = cosine_pattern(0.5, 30.0, 100);
  auto b = a;
  for (auto& v : b.p) v = 3.0 * v + 1.0;
  EXPECT_NEAR(pattern_correlation(a, b), 1.0, 1e-12);
  for (auto& v : b.p) v = -v;
  EXPECT_NEAR(pattern_correlation(a, b), -1.0, 1e-12);
}

TEST(Screen, CropKeepsDecomposition) {
  auto r = decompose_interference(cosine_pattern(0.6, 30.0, 11), cosine_pattern(0, 30, 11), cosine_pattern(0, 30, 11));
  const auto c = crop(r, 0.25, 0.75);
  EXPECT_EQ(c.size(), 5u);
  ASSERT_TRUE(c.p_int.has_value());
  EXPECT_EQ(c.p_int->size(), 5u);
}
