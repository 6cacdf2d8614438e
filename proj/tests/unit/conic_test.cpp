#include <evtrack/conic.hpp>
#include <evtrack/error.hpp>
#include <evtrack/fit.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace evtrack;

namespace {

const EllipseParams kUnitCircle{1.0, 0.0, 1.0, 0.0, 0.0};

EllipseParams fit_ellipse(const std::vector<Point>& pts) {
  auto state = FitState<5>::from_accumulation(batch_accumulate<QuadricKind::ellipse>(pts));
  return to_ellipse(state.solve());
}

std::vector<Point> ellipse_points(const EllipseGeometry& g, int n, double phase = 0.3) {
  std::vector<Point> pts;
  const double c = std::cos(g.angle), s = std::sin(g.angle);
  for (int k = 0; k < n; ++k) {
    const double t = phase + 2.0 * M_PI * k / n;
    const double x = g.semi_major * std::cos(t), y = g.semi_minor * std::sin(t);
    pts.push_back({g.center.x + c * x - s * y, g.center.y + s * x + c * y});
  }
  return pts;
}

}  // namespace

TEST(EllipseResidual, UnitCircle) {
  EXPECT_DOUBLE_EQ(ellipse_residual(kUnitCircle, {1.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(ellipse_residual(kUnitCircle, {0.0, 0.0}), -1.0);
}

TEST(EllipseResidual, FittedFromFivePoints) {
  // x^2/4 + y^2 = 1 through five points.
  const EllipseParams e = fit_ellipse(ellipse_points({{0, 0}, 2.0, 1.0, 0.0}, 5));
  EXPECT_NEAR(ellipse_residual(e, {2.0, 0.0}), 0.0, 1e-9);
}

TEST(EllipseCenter, Examples) {
  const Point c0 = ellipse_center(kUnitCircle);
  EXPECT_NEAR(c0.x, 0.0, 1e-12);
  EXPECT_NEAR(c0.y, 0.0, 1e-12);

  // (x-3)^2 + (y-4)^2 = 1: x^2 + y^2 - 6x - 8y + 24 = 0, divided by -24.
  const Point c1 = ellipse_center({-1.0 / 24, 0.0, -1.0 / 24, 6.0 / 24, 8.0 / 24});
  EXPECT_NEAR(c1.x, 3.0, 1e-12);
  EXPECT_NEAR(c1.y, 4.0, 1e-12);

  const Point c2 = ellipse_center(ellipse_from_geometry({{10.0, 20.0}, 4.0, 2.0, 0.0}));
  EXPECT_NEAR(c2.x, 10.0, 1e-9);
  EXPECT_NEAR(c2.y, 20.0, 1e-9);
}

TEST(EllipseCenter, DegenerateThrows) {
  try {
    ellipse_center({1.0, 2.0, 1.0, 0.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_conic);
  }
}

TEST(EllipseCenter, InvariantUnderUniformScaling) {
  const EllipseParams e = ellipse_from_geometry({{40.0, 25.0}, 9.0, 5.0, 0.4});
  const Point c = ellipse_center(e);
  for (double k : {0.01, 3.0, 250.0}) {
    // Scaling (a,h,b,g,f,d) by k and renormalizing d to -1 gives back e; the
    // formula itself is homogeneous of degree zero in (a,h,b,g,f).
    const Point ck = ellipse_center({k * e.a, k * e.h, k * e.b, k * e.g, k * e.f});
    EXPECT_NEAR(ck.x, c.x, 1e-9);
    EXPECT_NEAR(ck.y, c.y, 1e-9);
  }
}

TEST(ProjectOntoEllipse, Examples) {
  Point p = project_onto_ellipse(kUnitCircle, {2.0, 0.0});
  EXPECT_NEAR(p.x, 1.0, 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  p = project_onto_ellipse(kUnitCircle, {0.5, 0.0});
  EXPECT_NEAR(p.x, 1.0, 1e-12);
  p = project_onto_ellipse({0.25, 0.0, 1.0, 0.0, 0.0}, {0.0, 3.0});
  EXPECT_NEAR(p.x, 0.0, 1e-12);
  EXPECT_NEAR(p.y, 1.0, 1e-12);
}

TEST(ProjectOntoEllipse, CenterThrows) { EXPECT_THROW(project_onto_ellipse(kUnitCircle, {0.0, 0.0}), Error); }

TEST(ProjectOntoEllipse, LandsOnCurve) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const EllipseGeometry g{{50.0 + 200.0 * u(rng), 50.0 + 100.0 * u(rng)}, 5.0 + 30.0 * u(rng), 0.0,
                            M_PI * u(rng)};
    EllipseGeometry gg = g;
    gg.semi_minor = g.semi_major * (0.2 + 0.8 * u(rng));
    const EllipseParams e = ellipse_from_geometry(gg);
    const Point p{gg.center.x + 80.0 * (u(rng) - 0.5), gg.center.y + 80.0 * (u(rng) - 0.5)};
    EXPECT_NEAR(ellipse_residual(e, project_onto_ellipse(e, p)), 0.0, 1e-9);
  }
}

TEST(Eccentricity, Examples) {
  EXPECT_NEAR(eccentricity(kUnitCircle), 1.0, 1e-12);
  EXPECT_NEAR(eccentricity(ellipse_from_geometry({{10.0, 20.0}, 4.0, 2.0, 0.0})), 2.0, 1e-9);
  EXPECT_NEAR(eccentricity(ellipse_from_geometry({{10.0, 20.0}, 3.0, 1.0, M_PI / 4})), 3.0, 1e-9);
}

TEST(Eccentricity, RotationInvariantFit) {
  const std::vector<Point> base = ellipse_points({{0, 0}, 6.0, 2.5, 0.0}, 16);
  double ref = 0.0;
  for (int r = 0; r < 8; ++r) {
    const double a = 0.37 * r;
    std::vector<Point> rotated;
    for (const Point& p : base)
      rotated.push_back({30.0 + std::cos(a) * p.x - std::sin(a) * p.y, 30.0 + std::sin(a) * p.x + std::cos(a) * p.y});
    const double ecc = eccentricity(fit_ellipse(rotated));
    if (r == 0) ref = ecc;
    EXPECT_NEAR(ecc, ref, 1e-6);
  }
  EXPECT_NEAR(ref, 6.0 / 2.5, 1e-9);
}

TEST(Geometry, RoundTrip) {
  const EllipseGeometry g{{120.0, 80.0}, 22.0, 14.0, 0.7};
  const EllipseGeometry back = ellipse_geometry(ellipse_from_geometry(g));
  EXPECT_NEAR(back.center.x, g.center.x, 1e-9);
  EXPECT_NEAR(back.center.y, g.center.y, 1e-9);
  EXPECT_NEAR(back.semi_major, g.semi_major, 1e-9);
  EXPECT_NEAR(back.semi_minor, g.semi_minor, 1e-9);
}

TEST(Denormalize, EllipseMatchesPixelFit) {
  const double s = 346.0;
  const EllipseGeometry g{{150.0, 90.0}, 25.0, 18.0, 0.2};
  std::vector<Point> px = ellipse_points(g, 10), norm;
  for (const Point& p : px) norm.push_back({p.x / s, p.y / s});
  const EllipseParams e = denormalize(fit_ellipse(norm), s);
  const EllipseParams truth = ellipse_from_geometry(g);
  EXPECT_NEAR(e.a / truth.a, 1.0, 1e-9);
  EXPECT_NEAR(e.g / truth.g, 1.0, 1e-9);
}

TEST(ParabolaResidual, Examples) {
  EXPECT_DOUBLE_EQ(parabola_residual({1.0, 0.0, 0.0}, {4.0, 2.0}), 0.0);
  EXPECT_DOUBLE_EQ(parabola_residual({1.0, 0.0, 0.0}, {0.0, 2.0}), 4.0);
  std::vector<Point> pts;
  for (double y : {-1.0, 0.5, 2.0}) pts.push_back({2 * y * y + y + 5, y});
  auto state = FitState<3>::from_accumulation(batch_accumulate<QuadricKind::parabola>(pts));
  const ParabolaParams p = to_parabola(state.solve());
  EXPECT_NEAR(parabola_residual(p, {2 * 9.0 + 3 + 5, 3.0}), 0.0, 1e-9);
}

TEST(CircleResidual, Examples) {
  EXPECT_DOUBLE_EQ(circle_residual({0, 0, 1}, {1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(circle_residual({0, 0, 1}, {0, 0}), -1.0);
  EXPECT_DOUBLE_EQ(circle_residual({3, 4, 2}, {5, 4}), 0.0);
}

TEST(CircleResidual, ZeroExactlyOnCircle) {
  const CircleParams c{12.0, -7.0, 5.5};
  for (int k = 0; k < 36; ++k) {
    const double t = k * M_PI / 18;
    EXPECT_NEAR(circle_residual(c, {c.cx + c.r * std::cos(t), c.cy + c.r * std::sin(t)}), 0.0, 1e-9);
  }
  EXPECT_GT(std::abs(circle_residual(c, {c.cx + c.r + 0.1, c.cy})), 1e-3);
}

TEST(EyelidFrame, Transposes) {
  const ParabolaParams p{0.01, 0.0, 50.0};
  // Image point (col, row) lies on row = 0.01 col^2 + 50.
  EXPECT_NEAR(eyelid_residual(p, {10.0, 51.0}), 0.0, 1e-12);
}
