#include <evtrack/error.hpp>
#include <evtrack/gaze.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace evtrack;

namespace {

Point poly(Point p) {
  return {3.0 + 2.0 * p.x - 0.5 * p.y + 0.01 * p.x * p.x + 0.002 * p.x * p.y - 0.003 * p.y * p.y,
          -7.0 + 0.3 * p.x + 1.7 * p.y - 0.004 * p.x * p.x + 0.001 * p.x * p.y + 0.02 * p.y * p.y};
}

std::vector<CalibrationPair> grid_pairs(Point (*f)(Point)) {
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) {
      const Point p{100.0 + 25.0 * i + 3.0 * j, 80.0 + 20.0 * j - 2.0 * i};
      pairs.push_back({p, f(p)});
    }
  return pairs;
}

}  // namespace

TEST(Monomials, CountAndOrder) {
  EXPECT_EQ(monomial_count(2), 6);
  EXPECT_EQ(monomial_count(5), 21);
  const auto m = monomials(2, {2.0, 3.0});
  EXPECT_EQ(m, (std::vector<double>{1, 2, 3, 4, 6, 9}));
}

TEST(Calibrate, ExactDegreeTwoRecovery) {
  const auto pairs = grid_pairs(poly);
  const GazeMap map = calibrate(pairs, 2);
  const auto cx = map.raw_coeffs_x();
  const std::vector<double> want_x{3.0, 2.0, -0.5, 0.01, 0.002, -0.003};
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(cx[i], want_x[i], 1e-9 * std::max(1.0, std::abs(want_x[i])) * 1e3);
  EXPECT_NEAR(calibration_residual(map, pairs), 0.0, 1e-12);
  const Point held{133.0, 97.0};
  EXPECT_NEAR(map_gaze(map, held).x, poly(held).x, 1e-9);
  EXPECT_NEAR(map_gaze(map, held).y, poly(held).y, 1e-9);
}

TEST(Calibrate, IdentityPairs) {
  const auto pairs = grid_pairs([](Point p) { return p; });
  const GazeMap map = calibrate(pairs, 2);
  const auto cx = map.raw_coeffs_x(), cy = map.raw_coeffs_y();
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(cx[i], i == 1 ? 1.0 : 0.0, 1e-9);
    EXPECT_NEAR(cy[i], i == 2 ? 1.0 : 0.0, 1e-9);
  }
}

TEST(Calibrate, TooFewPairs) {
  auto pairs = grid_pairs(poly);
  pairs.resize(5);
  try {
    calibrate(pairs, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::rank_deficient);
  }
}

TEST(Calibrate, CollinearPairs) {
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < 10; ++i) pairs.push_back({{1.0 * i, 2.0 * i}, {1.0 * i, 1.0}});
  EXPECT_THROW(calibrate(pairs, 2), Error);
}

TEST(Calibrate, ResidualNonIncreasingInDegree) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < 60; ++i) {
    const Point p{100 + 150 * u(rng), 60 + 120 * u(rng)};
    pairs.push_back({p, {std::sin(p.x / 40) * 300, std::cos(p.y / 30) * 200}});
  }
  double last = std::numeric_limits<double>::infinity();
  for (int d = 2; d <= 5; ++d) {
    const double r = calibration_residual(calibrate(pairs, d), pairs);
    EXPECT_LE(r, last * (1 + 1e-9));
    last = r;
  }
}

TEST(MapGaze, ZeroAndIdentity) {
  EXPECT_EQ(map_gaze(GazeMap::zero(2), {57, 91}).x, 0.0);
  const Point p = map_gaze(GazeMap::identity(2), {57, 91});
  EXPECT_DOUBLE_EQ(p.x, 57.0);
  EXPECT_DOUBLE_EQ(p.y, 91.0);
}

TEST(MapGaze, LinearInCoefficients) {
  const GazeMap m1 = calibrate(grid_pairs(poly), 2);
  const GazeMap m2 = calibrate(grid_pairs([](Point p) { return Point{p.y * 0.5, -p.x}; }), 2);
  GazeMap mix = m1;
  for (int i = 0; i < 6; ++i) {
    mix.coeffs_x[i] = 2.0 * m1.coeffs_x[i] - 0.5 * m2.coeffs_x[i];
    mix.coeffs_y[i] = 2.0 * m1.coeffs_y[i] - 0.5 * m2.coeffs_y[i];
  }
  mix.transform = m1.transform;
  GazeMap m2_same = m2;
  m2_same.transform = m1.transform;
  const Point q{120, 95};
  const Point a = map_gaze(m1, q), b = map_gaze(m2_same, q), c = map_gaze(mix, q);
  EXPECT_NEAR(c.x, 2.0 * a.x - 0.5 * b.x, 1e-9);
  EXPECT_NEAR(c.y, 2.0 * a.y - 0.5 * b.y, 1e-9);
}

TEST(ScreenToAngles, Examples) {
  const ScreenGeometry g;
  VisualAngles a = screen_to_angles(g, {g.cx, g.cy});
  EXPECT_DOUBLE_EQ(a.theta_deg, 0.0);
  EXPECT_DOUBLE_EQ(a.phi_deg, 0.0);
  a = screen_to_angles(g, {g.cx - g.distance, g.cy});
  EXPECT_NEAR(a.theta_deg, 45.0, 1e-12);
  a = screen_to_angles(g, {g.cx, g.cy + g.distance * std::tan(10.0 * M_PI / 180)});
  EXPECT_NEAR(a.phi_deg, 10.0, 1e-9);
}
