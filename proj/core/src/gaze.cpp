#include <evtrack/gaze.hpp>

#include <evtrack/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evtrack {

int monomial_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

std::vector<double> monomials(int degree, Point p) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(monomial_count(degree)));
  std::vector<double> xp(static_cast<std::size_t>(degree) + 1, 1.0), yp(xp);
  for (int i = 1; i <= degree; ++i) {
    xp[i] = xp[i - 1] * p.x;
    yp[i] = yp[i - 1] * p.y;
  }
  for (int t = 0; t <= degree; ++t)
    for (int j = 0; j <= t; ++j) out.push_back(xp[t - j] * yp[j]);
  return out;
}

namespace {

void check_degree(int degree) {
  if (degree < 1 || degree > 8) throw Error(ErrorCode::config, "gaze map degree must lie in [1, 8]");
}

Point apply(const InputTransform& tf, Point p) {
  return {(p.x - tf.offset.x) / tf.scale.x, (p.y - tf.offset.y) / tf.scale.y};
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int monomial_index(int px, int py) {
  const int t = px + py;
  return t * (t + 1) / 2 + py;
}

// Expands sum c_k ((x-ox)/sx)^i ((y-oy)/sy)^j into raw monomials.
std::vector<double> expand(const GazeMap& map, const std::vector<double>& coeffs) {
  std::vector<double> raw(coeffs.size(), 0.0);
  const auto& tf = map.transform;
  for (int t = 0; t <= map.degree; ++t) {
    for (int j = 0; j <= t; ++j) {
      const int i = t - j;
      const double c = coeffs[static_cast<std::size_t>(monomial_index(i, j))] /
                       (std::pow(tf.scale.x, i) * std::pow(tf.scale.y, j));
      for (int a = 0; a <= i; ++a)
        for (int b = 0; b <= j; ++b)
          raw[static_cast<std::size_t>(monomial_index(a, b))] +=
              c * binomial(i, a) * std::pow(-tf.offset.x, i - a) * binomial(j, b) *
              std::pow(-tf.offset.y, j - b);
    }
  }
  return raw;
}

}  // namespace

GazeMap GazeMap::zero(int degree) {
  check_degree(degree);
  GazeMap m;
  m.degree = degree;
  m.coeffs_x.assign(static_cast<std::size_t>(monomial_count(degree)), 0.0);
  m.coeffs_y = m.coeffs_x;
  return m;
}

GazeMap GazeMap::identity(int degree) {
  GazeMap m = zero(degree);
  m.coeffs_x[1] = 1.0;
  m.coeffs_y[2] = 1.0;
  return m;
}

std::vector<double> GazeMap::raw_coeffs_x() const { return expand(*this, coeffs_x); }
std::vector<double> GazeMap::raw_coeffs_y() const { return expand(*this, coeffs_y); }

GazeMap calibrate(std::span<const CalibrationPair> pairs, int degree) {
  check_degree(degree);
  const int n_coeffs = monomial_count(degree);
  if (pairs.size() < static_cast<std::size_t>(n_coeffs))
    throw Error(ErrorCode::rank_deficient, "fewer calibration pairs than coefficients");

  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.pupil_center.x) || !std::isfinite(p.pupil_center.y) ||
        !std::isfinite(p.screen_target.x) || !std::isfinite(p.screen_target.y))
      throw Error(ErrorCode::config, "non-finite calibration pair");
    min_x = std::min(min_x, p.pupil_center.x);
    max_x = std::max(max_x, p.pupil_center.x);
    min_y = std::min(min_y, p.pupil_center.y);
    max_y = std::max(max_y, p.pupil_center.y);
  }
  GazeMap map = GazeMap::zero(degree);
  map.transform.offset = {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)};
  map.transform.scale = {std::max(0.5 * (max_x - min_x), 1e-12), std::max(0.5 * (max_y - min_y), 1e-12)};

  const auto rows = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd design(rows, n_coeffs);
  Eigen::MatrixXd rhs(rows, 2);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& p = pairs[static_cast<std::size_t>(r)];
    const auto m = monomials(degree, apply(map.transform, p.pupil_center));
    for (int c = 0; c < n_coeffs; ++c) design(r, c) = m[static_cast<std::size_t>(c)];
    rhs(r, 0) = p.screen_target.x;
    rhs(r, 1) = p.screen_target.y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < n_coeffs) throw Error(ErrorCode::rank_deficient, "calibration design matrix is rank deficient");
  const Eigen::MatrixXd sol = qr.solve(rhs);
  for (int c = 0; c < n_coeffs; ++c) {
    map.coeffs_x[static_cast<std::size_t>(c)] = sol(c, 0);
    map.coeffs_y[static_cast<std::size_t>(c)] = sol(c, 1);
  }
  return map;
}

Point map_gaze(const GazeMap& map, Point pupil_center) {
  const auto m = monomials(map.degree, apply(map.transform, pupil_center));
  Point out{0.0, 0.0};
  for (std::size_t k = 0; k < m.size(); ++k) {
    out.x += map.coeffs_x[k] * m[k];
    out.y += map.coeffs_y[k] * m[k];
  }
  return out;
}

double calibration_residual(const GazeMap& map, std::span<const CalibrationPair> pairs) {
  double sum = 0.0;
  for (const auto& p : pairs) {
    const Point d = map_gaze(map, p.pupil_center) - p.screen_target;
    sum += d.x * d.x + d.y * d.y;
  }
  return sum;
}

VisualAngles screen_to_angles(const ScreenGeometry& geom, Point screen) {
  constexpr double rad2deg = 180.0 / M_PI;
  return {rad2deg * std::atan(std::abs(screen.x - geom.cx) / geom.distance),
          rad2deg * std::atan(std::abs(screen.y - geom.cy) / geom.distance)};
}

}  // namespace evtrack
