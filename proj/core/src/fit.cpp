#include <evtrack/fit.hpp>

#include <cmath>

namespace evtrack {

Vec<5> feature_vector_ellipse(Point p) {
  Vec<5> v;
  v << p.x * p.x, p.x * p.y, p.y * p.y, p.x, p.y;
  return v;
}

Vec<3> feature_vector_parabola(Point p) {
  Vec<3> v;
  v << p.y * p.y, p.y, 1.0;
  return v;
}

Vec<3> feature_vector_circle(Point p) {
  Vec<3> v;
  v << p.x, p.y, 1.0;
  return v;
}

CircleParams to_circle(const Vec<3>& x) {
  const double cx = -0.5 * x[0];
  const double cy = -0.5 * x[1];
  const double r2 = cx * cx + cy * cy - x[2];
  if (!(r2 > 0.0) || !std::isfinite(r2)) throw Error(ErrorCode::degenerate_conic, "imaginary circle");
  return {cx, cy, std::sqrt(r2)};
}

void FitConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::config, "gamma must lie in [0, 1]");
  if (!(gamma_prime >= 0.0 && gamma_prime <= 1.0))
    throw Error(ErrorCode::config, "gamma_prime must lie in [0, 1]");
  if (!(delta > 0.0)) throw Error(ErrorCode::config, "delta must be positive");
  if (events_per_fit < 1) throw Error(ErrorCode::config, "events_per_fit must be >= 1");
  if (refresh_period < 0) throw Error(ErrorCode::config, "refresh_period must be >= 0");
}

}  // namespace evtrack
