#include <evtrack/conic.hpp>

#include <evtrack/error.hpp>

#include <algorithm>
#include <cmath>

namespace evtrack {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::degenerate_conic: return "degenerate conic";
    case ErrorCode::singular_matrix: return "singular matrix";
    case ErrorCode::numerical_breakdown: return "numerical breakdown";
    case ErrorCode::rank_deficient: return "rank deficient";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::empty_input: return "empty input";
    case ErrorCode::out_of_bounds: return "out of bounds";
    case ErrorCode::out_of_span: return "out of span";
    case ErrorCode::malformed_header: return "malformed header";
    case ErrorCode::checksum_mismatch: return "checksum mismatch";
    case ErrorCode::out_of_order: return "out-of-order timestamp";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::config: return "config error";
  }
  return "unknown error";
}

double norm(Point p) { return std::hypot(p.x, p.y); }

Frame::Frame(Timestamp t, int width, int height)
    : t(t), width(width), height(height),
      pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

Frame::Frame(Timestamp t, int width, int height, std::vector<std::uint8_t> pixels)
    : t(t), width(width), height(height), pixels(std::move(pixels)) {}

namespace {

double discriminant(const EllipseParams& e) { return e.h * e.h - 4.0 * e.a * e.b; }

double quadratic_scale(const EllipseParams& e) {
  return std::max({std::abs(e.a), std::abs(e.b), std::abs(e.h)});
}

bool degenerate(const EllipseParams& e) {
  const double s = quadratic_scale(e);
  return !(s > 0.0) || !(std::abs(discriminant(e)) >= kDegenerateTolerance * s * s);
}

// Value of the conic at its own center.
double center_value(const EllipseParams& e, Point c) { return 0.5 * (e.g * c.x + e.f * c.y) - 1.0; }

struct Eigen2 {
  double plus;   // (a+b)/2 + R
  double minus;  // (a+b)/2 - R
  double angle_plus;
};

Eigen2 quadratic_eigen(const EllipseParams& e) {
  const double mean = 0.5 * (e.a + e.b);
  const double radius = std::hypot(0.5 * (e.a - e.b), 0.5 * e.h);
  return {mean + radius, mean - radius, 0.5 * std::atan2(e.h, e.a - e.b)};
}

}  // namespace

double ellipse_residual(const EllipseParams& e, Point p) {
  return e.a * p.x * p.x + e.h * p.x * p.y + e.b * p.y * p.y + e.g * p.x + e.f * p.y - 1.0;
}

Point ellipse_center(const EllipseParams& e) {
  if (degenerate(e)) throw Error(ErrorCode::degenerate_conic, "h^2 - 4ab vanishes");
  const double disc = discriminant(e);
  return {(2.0 * e.b * e.g - e.h * e.f) / disc, (2.0 * e.a * e.f - e.h * e.g) / disc};
}

bool is_real_ellipse(const EllipseParams& e) {
  if (!std::isfinite(e.a) || !std::isfinite(e.b) || !std::isfinite(e.h) || !std::isfinite(e.g) ||
      !std::isfinite(e.f))
    return false;
  if (degenerate(e) || discriminant(e) >= 0.0) return false;
  const Point c = ellipse_center(e);
  const double k = center_value(e, c);
  // The quadratic form is definite with the sign of a; the curve is real when
  // the center value has the opposite sign.
  return std::isfinite(k) && k * e.a < 0.0;
}

Point project_onto_ellipse(const EllipseParams& e, Point p) {
  if (!is_real_ellipse(e)) throw Error(ErrorCode::degenerate_conic, "not a real ellipse");
  const Point c = ellipse_center(e);
  const Point u = p - c;
  if (u.x == 0.0 && u.y == 0.0)
    throw Error(ErrorCode::degenerate_conic, "projection ray undefined at the center");
  // Along c + t u the linear term vanishes because the gradient is zero at c.
  const double quad = e.a * u.x * u.x + e.h * u.x * u.y + e.b * u.y * u.y;
  const double t2 = -center_value(e, c) / quad;
  if (!(t2 > 0.0) || !std::isfinite(t2))
    throw Error(ErrorCode::degenerate_conic, "ray does not meet the curve");
  const double t = std::sqrt(t2);
  return {c.x + t * u.x, c.y + t * u.y};
}

EllipseGeometry ellipse_geometry(const EllipseParams& e) {
  if (!is_real_ellipse(e)) throw Error(ErrorCode::degenerate_conic, "not a real ellipse");
  const Point c = ellipse_center(e);
  const double k = center_value(e, c);
  const Eigen2 eig = quadratic_eigen(e);
  const double r_plus = std::sqrt(-k / eig.plus);
  const double r_minus = std::sqrt(-k / eig.minus);
  EllipseGeometry g;
  g.center = c;
  if (r_plus >= r_minus) {
    g.semi_major = r_plus;
    g.semi_minor = r_minus;
    g.angle = eig.angle_plus;
  } else {
    g.semi_major = r_minus;
    g.semi_minor = r_plus;
    g.angle = eig.angle_plus + 0.5 * M_PI;
  }
  return g;
}

double eccentricity(const EllipseParams& e) {
  const EllipseGeometry g = ellipse_geometry(e);
  if (!(g.semi_minor > 1e-12 * std::max(1.0, g.semi_major)))
    throw Error(ErrorCode::degenerate_conic, "minor radius vanishes");
  return g.semi_major / g.semi_minor;
}

EllipseParams ellipse_from_geometry(const EllipseGeometry& geo) {
  const double cs = std::cos(geo.angle);
  const double sn = std::sin(geo.angle);
  const double ip = 1.0 / (geo.semi_major * geo.semi_major);
  const double iq = 1.0 / (geo.semi_minor * geo.semi_minor);
  const double qa = cs * cs * ip + sn * sn * iq;
  const double qh = 2.0 * cs * sn * (ip - iq);
  const double qb = sn * sn * ip + cs * cs * iq;
  const double cx = geo.center.x;
  const double cy = geo.center.y;
  const double qg = -2.0 * qa * cx - qh * cy;
  const double qf = -2.0 * qb * cy - qh * cx;
  const double k0 = qa * cx * cx + qh * cx * cy + qb * cy * cy - 1.0;
  if (k0 == 0.0) throw Error(ErrorCode::degenerate_conic, "curve passes through the origin");
  const double s = -1.0 / k0;
  return {qa * s, qh * s, qb * s, qg * s, qf * s};
}

bool ellipse_contains(const EllipseParams& e, Point p) {
  // Inside points share the sign of the quadratic form's negation.
  const double v = ellipse_residual(e, p);
  return e.a > 0.0 ? v < 0.0 : v > 0.0;
}

EllipseParams denormalize(const EllipseParams& e, double scale) {
  const double s2 = scale * scale;
  return {e.a / s2, e.h / s2, e.b / s2, e.g / scale, e.f / scale};
}

ParabolaParams denormalize(const ParabolaParams& p, double scale) {
  return {p.a / scale, p.g, p.d * scale};
}

CircleParams denormalize(const CircleParams& c, double scale) {
  return {c.cx * scale, c.cy * scale, c.r * scale};
}

double parabola_residual(const ParabolaParams& p, Point q) {
  return p.a * q.y * q.y + p.g * q.y + p.d - q.x;
}

double circle_residual(const CircleParams& c, Point q) {
  return q.x * q.x + q.y * q.y - 2.0 * q.x * c.cx - 2.0 * q.y * c.cy +
         (c.cx * c.cx + c.cy * c.cy - c.r * c.r);
}

double eyelid_residual(const ParabolaParams& p, Point image) {
  return parabola_residual(p, to_eyelid_frame(image));
}

}  // namespace evtrack
