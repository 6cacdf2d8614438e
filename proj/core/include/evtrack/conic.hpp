#pragma once

// Closed-form conic geometry for the eye model: the pupil ellipse, the eyelid
// parabola and the glint circle, plus the EyeModel aggregate.

#include <evtrack/types.hpp>

namespace evtrack {

/// Implicit conic a x^2 + h xy + b y^2 + g x + f y - 1 = 0. The constant
/// term is fixed at -1 and never stored.
struct EllipseParams {
  double a = 0.0;
  double h = 0.0;
  double b = 0.0;
  double g = 0.0;
  double f = 0.0;

  friend bool operator==(const EllipseParams&, const EllipseParams&) = default;
};

/// Eyelid curve x = a y^2 + g y + d in its own (x, y) frame.
struct ParabolaParams {
  double a = 0.0;
  double g = 0.0;
  double d = 0.0;

  friend bool operator==(const ParabolaParams&, const ParabolaParams&) = default;
};

struct CircleParams {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;

  friend bool operator==(const CircleParams&, const CircleParams&) = default;
};

/// Geometric description of an ellipse. `angle` is the direction of the
/// first semi-axis in radians, counter-clockwise from +x.
struct EllipseGeometry {
  Point center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;
};

/// Relative tolerance on |h^2 - 4ab| / max(|a|,|b|,|h|)^2 below which the
/// conic is treated as degenerate.
inline constexpr double kDegenerateTolerance = 1e-12;

double ellipse_residual(const EllipseParams& e, Point p);

/// Throws Error{degenerate_conic} when the quadratic part is singular.
Point ellipse_center(const EllipseParams& e);

/// True when the coefficients describe a real, non-degenerate ellipse.
bool is_real_ellipse(const EllipseParams& e);

/// Intersection of the ray from the ellipse center through `p` with the
/// ellipse boundary. Throws when `p` is the center or `e` is not a real ellipse.
Point project_onto_ellipse(const EllipseParams& e, Point p);

/// Major over minor semi-axis, >= 1.
double eccentricity(const EllipseParams& e);

EllipseGeometry ellipse_geometry(const EllipseParams& e);

/// Builds the d = -1 normalized implicit form of a geometric ellipse. The
/// origin must lie off the curve.
EllipseParams ellipse_from_geometry(const EllipseGeometry& g);

/// Strictly inside the curve (same sign as the center).
bool ellipse_contains(const EllipseParams& e, Point p);

/// Maps coefficients fitted on coordinates divided by `scale` back to pixels.
EllipseParams denormalize(const EllipseParams& e, double scale);
ParabolaParams denormalize(const ParabolaParams& p, double scale);
CircleParams denormalize(const CircleParams& c, double scale);

double parabola_residual(const ParabolaParams& p, Point q);
double circle_residual(const CircleParams& c, Point q);

/// The eyelid is fitted in a transposed frame so that row = f(column):
/// an image point (col, row) becomes parabola point (row, col).
inline Point to_eyelid_frame(Point image) { return {image.y, image.x}; }

double eyelid_residual(const ParabolaParams& p, Point image);

struct EyeModel {
  EllipseParams ellipse;
  ParabolaParams eyelid;
  CircleParams glint;
  Timestamp last_update_t = 0;
  bool ellipse_valid = false;
  bool eyelid_valid = false;
  bool glint_valid = false;
};

}  // namespace evtrack
