#pragma once

// Polynomial regression from pupil center to screen coordinates, and the
// screen-to-visual-angle conversion.

#include <evtrack/types.hpp>

#include <span>
#include <vector>

namespace evtrack {

struct CalibrationPair {
  Point pupil_center;   // image pixels
  Point screen_target;  // screen pixels
};

/// Affine input normalization u = (x - offset) / scale applied per axis
/// before evaluating the monomials.
struct InputTransform {
  Point offset{0.0, 0.0};
  Point scale{1.0, 1.0};
};

/// Number of bivariate monomials of total degree <= degree.
int monomial_count(int degree);

/// Monomials in graded lexicographic order: 1, x, y, x^2, xy, y^2, x^3, ...
std::vector<double> monomials(int degree, Point p);

struct GazeMap {
  int degree = 2;
  InputTransform transform;
  std::vector<double> coeffs_x;
  std::vector<double> coeffs_y;

  static GazeMap zero(int degree);
  /// x_s = x_e, y_s = y_e with an identity transform.
  static GazeMap identity(int degree);

  /// Coefficients expanded back to the raw (untransformed) monomial basis.
  std::vector<double> raw_coeffs_x() const;
  std::vector<double> raw_coeffs_y() const;
};

/// Independent per-axis least squares over the monomial basis. Inputs are
/// centered and scaled to [-1, 1] and solved by column-pivoted QR. Throws
/// Error{rank_deficient} on too few or degenerate pairs.
GazeMap calibrate(std::span<const CalibrationPair> pairs, int degree);

Point map_gaze(const GazeMap& map, Point pupil_center);

/// Sum of squared residuals of the map over the pairs (both axes).
double calibration_residual(const GazeMap& map, std::span<const CalibrationPair> pairs);

struct ScreenGeometry {
  double cx = 960.0;
  double cy = 540.0;
  double distance = 1500.0;  // eye-to-screen, screen pixels
  double width = 1920.0;
  double height = 1080.0;
};

struct VisualAngles {
  double theta_deg = 0.0;  // horizontal
  double phi_deg = 0.0;    // vertical
};

/// Unsigned angles: atan(|x_s - c_x| / D) and atan(|y_s - c_y| / D) in degrees.
VisualAngles screen_to_angles(const ScreenGeometry& geom, Point screen);

}  // namespace evtrack
