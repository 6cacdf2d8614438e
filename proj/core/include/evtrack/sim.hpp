#pragma once

// Synthetic near-eye scene: a rotating eye seen by a sensor that produces
// both grayscale frames and DVS events, with analytic ground truth.

#include <evtrack/conic.hpp>
#include <evtrack/frames.hpp>
#include <evtrack/gaze.hpp>
#include <evtrack/types.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace evtrack {

struct SceneConfig {
  SensorSize sensor{346, 260};
  Point eye_center{173.0, 140.0};  // pupil center when looking at the screen center
  double eyeball_radius = 140.0;   // pupil rotation radius, pixels
  double pupil_radius = 20.0;
  double iris_radius = 45.0;

  double pupil_intensity = 25.0;
  double iris_intensity = 140.0;
  double sclera_intensity = 170.0;
  double glint_intensity = 250.0;
  double eyelid_intensity = 160.0;
  double lash_intensity = 75.0;

  /// Upper eyelid margin, row = a col^2 + g col + d, at rest.
  ParabolaParams eyelid{0.004, -1.384, 194.716};
  double lash_spacing = 10.0;
  double lash_size = 3.0;

  Point glint_offset{-30.0, 12.0};  // relative to the pupil center
  double glint_radius = 3.0;
  double edge_width = 1.0;  // width of the linear intensity ramp across every edge, pixels

  double contrast_threshold = 0.22;  // log-intensity units
  double frame_rate = 25.0;          // Hz
  double sample_rate = 100000.0;     // Hz, internal event-simulation rate
  double event_jitter_us = 0.0;      // uniform +- jitter
  double noise_rate = 0.0;           // background events per millisecond, sensor-wide

  ScreenGeometry screen;

  void validate() const;
};

struct EyeState {
  Point gaze;                // screen point being looked at
  double eyelid_drop = 0.0;  // pixels the eyelid margin is lowered

  friend bool operator==(const EyeState&, const EyeState&) = default;
};

enum class SegmentKind { fixation, saccade, smooth_pursuit, blink };

const char* to_string(SegmentKind k) noexcept;
SegmentKind segment_kind_from_string(const std::string& s);

struct Segment {
  SegmentKind kind = SegmentKind::fixation;
  double t_start = 0.0;  // microseconds
  double t_end = 0.0;
  Point from;            // screen points
  Point to;
  double depth = 0.0;       // blink: maximum eyelid drop, pixels
  double half_size = 0.0;   // pursuit: half side of the square path
  double period = 0.0;      // pursuit: microseconds per lap
  int target_index = -1;    // fixation: calibration grid index
};

/// Piecewise eye motion. Saccades follow a minimum-jerk profile in visual
/// angle; pursuit runs at constant speed around a square.
class Trajectory {
 public:
  Trajectory(const ScreenGeometry& screen, Point start_gaze, double t_start_us = 0.0);

  Trajectory& fixate(double duration_ms, int target_index = -1);
  /// Duration follows from the amplitude: T = 1.875 * amplitude / peak.
  Trajectory& saccade_to(Point target, double peak_velocity_deg_s);
  Trajectory& saccade_to_in(Point target, double duration_ms);
  Trajectory& pursue_square(double half_size_px, double period_ms, int laps);
  Trajectory& blink(double duration_ms, double depth_px);

  EyeState state_at(double t_us) const;
  const Segment& segment_at(double t_us) const;
  double start() const { return t_start_; }
  double end() const { return segments_.empty() ? t_start_ : segments_.back().t_end; }
  const std::vector<Segment>& segments() const { return segments_; }
  const ScreenGeometry& screen() const { return screen_; }
  Point current_gaze() const { return gaze_; }

 private:
  ScreenGeometry screen_;
  Point gaze_;
  double t_start_;
  std::vector<Segment> segments_;
};

/// Minimum-jerk position profile s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5.
double min_jerk(double tau);
/// Signed gaze angles (radians) of a screen point, and the inverse.
Point screen_to_signed_angles(const ScreenGeometry& screen, Point p);
Point signed_angles_to_screen(const ScreenGeometry& screen, Point angles);

struct EyeGeometry {
  EllipseGeometry pupil;
  EllipseGeometry iris;
  CircleParams glint;
  ParabolaParams eyelid;  // margin including the current drop
};

EyeGeometry eye_geometry(const SceneConfig& scene, const EyeState& state);

/// Continuous (anti-aliased) intensity at pixel center (x, y).
double scene_intensity(const SceneConfig& scene, const EyeGeometry& geo, int x, int y);

/// Throws Error{out_of_bounds} when the pupil leaves the sensor.
Frame render_frame(const SceneConfig& scene, const EyeState& state, Timestamp t);

/// DVS model: every pixel tracks its log intensity along the trajectory at
/// `sample_rate` and fires one event per contrast-threshold crossing,
/// resetting its reference. Jitter and background noise are seeded.
std::vector<Event> generate_events(const SceneConfig& scene, const Trajectory& trajectory, double t0_us,
                                   double t1_us, std::uint64_t seed);

struct GroundTruth {
  Timestamp t = 0;
  SegmentKind phase = SegmentKind::fixation;
  int target_index = -1;
  EllipseParams ellipse;
  Point center;
  Point screen;
  VisualAngles angles;
  double eyelid_drop = 0.0;
};

/// Throws Error{out_of_span} outside the trajectory.
GroundTruth ground_truth(const SceneConfig& scene, const Trajectory& trajectory, Timestamp t);

/// Filled pupil raster (pixel centers strictly inside).
BinaryMask rasterize_ellipse(const EllipseParams& e, SensorSize sensor);

/// Events per millisecond inside [t0, t1].
double event_rate(const std::vector<Event>& events, double t0_us, double t1_us);

/// Bisection on the contrast threshold so that the mean event rate over the
/// trajectory's saccades reaches `target_per_ms`.
double calibrate_contrast_threshold(SceneConfig scene, const Trajectory& trajectory,
                                    double target_per_ms, std::uint64_t seed);

}  // namespace evtrack
