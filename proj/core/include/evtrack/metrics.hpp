#pragma once

// Evaluation quantities: gaze accuracy and precision, track smoothness,
// pupil IOU and center error, and the frame-only ablation.

#include <evtrack/conic.hpp>
#include <evtrack/frames.hpp>
#include <evtrack/gaze.hpp>
#include <evtrack/recording.hpp>
#include <evtrack/tracker.hpp>
#include <evtrack/types.hpp>

#include <span>
#include <vector>

namespace evtrack {

struct GazeSample {
  Timestamp t = 0;
  VisualAngles estimate;
  VisualAngles truth;
  bool blink = false;
};

using PupilMask = BinaryMask;

inline constexpr double kTrimFraction = 0.025;
inline constexpr double kSmoothnessCap = 1e6;

/// Indices kept after dropping floor(fraction * n) of the smallest and of
/// the largest values (ties keep their original order).
std::vector<std::size_t> trimmed_indices(std::span<const double> values, double fraction = kTrimFraction);

/// Trimmed mean of |estimate - truth| over non-blink samples, degrees.
/// Throws Error{empty_input} when no such sample exists.
double accuracy(std::span<const GazeSample> samples);

/// sqrt(sum |d_i - mean|^2 / (n - 1)) over non-blink estimates, after
/// trimming by deviation norm. Throws Error{empty_input} below two samples.
double precision(std::span<const GazeSample> samples);

/// Mean reciprocal step length; each term is capped at `cap` so repeated
/// points stay finite. Throws Error{empty_input} below two points.
double smoothness(std::span<const Point> track, double cap = kSmoothnessCap);

/// |a and b| / |a or b|, 1 for two empty masks. Throws Error{dimension_mismatch}.
double iou(const PupilMask& a, const PupilMask& b);

double center_error(const EllipseParams& estimate, const EllipseParams& truth);

/// Tracker state around each frame of a recording.
struct FrameTrace {
  Timestamp t = 0;
  EyeModel before;  // after every earlier event, just before this frame
  EyeModel after;   // after the frame update
  double frame_eccentricity = 0.0;
  std::size_t event_updates = 0;  // event-driven emissions since the previous frame
};

std::vector<FrameTrace> trace_frames(const Recording& rec, const TrackerConfig& config);

struct AblationSample {
  Timestamp t = 0;
  SegmentKind phase = SegmentKind::fixation;  // saccade or fixation
  double d_frame = 0.0;  // previous frame's estimate held constant
  double d_event = 0.0;  // event-updated estimate just before this frame
  double difference() const { return d_frame - d_event; }
};

/// Samples for every frame taken inside a saccade, and for every frame whose
/// preceding inter-frame interval lies entirely inside fixations. Requires
/// ground truth.
std::vector<AblationSample> frame_only_ablation(const Recording& rec, const TrackerConfig& config);
std::vector<AblationSample> frame_only_ablation(const Recording& rec, std::span<const FrameTrace> trace);

}  // namespace evtrack
