#pragma once

// Streaming eye-model tracker: frames re-anchor the fit in batch, gated
// events move it between frames.

#include <evtrack/conic.hpp>
#include <evtrack/fit.hpp>
#include <evtrack/frames.hpp>
#include <evtrack/types.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace evtrack {

enum class Membership { pupil, eyelid, glint, rejected };

const char* to_string(Membership m) noexcept;

/// Assigns an event to the first sub-model (pupil, then glint, then eyelid)
/// whose curve lies within `delta` pixels of it.
Membership gate_event(const EyeModel& model, Point p, double delta);
Membership gate_event(const EyeModel& model, const Event& ev, double delta);

/// Radial distance from `p` to the ellipse boundary, or +inf when the
/// projection is undefined. Coefficients are cached for the event hot path.
class EllipseGate {
 public:
  EllipseGate() = default;
  explicit EllipseGate(const EllipseParams& e);

  double distance(Point p) const;
  bool valid() const { return valid_; }

 private:
  double a_ = 0, h_ = 0, b_ = 0;
  Point center_;
  double neg_center_value_ = 0;
  bool valid_ = false;
};

struct TrackerConfig {
  FitConfig fit;
  FramePipelineConfig frames;
  bool use_events = true;  // false reproduces the frame-only baseline

  void validate() const;
};

enum class FitSource { frame, events };

const char* to_string(FitSource s) noexcept;

struct Emission {
  Timestamp t = 0;
  FitSource source = FitSource::frame;
  EyeModel model;
  /// Eccentricity of the ellipse fitted to this frame's candidates alone;
  /// +inf when that fit fails. NaN for event emissions.
  double frame_eccentricity = 0.0;
  /// Center of the conic solved for the pupil in this update, whether or not
  /// it was accepted as an ellipse. Empty without a pupil solve or when the
  /// conic has no center.
  std::optional<Point> fit_center;
};

struct TrackerStats {
  std::size_t frames = 0;
  std::size_t events = 0;
  std::size_t gated_pupil = 0;
  std::size_t gated_eyelid = 0;
  std::size_t gated_glint = 0;
  std::size_t rejected = 0;
  std::size_t event_updates = 0;
  std::size_t failed_solves = 0;
};

namespace detail {

template <QuadricKind Kind>
class SubFit {
 public:
  static constexpr int dim = QuadricTraits<Kind>::dim;

  SubFit() : state_(FitState<dim>::identity()) {}

  /// Blends the frame's points (plus any pending event points) with weight
  /// 1 - gamma and solves. Until a frame solve has succeeded the batch
  /// replaces the state outright. Returns nothing if the solve fails.
  std::optional<Vec<dim>> ingest_frame(std::span<const Point> points, double gamma);

  /// Replaces the state with the frame's points alone and solves.
  std::optional<Vec<dim>> restart(std::span<const Point> points);

  /// Queues one event point; when N points are pending, updates the fit.
  /// `updated` reports whether an update was attempted.
  std::optional<Vec<dim>> add_event(Point p, const FitConfig& config, bool& updated);

  const FitState<dim>& state() const { return state_; }
  std::size_t pending() const { return pending_.size(); }
  bool primed() const { return primed_; }

 private:
  std::optional<Vec<dim>> try_solve();

  FitState<dim> state_;
  std::vector<Point> pending_;
  bool primed_ = false;
};

}  // namespace detail

/// Image-space edge candidates extracted from one frame.
struct FrameCandidates {
  Timestamp t = 0;
  std::vector<Point> pupil;
  std::vector<Point> eyelid;
  std::vector<Point> glint;
};

class Tracker {
 public:
  Tracker(SensorSize sensor, TrackerConfig config);

  /// Extracts candidates from the frame and fits them. When `record` is set
  /// the extracted candidates are stored there.
  std::optional<Emission> on_frame(const Frame& frame, FrameCandidates* record = nullptr);
  /// Fits previously recorded candidates. Equivalent to on_frame on the
  /// original frame when the tracker is in the same state as when recorded.
  std::optional<Emission> on_candidates(const FrameCandidates& candidates);
  std::optional<Emission> on_event(const Event& ev);

  const EyeModel& model() const { return model_; }
  const TrackerConfig& config() const { return config_; }
  const TrackerStats& stats() const { return stats_; }
  double scale() const { return scale_; }

 private:
  Point normalize(Point p) const { return {p.x / scale_, p.y / scale_}; }
  bool accept_ellipse(const Vec<5>& solution, Timestamp t);
  std::optional<Point> conic_center(const Vec<5>& solution) const;
  bool accept_parabola(const Vec<3>& solution);
  bool accept_circle(const Vec<3>& solution);
  double frame_only_eccentricity(std::span<const Point> normalized) const;
  Emission ingest(FrameCandidates& c, const Frame* frame);

  SensorSize sensor_;
  TrackerConfig config_;
  double scale_;
  EyeModel model_;
  EllipseGate gate_;
  detail::SubFit<QuadricKind::ellipse> pupil_;
  detail::SubFit<QuadricKind::parabola> eyelid_;
  detail::SubFit<QuadricKind::circle> glint_;
  TrackerStats stats_;
};

/// Merges both streams by timestamp (a frame goes before events with the
/// same timestamp) and runs them through a fresh tracker.
std::vector<Emission> process_stream(SensorSize sensor, std::span<const Frame> frames,
                                     std::span<const Event> events, const TrackerConfig& config);

}  // namespace evtrack
