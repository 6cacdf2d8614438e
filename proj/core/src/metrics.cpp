#include <evtrack/metrics.hpp>

#include <evtrack/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evtrack {

std::vector<std::size_t> trimmed_indices(std::span<const double> values, double fraction) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(values.size())));
  if (2 * cut >= order.size()) return order;
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(cut),
                                order.end() - static_cast<std::ptrdiff_t>(cut));
  std::sort(kept.begin(), kept.end());
  return kept;
}

double accuracy(std::span<const GazeSample> samples) {
  std::vector<double> errors;
  for (const GazeSample& s : samples)
    if (!s.blink)
      errors.push_back(std::hypot(s.estimate.theta_deg - s.truth.theta_deg, s.estimate.phi_deg - s.truth.phi_deg));
  if (errors.empty()) throw Error(ErrorCode::empty_input, "accuracy needs at least one non-blink sample");
  double sum = 0.0;
  const auto kept = trimmed_indices(errors);
  for (std::size_t i : kept) sum += errors[i];
  return sum / static_cast<double>(kept.size());
}

double precision(std::span<const GazeSample> samples) {
  std::vector<Point> est;
  for (const GazeSample& s : samples)
    if (!s.blink) est.push_back({s.estimate.theta_deg, s.estimate.phi_deg});
  if (est.size() < 2) throw Error(ErrorCode::empty_input, "precision needs at least two non-blink samples");

  auto mean_of = [&](const std::vector<std::size_t>& idx) {
    Point m;
    for (std::size_t i : idx) m = m + est[i];
    return (1.0 / static_cast<double>(idx.size())) * m;
  };
  std::vector<std::size_t> all(est.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Point m0 = mean_of(all);
  std::vector<double> dev(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) dev[i] = norm(est[i] - m0);
  const auto kept = trimmed_indices(dev);
  if (kept.size() < 2) throw Error(ErrorCode::empty_input, "precision needs at least two samples after trimming");
  const Point m = mean_of(kept);
  double ss = 0.0;
  for (std::size_t i : kept) {
    const Point d = est[i] - m;
    ss += d.x * d.x + d.y * d.y;
  }
  return std::sqrt(ss / static_cast<double>(kept.size() - 1));
}

double smoothness(std::span<const Point> track, double cap) {
  if (track.size() < 2) throw Error(ErrorCode::empty_input, "smoothness needs at least two points");
  double sum = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    const double step = norm(track[i] - track[i - 1]);
    sum += step > 0.0 ? std::min(1.0 / step, cap) : cap;
  }
  return sum / static_cast<double>(track.size() - 1);
}

double iou(const PupilMask& a, const PupilMask& b) {
  if (a.width != b.width || a.height != b.height || a.bits.size() != b.bits.size())
    throw Error(ErrorCode::dimension_mismatch, "masks differ in size");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool x = a.bits[i] != 0;
    const bool y = b.bits[i] != 0;
    inter += static_cast<std::size_t>(x && y);
    uni += static_cast<std::size_t>(x || y);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double center_error(const EllipseParams& estimate, const EllipseParams& truth) {
  return norm(ellipse_center(estimate) - ellipse_center(truth));
}

std::vector<FrameTrace> trace_frames(const Recording& rec, const TrackerConfig& config) {
  Tracker tracker(rec.sensor, config);
  std::vector<FrameTrace> out;
  out.reserve(rec.frames.size());
  std::size_t updates = 0;
  std::size_t ei = 0;
  for (const Frame& frame : rec.frames) {
    while (ei < rec.events.size() && rec.events[ei].t < frame.t)
      if (tracker.on_event(rec.events[ei++])) ++updates;
    FrameTrace tr;
    tr.t = frame.t;
    tr.before = tracker.model();
    tr.event_updates = updates;
    updates = 0;
    const auto em = tracker.on_frame(frame);
    tr.after = tracker.model();
    tr.frame_eccentricity = em ? em->frame_eccentricity : std::numeric_limits<double>::infinity();
    out.push_back(tr);
  }
  return out;
}

namespace {

// A frame is a saccade sample when its timestamp falls inside a saccade and
// a fixation sample when the whole interval since the previous frame lies
// inside fixations. Without a segment list the per-frame truth phase is used.
std::optional<SegmentKind> interval_phase(const Recording& rec, std::size_t i) {
  const double t0 = static_cast<double>(rec.frames[i - 1].t);
  const double t1 = static_cast<double>(rec.frames[i].t);
  if (rec.segments.empty()) {
    const SegmentKind a = rec.truth[i - 1].phase;
    const SegmentKind b = rec.truth[i].phase;
    if (b == SegmentKind::saccade) return SegmentKind::saccade;
    if (a == SegmentKind::fixation && b == SegmentKind::fixation) return SegmentKind::fixation;
    return std::nullopt;
  }
  bool all_fixation = true;
  bool covered = false;
  for (const Segment& s : rec.segments) {
    if (s.kind == SegmentKind::saccade && t1 >= s.t_start && t1 <= s.t_end) return SegmentKind::saccade;
    if (s.t_end <= t0 || s.t_start >= t1) continue;
    covered = true;
    if (s.kind != SegmentKind::fixation) all_fixation = false;
  }
  if (covered && all_fixation) return SegmentKind::fixation;
  return std::nullopt;
}

}  // namespace

std::vector<AblationSample> frame_only_ablation(const Recording& rec, std::span<const FrameTrace> trace) {
  if (!rec.has_truth()) throw Error(ErrorCode::empty_input, "ablation needs ground truth");
  if (trace.size() != rec.frames.size()) throw Error(ErrorCode::dimension_mismatch, "trace does not match the frames");
  std::vector<AblationSample> out;
  for (std::size_t i = 1; i < rec.frames.size(); ++i) {
    const auto phase = interval_phase(rec, i);
    if (!phase) continue;
    const EyeModel& held = trace[i - 1].after;
    const EyeModel& moved = trace[i].before;
    if (!held.ellipse_valid || !moved.ellipse_valid) continue;
    AblationSample s;
    s.t = rec.frames[i].t;
    s.phase = *phase;
    s.d_frame = center_error(held.ellipse, rec.truth[i].ellipse);
    s.d_event = center_error(moved.ellipse, rec.truth[i].ellipse);
    out.push_back(s);
  }
  return out;
}

std::vector<AblationSample> frame_only_ablation(const Recording& rec, const TrackerConfig& config) {
  const auto trace = trace_frames(rec, config);
  return frame_only_ablation(rec, trace);
}

}  // namespace evtrack
