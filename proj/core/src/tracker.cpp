#include <evtrack/tracker.hpp>

#include <evtrack/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evtrack {

const char* to_string(Membership m) noexcept {
  switch (m) {
    case Membership::pupil: return "pupil";
    case Membership::eyelid: return "eyelid";
    case Membership::glint: return "glint";
    case Membership::rejected: return "rejected";
  }
  return "?";
}

const char* to_string(FitSource s) noexcept { return s == FitSource::frame ? "frame" : "events"; }

EllipseGate::EllipseGate(const EllipseParams& e) : a_(e.a), h_(e.h), b_(e.b) {
  if (!is_real_ellipse(e)) return;
  center_ = ellipse_center(e);
  neg_center_value_ = 1.0 - 0.5 * (e.g * center_.x + e.f * center_.y);
  valid_ = true;
}

double EllipseGate::distance(Point p) const {
  if (!valid_) return std::numeric_limits<double>::infinity();
  const double ux = p.x - center_.x;
  const double uy = p.y - center_.y;
  const double quad = a_ * ux * ux + h_ * ux * uy + b_ * uy * uy;
  const double t2 = neg_center_value_ / quad;
  if (!(t2 > 0.0) || !std::isfinite(t2)) return std::numeric_limits<double>::infinity();
  // |P(p) - p| = |t - 1| |p - c| along the ray.
  return std::abs(std::sqrt(t2) - 1.0) * std::hypot(ux, uy);
}

Membership gate_event(const EyeModel& model, Point p, double delta) {
  if (model.ellipse_valid && EllipseGate(model.ellipse).distance(p) < delta) return Membership::pupil;
  if (model.glint_valid) {
    const double r = circle_residual(model.glint, p);
    if (r * r < delta * delta) return Membership::glint;
  }
  if (model.eyelid_valid && std::abs(eyelid_residual(model.eyelid, p)) < delta)
    return Membership::eyelid;
  return Membership::rejected;
}

Membership gate_event(const EyeModel& model, const Event& ev, double delta) {
  return gate_event(model, Point{static_cast<double>(ev.x), static_cast<double>(ev.y)}, delta);
}

void TrackerConfig::validate() const {
  fit.validate();
  frames.validate();
}

namespace detail {

template <QuadricKind Kind>
auto SubFit<Kind>::try_solve() -> std::optional<Vec<dim>> {
  try {
    return state_.solve();
  } catch (const Error&) {
    return std::nullopt;
  }
}

template <QuadricKind Kind>
auto SubFit<Kind>::ingest_frame(std::span<const Point> points, double gamma) -> std::optional<Vec<dim>> {
  auto acc = batch_accumulate<Kind>(points);
  if (!pending_.empty()) {
    const auto extra = batch_accumulate<Kind>(pending_);
    acc.A += extra.A;
    acc.b += extra.b;
    acc.count += extra.count;
    pending_.clear();
  }
  // The identity prior only stands in until the first frame solve succeeds.
  state_.blend_batch(acc, primed_ ? gamma : 0.0);
  auto sol = try_solve();
  if (sol) primed_ = true;
  return sol;
}

template <QuadricKind Kind>
auto SubFit<Kind>::restart(std::span<const Point> points) -> std::optional<Vec<dim>> {
  state_.blend_batch(batch_accumulate<Kind>(points), 0.0);
  pending_.clear();
  auto sol = try_solve();
  if (sol) primed_ = true;
  return sol;
}

template <QuadricKind Kind>
auto SubFit<Kind>::add_event(Point p, const FitConfig& config, bool& updated) -> std::optional<Vec<dim>> {
  updated = false;
  pending_.push_back(p);
  if (pending_.size() < static_cast<std::size_t>(config.events_per_fit)) return std::nullopt;
  updated = true;
  if (config.events_per_fit == 1 && config.gamma_prime > 0.0) {
    using Traits = QuadricTraits<Kind>;
    try {
      state_.smw_update(Traits::feature(p), Traits::target(p), config.gamma_prime,
                        config.refresh_period);
    } catch (const Error&) {
      pending_.clear();
      return std::nullopt;
    }
  } else {
    state_.blend_batch(batch_accumulate<Kind>(pending_), config.gamma_prime);
  }
  pending_.clear();
  return try_solve();
}

template class SubFit<QuadricKind::ellipse>;
template class SubFit<QuadricKind::parabola>;
template class SubFit<QuadricKind::circle>;

}  // namespace detail

Tracker::Tracker(SensorSize sensor, TrackerConfig config)
    : sensor_(sensor), config_(config), scale_(std::max(sensor.width, sensor.height)) {
  if (sensor.width <= 0 || sensor.height <= 0)
    throw Error(ErrorCode::config, "sensor dimensions must be positive");
  config_.validate();
}

bool Tracker::accept_ellipse(const Vec<5>& solution, Timestamp t) {
  const EllipseParams e = denormalize(to_ellipse(solution), scale_);
  if (!is_real_ellipse(e)) return false;
  const EllipseGate gate(e);
  if (!gate.valid()) return false;
  model_.ellipse = e;
  model_.ellipse_valid = true;
  model_.last_update_t = t;
  gate_ = gate;
  return true;
}

std::optional<Point> Tracker::conic_center(const Vec<5>& solution) const {
  const EllipseParams e = denormalize(to_ellipse(solution), scale_);
  try {
    const Point c = ellipse_center(e);
    if (std::isfinite(c.x) && std::isfinite(c.y)) return c;
  } catch (const Error&) {
  }
  return std::nullopt;
}

bool Tracker::accept_parabola(const Vec<3>& solution) {
  const ParabolaParams p = denormalize(to_parabola(solution), scale_);
  if (!std::isfinite(p.a) || !std::isfinite(p.g) || !std::isfinite(p.d) || p.a == 0.0) return false;
  model_.eyelid = p;
  model_.eyelid_valid = true;
  return true;
}

bool Tracker::accept_circle(const Vec<3>& solution) {
  try {
    const CircleParams c = denormalize(to_circle(solution), scale_);
    if (!(c.r > 0.0)) return false;
    model_.glint = c;
    model_.glint_valid = true;
    return true;
  } catch (const Error&) {
    return false;
  }
}

double Tracker::frame_only_eccentricity(std::span<const Point> normalized) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (normalized.size() < 5) return inf;
  try {
    auto state = FitState<5>::from_accumulation(batch_accumulate<QuadricKind::ellipse>(normalized));
    const EllipseParams e = denormalize(to_ellipse(state.solve()), scale_);
    if (!is_real_ellipse(e)) return inf;
    return eccentricity(e);
  } catch (const Error&) {
    return inf;
  }
}

std::optional<Emission> Tracker::on_frame(const Frame& frame, FrameCandidates* record) {
  if (frame.width != sensor_.width || frame.height != sensor_.height)
    throw Error(ErrorCode::dimension_mismatch, "frame size differs from the sensor size");
  FrameCandidates local;
  FrameCandidates& c = record ? *record : local;
  c.t = frame.t;
  c.pupil = pupil_candidates(frame, config_.frames);
  return ingest(c, &frame);
}

std::optional<Emission> Tracker::on_candidates(const FrameCandidates& candidates) {
  FrameCandidates c = candidates;
  return ingest(c, nullptr);
}

// With a frame, the eyelid and glint candidates are extracted around the
// freshly fitted pupil and stored in `c`; without one they are read from `c`.
Emission Tracker::ingest(FrameCandidates& c, const Frame* frame) {
  ++stats_.frames;
  Emission em;
  em.t = c.t;
  em.source = FitSource::frame;

  std::vector<Point> pts;
  for (const Point& p : c.pupil) pts.push_back(normalize(p));
  em.frame_eccentricity = frame_only_eccentricity(pts);
  if (!pts.empty()) {
    // A blend that no longer yields an ellipse (event drift during a blink)
    // restarts from this frame alone.
    auto sol = pupil_.ingest_frame(pts, config_.fit.gamma);
    if (!sol || !accept_ellipse(*sol, c.t)) {
      ++stats_.failed_solves;
      sol = pupil_.restart(pts);
      if (sol && !accept_ellipse(*sol, c.t)) ++stats_.failed_solves;
    }
    if (sol) em.fit_center = conic_center(*sol);
  }

  std::optional<Point> center;
  if (model_.ellipse_valid) center = ellipse_center(model_.ellipse);
  if (frame) {
    c.eyelid = eyelid_candidates(*frame, center, config_.frames);
    c.glint = glint_candidates(*frame, center, config_.frames);
  }

  pts.clear();
  for (const Point& p : c.eyelid) pts.push_back(normalize(to_eyelid_frame(p)));
  if (!pts.empty())
    if (auto sol = eyelid_.ingest_frame(pts, config_.fit.gamma)) accept_parabola(*sol);

  pts.clear();
  for (const Point& p : c.glint) pts.push_back(normalize(p));
  if (!pts.empty())
    if (auto sol = glint_.ingest_frame(pts, config_.fit.gamma)) accept_circle(*sol);

  model_.last_update_t = c.t;
  em.model = model_;
  return em;
}

std::optional<Emission> Tracker::on_event(const Event& ev) {
  ++stats_.events;
  if (!config_.use_events) return std::nullopt;
  const Point p{static_cast<double>(ev.x), static_cast<double>(ev.y)};
  const double delta = config_.fit.delta;

  Membership m = Membership::rejected;
  if (gate_.valid() && model_.ellipse_valid && gate_.distance(p) < delta) {
    m = Membership::pupil;
  } else if (model_.glint_valid) {
    const double r = circle_residual(model_.glint, p);
    if (r * r < delta * delta) m = Membership::glint;
  }
  if (m == Membership::rejected && model_.eyelid_valid &&
      std::abs(eyelid_residual(model_.eyelid, p)) < delta)
    m = Membership::eyelid;

  bool updated = false;
  std::optional<Point> fit_center;
  switch (m) {
    case Membership::pupil: {
      ++stats_.gated_pupil;
      if (auto sol = pupil_.add_event(normalize(p), config_.fit, updated)) {
        fit_center = conic_center(*sol);
        if (!accept_ellipse(*sol, ev.t)) ++stats_.failed_solves;
      } else if (updated) {
        ++stats_.failed_solves;
      }
      break;
    }
    case Membership::glint: {
      ++stats_.gated_glint;
      if (auto sol = glint_.add_event(normalize(p), config_.fit, updated)) accept_circle(*sol);
      break;
    }
    case Membership::eyelid: {
      ++stats_.gated_eyelid;
      if (auto sol = eyelid_.add_event(normalize(to_eyelid_frame(p)), config_.fit, updated))
        accept_parabola(*sol);
      break;
    }
    case Membership::rejected:
      ++stats_.rejected;
      break;
  }
  if (!updated) return std::nullopt;
  ++stats_.event_updates;
  model_.last_update_t = ev.t;
  Emission em;
  em.t = ev.t;
  em.source = FitSource::events;
  em.model = model_;
  em.frame_eccentricity = std::numeric_limits<double>::quiet_NaN();
  em.fit_center = fit_center;
  return em;
}

std::vector<Emission> process_stream(SensorSize sensor, std::span<const Frame> frames,
                                     std::span<const Event> events, const TrackerConfig& config) {
  Tracker tracker(sensor, config);
  std::vector<Emission> out;
  std::size_t fi = 0;
  std::size_t ei = 0;
  while (fi < frames.size() || ei < events.size()) {
    const bool take_frame =
        fi < frames.size() && (ei >= events.size() || frames[fi].t <= events[ei].t);
    if (take_frame) {
      if (fi > 0 && frames[fi].t < frames[fi - 1].t)
        throw Error(ErrorCode::out_of_order, "frame timestamps decrease", static_cast<std::int64_t>(fi));
      if (auto em = tracker.on_frame(frames[fi++])) out.push_back(std::move(*em));
    } else {
      if (ei > 0 && events[ei].t < events[ei - 1].t)
        throw Error(ErrorCode::out_of_order, "event timestamps decrease", static_cast<std::int64_t>(ei));
      if (auto em = tracker.on_event(events[ei++])) out.push_back(std::move(*em));
    }
  }
  return out;
}

}  // namespace evtrack
