#include <evtrack/sim.hpp>

#include <evtrack/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace evtrack {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
double coverage(double signed_distance, double width) { return clamp01(0.5 - signed_distance / width); }
double lerp(double a, double b, double t) { return a + (b - a) * t; }

// Precomputed rotated-ellipse terms for anti-aliased rasterization.
struct EllipseShape {
  double cx = 0, cy = 0, cs = 1, sn = 0, ip = 0, iq = 0;

  explicit EllipseShape(const EllipseGeometry& g)
      : cx(g.center.x),
        cy(g.center.y),
        cs(std::cos(g.angle)),
        sn(std::sin(g.angle)),
        ip(1.0 / (g.semi_major * g.semi_major)),
        iq(1.0 / (g.semi_minor * g.semi_minor)) {}

  // Coverage across a linear ramp of the given width; the exact 0 or 1 is
  // returned without a square root when the pixel is clearly off the ramp.
  double coverage_of(double x, double y, double width) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = cs * dx + sn * dy;
    const double v = -sn * dx + cs * dy;
    const double f = u * u * ip + v * v * iq - 1.0;
    const double gu = 2.0 * u * ip;
    const double gv = 2.0 * v * iq;
    const double g2 = gu * gu + gv * gv;
    const double margin = 0.5 * width * (1.0 + 1e-6) + 1e-9;
    if (f * f > margin * margin * g2) return f < 0.0 ? 1.0 : 0.0;
    if (g2 == 0.0) return 1.0;
    return coverage(f / std::sqrt(g2), width);
  }

  double signed_distance(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = cs * dx + sn * dy;
    const double v = -sn * dx + cs * dy;
    const double f = u * u * ip + v * v * iq - 1.0;
    const double gu = 2.0 * u * ip;
    const double gv = 2.0 * v * iq;
    const double grad = std::sqrt(gu * gu + gv * gv);
    if (grad == 0.0) return -std::numeric_limits<double>::infinity();
    return f / grad;
  }
};

struct Shapes {
  EllipseShape pupil;
  EllipseShape iris;
  CircleParams glint;
  ParabolaParams lid;
  double lash_half;
  double lash_spacing;
  double edge;
};

Shapes make_shapes(const SceneConfig& scene, const EyeGeometry& geo) {
  return {EllipseShape(geo.pupil), EllipseShape(geo.iris), geo.glint, geo.eyelid, 0.5 * scene.lash_size,
          scene.lash_spacing, scene.edge_width};
}

// Upper bound on how far any boundary point moves between two poses of an ellipse.
double boundary_shift(const EllipseGeometry& a, const EllipseGeometry& b) {
  double turn = std::fmod(std::abs(a.angle - b.angle), kPi);
  turn = std::min(turn, kPi - turn);
  return std::hypot(a.center.x - b.center.x, a.center.y - b.center.y) +
         std::max(std::abs(a.semi_major - b.semi_major), std::abs(a.semi_minor - b.semi_minor)) +
         std::max(a.semi_major - a.semi_minor, b.semi_major - b.semi_minor) * turn;
}

double margin_row(const ParabolaParams& p, double col) { return (p.a * col + p.g) * col + p.d; }

double box_overlap(double lo_a, double hi_a, double lo_b, double hi_b) {
  return std::max(0.0, std::min(hi_a, hi_b) - std::max(lo_a, lo_b));
}

struct Coverage {
  double iris = 0, pupil = 0, glint = 0;
  friend bool operator==(const Coverage&, const Coverage&) = default;
};

double glint_coverage(const CircleParams& g, double x, double y, double edge) {
  const double dx = x - g.cx;
  const double dy = y - g.cy;
  const double d2 = dx * dx + dy * dy;
  const double inner = g.r - 0.5 * edge - 1e-6;
  const double outer = g.r + 0.5 * edge + 1e-6;
  if (d2 > outer * outer) return 0.0;
  if (inner > 0.0 && d2 < inner * inner) return 1.0;
  return coverage(std::hypot(dx, dy) - g.r, edge);
}

Coverage eye_coverage(const Shapes& s, double x, double y) {
  return {s.iris.coverage_of(x, y, s.edge), s.pupil.coverage_of(x, y, s.edge), glint_coverage(s.glint, x, y, s.edge)};
}

struct LidCoverage {
  double lid = 0, lash = 0;
};

LidCoverage lid_coverage(const Shapes& s, int xi, int yi) {
  const double x = xi;
  const double y = yi;
  const double m = margin_row(s.lid, x);
  const double slope = 2.0 * s.lid.a * x + s.lid.g;
  LidCoverage c;
  c.lid = coverage((y - m) / std::sqrt(1.0 + slope * slope), s.edge);

  const long k = std::lround(x / s.lash_spacing);
  double lash = 0.0;
  for (long j = k - 1; j <= k + 1; ++j) {
    const double lx = static_cast<double>(j) * s.lash_spacing;
    const double ly = margin_row(s.lid, lx);
    lash += box_overlap(x - 0.5, x + 0.5, lx - s.lash_half, lx + s.lash_half) *
            box_overlap(y - 0.5, y + 0.5, ly - s.lash_half, ly + s.lash_half);
  }
  c.lash = clamp01(lash);
  return c;
}

double intensity(const SceneConfig& scene, const Coverage& c, const LidCoverage& l) {
  double v = scene.sclera_intensity;
  v = lerp(v, scene.iris_intensity, c.iris);
  v = lerp(v, scene.pupil_intensity, c.pupil);
  v = lerp(v, scene.glint_intensity, c.glint);
  v = lerp(v, scene.eyelid_intensity, l.lid);
  return lerp(v, scene.lash_intensity, l.lash);
}

double intensity(const SceneConfig& scene, const Shapes& s, int xi, int yi) {
  return intensity(scene, eye_coverage(s, xi, yi), lid_coverage(s, xi, yi));
}

constexpr std::uint8_t kPupilBand = 1, kIrisBand = 2, kGlintBand = 4, kLidBand = 8;

// Pixels whose anti-aliased value can differ from the fully inside or
// fully outside value: the ring between the ellipse shrunk and grown by pad.
class BandCollector {
 public:
  explicit BandCollector(SensorSize sensor)
      : sensor_(sensor),
        stamps_(static_cast<std::size_t>(sensor.width) * sensor.height, 0),
        masks_(stamps_.size(), 0) {}

  void begin() {
    ++stamp_;
    pixels_.clear();
  }

  void add(int x, int y, std::uint8_t bit) {
    if (x < 0 || y < 0 || x >= sensor_.width || y >= sensor_.height) return;
    const std::size_t i = static_cast<std::size_t>(y) * sensor_.width + x;
    if (stamps_[i] == stamp_) {
      masks_[i] |= bit;
      return;
    }
    stamps_[i] = stamp_;
    masks_[i] = bit;
    pixels_.push_back(static_cast<std::uint32_t>(i));
  }

  void add_span(int x0, int x1, int y, std::uint8_t bit) {
    if (y < 0 || y >= sensor_.height) return;
    x0 = std::max(x0, 0);
    x1 = std::min(x1, sensor_.width - 1);
    const std::size_t row = static_cast<std::size_t>(y) * sensor_.width;
    for (std::size_t i = row + x0; i <= row + x1 && x0 <= x1; ++i) {
      if (stamps_[i] == stamp_) {
        masks_[i] |= bit;
      } else {
        stamps_[i] = stamp_;
        masks_[i] = bit;
        pixels_.push_back(static_cast<std::uint32_t>(i));
      }
    }
  }

  void add_ellipse(const EllipseGeometry& g, double pad, std::uint8_t bit) {
    const double po = g.semi_major + pad;
    const double qo = g.semi_minor + pad;
    const double pi = std::max(g.semi_major - pad, 0.0);
    const double qi = std::max(g.semi_minor - pad, 0.0);
    const double cs = std::cos(g.angle);
    const double sn = std::sin(g.angle);
    const double ext = std::sqrt(po * po * sn * sn + qo * qo * cs * cs);
    const int y0 = std::max(0, static_cast<int>(std::floor(g.center.y - ext)));
    const int y1 = std::min(sensor_.height - 1, static_cast<int>(std::ceil(g.center.y + ext)));
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - g.center.y;
      double lo = 0, hi = 0;
      if (!row_interval(po, qo, cs, sn, dy, lo, hi)) continue;
      const int xo0 = static_cast<int>(std::ceil(g.center.x + lo));
      const int xo1 = static_cast<int>(std::floor(g.center.x + hi));
      double ilo = 0, ihi = 0;
      if (pi > 0.0 && qi > 0.0 && row_interval(pi, qi, cs, sn, dy, ilo, ihi)) {
        const int xi0 = static_cast<int>(std::ceil(g.center.x + ilo));
        const int xi1 = static_cast<int>(std::floor(g.center.x + ihi));
        add_span(xo0, std::min(xi0 - 1, xo1), y, bit);
        add_span(std::max(xi1 + 1, xo0), xo1, y, bit);
      } else {
        add_span(xo0, xo1, y, bit);
      }
    }
  }

  void add_eyelid(const ParabolaParams& lid, double lash_half, double edge_pad) {
    for (int x = 0; x < sensor_.width; ++x) {
      const double m = margin_row(lid, x);
      const double slope = 2.0 * lid.a * x + lid.g;
      const double half = (std::max(lash_half, edge_pad) + 2.0) * std::sqrt(1.0 + slope * slope) + 1.0;
      const int y0 = static_cast<int>(std::floor(m - half));
      const int y1 = static_cast<int>(std::ceil(m + half));
      for (int y = std::max(y0, 0); y <= std::min(y1, sensor_.height - 1); ++y) add(x, y, kLidBand);
    }
  }

  const std::vector<std::uint32_t>& pixels() const { return pixels_; }
  std::uint8_t mask(std::uint32_t i) const { return masks_[i]; }

 private:
  static bool row_interval(double p, double q, double cs, double sn, double dy, double& lo, double& hi) {
    const double ip = 1.0 / (p * p);
    const double iq = 1.0 / (q * q);
    const double qa = cs * cs * ip + sn * sn * iq;
    const double qb = 2.0 * dy * cs * sn * (ip - iq);
    const double qc = dy * dy * (sn * sn * ip + cs * cs * iq) - 1.0;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return false;
    const double r = std::sqrt(disc);
    lo = (-qb - r) / (2.0 * qa);
    hi = (-qb + r) / (2.0 * qa);
    return true;
  }

  SensorSize sensor_;
  std::vector<std::uint32_t> stamps_;
  std::vector<std::uint8_t> masks_;
  std::uint32_t stamp_ = 0;
  std::vector<std::uint32_t> pixels_;
};

void check_pupil_inside(const SceneConfig& scene, const EllipseGeometry& g) {
  const double r = g.semi_major;
  if (g.center.x - r < 0.0 || g.center.y - r < 0.0 || g.center.x + r > scene.sensor.width - 1 ||
      g.center.y + r > scene.sensor.height - 1)
    throw Error(ErrorCode::out_of_bounds, "pupil leaves the sensor");
}

}  // namespace

void SceneConfig::validate() const {
  if (sensor.width <= 0 || sensor.height <= 0) throw Error(ErrorCode::config, "sensor dimensions must be positive");
  if (!(pupil_radius > 0.0 && iris_radius > pupil_radius))
    throw Error(ErrorCode::config, "need 0 < pupil_radius < iris_radius");
  if (!(eyeball_radius > 0.0)) throw Error(ErrorCode::config, "eyeball_radius must be positive");
  if (!(pupil_intensity > 0.0 && pupil_intensity < iris_intensity && iris_intensity < sclera_intensity &&
        sclera_intensity < glint_intensity && glint_intensity <= 255.0))
    throw Error(ErrorCode::config, "intensities must satisfy 0 < pupil < iris < sclera < glint <= 255");
  if (!(eyelid_intensity > 0.0 && lash_intensity > 0.0))
    throw Error(ErrorCode::config, "eyelid intensities must be positive");
  if (!(contrast_threshold > 0.0)) throw Error(ErrorCode::config, "contrast_threshold must be positive");
  if (!(frame_rate > 0.0)) throw Error(ErrorCode::config, "frame_rate must be positive");
  if (!(sample_rate >= 100000.0)) throw Error(ErrorCode::config, "sample_rate must be at least 100 kHz");
  if (!(event_jitter_us >= 0.0) || !(noise_rate >= 0.0))
    throw Error(ErrorCode::config, "jitter and noise rate must be non-negative");
  if (!(lash_spacing > lash_size && lash_size >= 0.0)) throw Error(ErrorCode::config, "lashes must not overlap");
  if (!(glint_radius > 0.0)) throw Error(ErrorCode::config, "glint_radius must be positive");
  if (!(edge_width > 0.0)) throw Error(ErrorCode::config, "edge_width must be positive");
  if (!(screen.distance > 0.0)) throw Error(ErrorCode::config, "screen distance must be positive");
}

const char* to_string(SegmentKind k) noexcept {
  switch (k) {
    case SegmentKind::fixation: return "fixation";
    case SegmentKind::saccade: return "saccade";
    case SegmentKind::smooth_pursuit: return "pursuit";
    case SegmentKind::blink: return "blink";
  }
  return "?";
}

SegmentKind segment_kind_from_string(const std::string& s) {
  if (s == "fixation") return SegmentKind::fixation;
  if (s == "saccade") return SegmentKind::saccade;
  if (s == "pursuit") return SegmentKind::smooth_pursuit;
  if (s == "blink") return SegmentKind::blink;
  throw Error(ErrorCode::config, "unknown segment kind: " + s);
}

double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  const double t3 = tau * tau * tau;
  return t3 * (10.0 + tau * (-15.0 + 6.0 * tau));
}

Point screen_to_signed_angles(const ScreenGeometry& screen, Point p) {
  return {std::atan((p.x - screen.cx) / screen.distance), std::atan((p.y - screen.cy) / screen.distance)};
}

Point signed_angles_to_screen(const ScreenGeometry& screen, Point a) {
  return {screen.cx + screen.distance * std::tan(a.x), screen.cy + screen.distance * std::tan(a.y)};
}

Trajectory::Trajectory(const ScreenGeometry& screen, Point start_gaze, double t_start_us)
    : screen_(screen), gaze_(start_gaze), t_start_(t_start_us) {}

Trajectory& Trajectory::fixate(double duration_ms, int target_index) {
  if (!(duration_ms > 0.0)) throw Error(ErrorCode::config, "segment duration must be positive");
  Segment s;
  s.kind = SegmentKind::fixation;
  s.t_start = end();
  s.t_end = s.t_start + duration_ms * 1000.0;
  s.from = s.to = gaze_;
  s.target_index = target_index;
  segments_.push_back(s);
  return *this;
}

Trajectory& Trajectory::saccade_to(Point target, double peak_velocity_deg_s) {
  if (!(peak_velocity_deg_s > 0.0)) throw Error(ErrorCode::config, "peak velocity must be positive");
  const Point a0 = screen_to_signed_angles(screen_, gaze_);
  const Point a1 = screen_to_signed_angles(screen_, target);
  const double amplitude_deg = norm(a1 - a0) / kDeg;
  if (amplitude_deg == 0.0) return *this;
  return saccade_to_in(target, 1.875 * amplitude_deg / peak_velocity_deg_s * 1000.0);
}

Trajectory& Trajectory::saccade_to_in(Point target, double duration_ms) {
  if (!(duration_ms > 0.0)) throw Error(ErrorCode::config, "segment duration must be positive");
  Segment s;
  s.kind = SegmentKind::saccade;
  s.t_start = end();
  s.t_end = s.t_start + duration_ms * 1000.0;
  s.from = gaze_;
  s.to = target;
  segments_.push_back(s);
  gaze_ = target;
  return *this;
}

Trajectory& Trajectory::pursue_square(double half_size_px, double period_ms, int laps) {
  if (!(half_size_px > 0.0) || !(period_ms > 0.0) || laps < 1)
    throw Error(ErrorCode::config, "pursuit needs positive size, period and laps");
  Segment s;
  s.kind = SegmentKind::smooth_pursuit;
  s.t_start = end();
  s.t_end = s.t_start + period_ms * 1000.0 * laps;
  s.from = s.to = gaze_;
  s.half_size = half_size_px;
  s.period = period_ms * 1000.0;
  segments_.push_back(s);
  return *this;
}

Trajectory& Trajectory::blink(double duration_ms, double depth_px) {
  if (!(duration_ms > 0.0) || !(depth_px > 0.0))
    throw Error(ErrorCode::config, "blink needs positive duration and depth");
  Segment s;
  s.kind = SegmentKind::blink;
  s.t_start = end();
  s.t_end = s.t_start + duration_ms * 1000.0;
  s.from = s.to = gaze_;
  s.depth = depth_px;
  segments_.push_back(s);
  return *this;
}

const Segment& Trajectory::segment_at(double t) const {
  if (segments_.empty() || t < t_start_ || t > end())
    throw Error(ErrorCode::out_of_span, "time lies outside the trajectory");
  const auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double v, const Segment& s) { return v < s.t_end; });
  return it == segments_.end() ? segments_.back() : *it;
}

EyeState Trajectory::state_at(double t) const {
  const Segment& s = segment_at(t);
  const double tau = (t - s.t_start) / (s.t_end - s.t_start);
  EyeState st;
  switch (s.kind) {
    case SegmentKind::fixation:
      st.gaze = s.from;
      break;
    case SegmentKind::saccade: {
      const Point a0 = screen_to_signed_angles(screen_, s.from);
      const Point a1 = screen_to_signed_angles(screen_, s.to);
      st.gaze = signed_angles_to_screen(screen_, a0 + min_jerk(tau) * (a1 - a0));
      break;
    }
    case SegmentKind::smooth_pursuit: {
      // Square lap starting at the top-left corner: right, down, left, up.
      const double lap = std::fmod(t - s.t_start, s.period) / s.period * 4.0;
      const double side = 2.0 * s.half_size;
      const int leg = std::min(static_cast<int>(lap), 3);
      const double f = (lap - leg) * side;
      Point off;
      switch (leg) {
        case 0: off = {f, 0.0}; break;
        case 1: off = {side, f}; break;
        case 2: off = {side - f, side}; break;
        default: off = {0.0, side - f}; break;
      }
      st.gaze = s.from + off;
      break;
    }
    case SegmentKind::blink: {
      st.gaze = s.from;
      const double sn = std::sin(kPi * std::clamp(tau, 0.0, 1.0));
      st.eyelid_drop = s.depth * sn * sn;
      break;
    }
  }
  return st;
}

EyeGeometry eye_geometry(const SceneConfig& scene, const EyeState& state) {
  const double gx = state.gaze.x - scene.screen.cx;
  const double gy = state.gaze.y - scene.screen.cy;
  const double n = std::sqrt(gx * gx + gy * gy + scene.screen.distance * scene.screen.distance);
  const Point center = scene.eye_center + scene.eyeball_radius * Point{gx / n, gy / n};
  const double squash = scene.screen.distance / n;
  // The pupil disk foreshortens along the gaze direction.
  const double angle = (gx == 0.0 && gy == 0.0) ? 0.0 : std::atan2(gy, gx) + 0.5 * kPi;

  EyeGeometry geo;
  geo.pupil = {center, scene.pupil_radius, scene.pupil_radius * squash, angle};
  geo.iris = {center, scene.iris_radius, scene.iris_radius * squash, angle};
  geo.glint = {center.x + scene.glint_offset.x, center.y + scene.glint_offset.y, scene.glint_radius};
  geo.eyelid = scene.eyelid;
  geo.eyelid.d += state.eyelid_drop;
  return geo;
}

double scene_intensity(const SceneConfig& scene, const EyeGeometry& geo, int x, int y) {
  return intensity(scene, make_shapes(scene, geo), x, y);
}

Frame render_frame(const SceneConfig& scene, const EyeState& state, Timestamp t) {
  scene.validate();
  const EyeGeometry geo = eye_geometry(scene, state);
  check_pupil_inside(scene, geo.pupil);
  const Shapes shapes = make_shapes(scene, geo);
  Frame frame(t, scene.sensor.width, scene.sensor.height);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x)
      frame.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(intensity(scene, shapes, x, y)), 0L, 255L));
  return frame;
}

std::vector<Event> generate_events(const SceneConfig& scene, const Trajectory& trajectory, double t0, double t1,
                                   std::uint64_t seed) {
  scene.validate();
  if (!(t1 > t0)) throw Error(ErrorCode::config, "event window must satisfy t1 > t0");
  trajectory.segment_at(t0);
  trajectory.segment_at(t1);

  const int w = scene.sensor.width;
  const int h = scene.sensor.height;
  const double c = scene.contrast_threshold;
  const double dt = 1e6 / scene.sample_rate;

  struct Raw {
    double t;
    std::uint32_t pixel;
    std::int8_t polarity;
  };
  std::vector<Raw> raw;

  EyeState prev_state = trajectory.state_at(t0);
  EyeGeometry geo = eye_geometry(scene, prev_state);
  check_pupil_inside(scene, geo.pupil);
  std::vector<double> level(static_cast<std::size_t>(w) * h);
  std::vector<Coverage> covered(level.size());
  std::vector<LidCoverage> lidded(level.size());
  std::vector<double> reference;
  {
    const Shapes shapes = make_shapes(scene, geo);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        covered[i] = eye_coverage(shapes, x, y);
        lidded[i] = lid_coverage(shapes, x, y);
        level[i] = std::log(intensity(scene, covered[i], lidded[i]));
      }
    reference = level;
  }

  BandCollector band(scene.sensor);
  const double ramp = 0.5 * scene.edge_width + 0.5;
  const auto steps = static_cast<long long>(std::ceil((t1 - t0) / dt));
  double t_prev = t0;
  for (long long k = 1; k <= steps; ++k) {
    const double t = std::min(t0 + static_cast<double>(k) * dt, t1);
    const EyeState state = trajectory.state_at(t);
    if (state == prev_state) {
      t_prev = t;
      continue;
    }
    const EyeGeometry prev_geo = geo;
    geo = eye_geometry(scene, state);
    check_pupil_inside(scene, geo.pupil);
    const Shapes shapes = make_shapes(scene, geo);

    band.begin();
    if (state.gaze != prev_state.gaze) {
      const double shift = std::max(boundary_shift(prev_geo.pupil, geo.pupil), boundary_shift(prev_geo.iris, geo.iris));
      band.add_ellipse(geo.pupil, ramp + shift, kPupilBand);
      band.add_ellipse(geo.iris, ramp + shift, kIrisBand);
      band.add_ellipse({{geo.glint.cx, geo.glint.cy}, geo.glint.r, geo.glint.r, 0.0}, ramp + shift, kGlintBand);
    }
    const bool lid_moved = state.eyelid_drop != prev_state.eyelid_drop;
    if (lid_moved) band.add_eyelid(geo.eyelid, shapes.lash_half, 0.5 * scene.edge_width);

    for (const std::uint32_t i : band.pixels()) {
      const int x = static_cast<int>(i % static_cast<std::uint32_t>(w));
      const int y = static_cast<int>(i / static_cast<std::uint32_t>(w));
      const std::uint8_t mask = band.mask(i);
      Coverage cov = covered[i];
      if (mask & kIrisBand) cov.iris = shapes.iris.coverage_of(x, y, shapes.edge);
      if (mask & kPupilBand) cov.pupil = shapes.pupil.coverage_of(x, y, shapes.edge);
      if (mask & kGlintBand) cov.glint = glint_coverage(shapes.glint, x, y, shapes.edge);
      if (!lid_moved && cov == covered[i]) continue;
      covered[i] = cov;
      if (lid_moved) lidded[i] = lid_coverage(shapes, x, y);
      const double before = level[i];
      const double now = std::log(intensity(scene, cov, lidded[i]));
      level[i] = now;
      if (now == before) continue;
      double& ref = reference[i];
      while (now - ref >= c) {
        ref += c;
        raw.push_back({t_prev + (t - t_prev) * (ref - before) / (now - before), i, std::int8_t{1}});
      }
      while (now - ref <= -c) {
        ref -= c;
        raw.push_back({t_prev + (t - t_prev) * (ref - before) / (now - before), i, std::int8_t{-1}});
      }
    }
    prev_state = state;
    t_prev = t;
  }

  std::mt19937_64 rng(seed);
  if (scene.event_jitter_us > 0.0) {
    std::uniform_real_distribution<double> jitter(-scene.event_jitter_us, scene.event_jitter_us);
    for (Raw& r : raw) r.t = std::clamp(r.t + jitter(rng), t0, t1);
  }
  if (scene.noise_rate > 0.0) {
    std::poisson_distribution<long long> count(scene.noise_rate * (t1 - t0) / 1000.0);
    std::uniform_real_distribution<double> when(t0, t1);
    std::uniform_int_distribution<std::uint32_t> where(0, static_cast<std::uint32_t>(w * h - 1));
    std::bernoulli_distribution sign(0.5);
    for (long long n = count(rng); n > 0; --n)
      raw.push_back({when(rng), where(rng), sign(rng) ? std::int8_t{1} : std::int8_t{-1}});
  }

  std::vector<Event> events;
  events.reserve(raw.size());
  for (const Raw& r : raw) {
    Event e;
    e.t = static_cast<Timestamp>(std::llround(r.t));
    e.x = static_cast<std::uint16_t>(r.pixel % static_cast<std::uint32_t>(w));
    e.y = static_cast<std::uint16_t>(r.pixel / static_cast<std::uint32_t>(w));
    e.polarity = r.polarity;
    events.push_back(e);
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return events;
}

GroundTruth ground_truth(const SceneConfig& scene, const Trajectory& trajectory, Timestamp t) {
  const double tt = static_cast<double>(t);
  const Segment& seg = trajectory.segment_at(tt);
  const EyeState state = trajectory.state_at(tt);
  const EyeGeometry geo = eye_geometry(scene, state);
  GroundTruth gt;
  gt.t = t;
  gt.phase = seg.kind;
  gt.target_index = seg.kind == SegmentKind::fixation ? seg.target_index : -1;
  gt.ellipse = ellipse_from_geometry(geo.pupil);
  gt.center = geo.pupil.center;
  gt.screen = state.gaze;
  gt.angles = screen_to_angles(scene.screen, state.gaze);
  gt.eyelid_drop = state.eyelid_drop;
  return gt;
}

BinaryMask rasterize_ellipse(const EllipseParams& e, SensorSize sensor) {
  BinaryMask mask(sensor.width, sensor.height);
  if (!is_real_ellipse(e)) return mask;
  for (int y = 0; y < sensor.height; ++y)
    for (int x = 0; x < sensor.width; ++x)
      if (ellipse_contains(e, {static_cast<double>(x), static_cast<double>(y)})) mask.set(x, y, true);
  return mask;
}

double event_rate(const std::vector<Event>& events, double t0, double t1) {
  if (!(t1 > t0)) throw Error(ErrorCode::config, "rate window must satisfy t1 > t0");
  const auto n = std::count_if(events.begin(), events.end(), [&](const Event& e) {
    return static_cast<double>(e.t) >= t0 && static_cast<double>(e.t) <= t1;
  });
  return static_cast<double>(n) / ((t1 - t0) / 1000.0);
}

double calibrate_contrast_threshold(SceneConfig scene, const Trajectory& trajectory, double target_per_ms,
                                    std::uint64_t seed) {
  if (!(target_per_ms > 0.0)) throw Error(ErrorCode::config, "target rate must be positive");
  std::vector<const Segment*> saccades;
  for (const Segment& s : trajectory.segments())
    if (s.kind == SegmentKind::saccade) saccades.push_back(&s);
  if (saccades.empty()) throw Error(ErrorCode::empty_input, "trajectory has no saccades");

  auto rate = [&](double c) {
    scene.contrast_threshold = c;
    std::size_t n = 0;
    double ms = 0.0;
    for (const Segment* s : saccades) {
      n += generate_events(scene, trajectory, s->t_start, s->t_end, seed).size();
      ms += (s->t_end - s->t_start) / 1000.0;
    }
    return static_cast<double>(n) / ms;
  };

  // Rate falls monotonically as the threshold grows.
  double lo = 0.02;
  double hi = 3.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = std::sqrt(lo * hi);
    (rate(mid) > target_per_ms ? lo : hi) = mid;
    if (hi / lo < 1.0 + 1e-4) break;
  }
  return std::sqrt(lo * hi);
}

}  // namespace evtrack
