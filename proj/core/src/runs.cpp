#include <evtrack/runs.hpp>

#include <evtrack/error.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace evtrack {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

Point angles_deg_to_screen(const ScreenGeometry& screen, double h_deg, double v_deg) {
  return signed_angles_to_screen(screen, {h_deg * kDeg, v_deg * kDeg});
}

std::vector<const Segment*> saccade_segments(const Recording& rec) {
  if (rec.segments.empty()) throw Error(ErrorCode::empty_input, "recording has no trajectory segments");
  std::vector<const Segment*> out;
  for (const Segment& s : rec.segments)
    if (s.kind == SegmentKind::saccade) out.push_back(&s);
  if (out.empty()) throw Error(ErrorCode::empty_input, "recording has no saccades");
  return out;
}

std::vector<bool> blink_flags(std::span<const FrameTrace> trace, const BlinkConfig& config) {
  BlinkDetector detector(config);
  std::vector<bool> out;
  out.reserve(trace.size());
  for (const FrameTrace& f : trace) out.push_back(detector.observe(f.frame_eccentricity));
  return out;
}

}  // namespace

// ---- scenarios ----

Trajectory saccade_trajectory(const SceneConfig& scene, std::uint64_t seed, const SaccadeScenario& s) {
  if (s.saccades < 1 || !(s.min_amplitude_deg > 0.0) || s.max_amplitude_deg < s.min_amplitude_deg)
    throw Error(ErrorCode::config, "invalid saccade scenario");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(s.min_amplitude_deg, s.max_amplitude_deg);
  std::uniform_real_distribution<double> dir(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> dwell(s.min_fixation_ms, s.max_fixation_ms);

  // Fixations that will hold a blink, chosen up front.
  std::vector<bool> has_blink(static_cast<std::size_t>(s.saccades), false);
  {
    std::vector<int> idx(static_cast<std::size_t>(s.saccades));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < std::min(s.blinks, s.saccades); ++i) has_blink[static_cast<std::size_t>(idx[i])] = true;
  }

  const ScreenGeometry& screen = scene.screen;
  Trajectory traj(screen, {screen.cx, screen.cy});
  traj.fixate(s.blinks > 0 ? 1600.0 : s.max_fixation_ms);
  double h = 0.0;
  double v = 0.0;
  for (int k = 0; k < s.saccades; ++k) {
    double nh = h;
    double nv = v;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double a = amp(rng);
      const double d = dir(rng);
      nh = h + a * std::cos(d);
      nv = v + a * std::sin(d);
      if (std::abs(nh) <= s.max_horizontal_deg && std::abs(nv) <= s.max_vertical_deg) break;
    }
    if (std::abs(nh) > s.max_horizontal_deg || std::abs(nv) > s.max_vertical_deg)
      throw Error(ErrorCode::config, "saccade scenario box is too small for the amplitudes");
    h = nh;
    v = nv;
    traj.saccade_to(angles_deg_to_screen(screen, h, v), s.peak_velocity_deg_s);
    const double fix = dwell(rng);
    if (has_blink[static_cast<std::size_t>(k)]) {
      const double before = std::max(80.0, 0.5 * (fix - s.blink_ms));
      traj.fixate(before).blink(s.blink_ms, s.blink_depth_px).fixate(std::max(before, 200.0));
    } else {
      traj.fixate(fix);
    }
  }
  return traj;
}

Trajectory grid_trajectory(const SceneConfig& scene, const GridScenario& g) {
  if (g.columns < 2 || g.rows < 2) throw Error(ErrorCode::config, "grid needs at least 2x2 targets");
  auto target = [&](int i, int j) {
    const double h = -0.5 * g.width_deg + g.width_deg * i / (g.columns - 1);
    const double v = -0.5 * g.height_deg + g.height_deg * j / (g.rows - 1);
    return angles_deg_to_screen(scene.screen, h, v);
  };
  Trajectory traj(scene.screen, target(0, 0));
  for (int j = 0; j < g.rows; ++j) {
    for (int step = 0; step < g.columns; ++step) {
      const int i = j % 2 == 0 ? step : g.columns - 1 - step;
      const int index = j * g.columns + i;
      if (index > 0) traj.saccade_to(target(i, j), g.peak_velocity_deg_s);
      traj.fixate(g.fixation_ms, index);
    }
  }
  return traj;
}

Trajectory blink_trajectory(const SceneConfig& scene, const BlinkScenario& b) {
  Trajectory traj(scene.screen, {scene.screen.cx, scene.screen.cy});
  traj.fixate(b.lead_in_ms);
  for (int k = 0; k < b.blinks; ++k) traj.blink(b.blink_ms, b.blink_depth_px).fixate(b.gap_ms);
  return traj;
}

Trajectory pursuit_trajectory(const SceneConfig& scene, double half_size_px, double period_ms, int laps) {
  const Point corner{scene.screen.cx - half_size_px, scene.screen.cy - half_size_px};
  Trajectory traj(scene.screen, {scene.screen.cx, scene.screen.cy});
  traj.fixate(200.0).saccade_to(corner, 300.0).pursue_square(half_size_px, period_ms, laps).fixate(200.0);
  return traj;
}

Recording simulate_recording(const SceneConfig& scene, const Trajectory& trajectory, std::uint64_t seed,
                             bool with_events) {
  scene.validate();
  Recording rec;
  rec.sensor = scene.sensor;
  rec.segments = trajectory.segments();
  const double period = 1e6 / scene.frame_rate;
  for (long k = 0;; ++k) {
    const double t = trajectory.start() + static_cast<double>(k) * period;
    if (t > trajectory.end()) break;
    const auto ts = static_cast<Timestamp>(std::llround(t));
    rec.frames.push_back(render_frame(scene, trajectory.state_at(static_cast<double>(ts)), ts));
    rec.truth.push_back(ground_truth(scene, trajectory, ts));
  }
  if (with_events) rec.events = generate_events(scene, trajectory, trajectory.start(), trajectory.end(), seed);
  return rec;
}

// ---- gaze map persistence ----

std::string encode_gaze_map(const GazeMap& map) {
  std::string out = "degree = " + std::to_string(map.degree) + "\n";
  out += "offset = " + fmt(map.transform.offset.x) + " " + fmt(map.transform.offset.y) + "\n";
  out += "scale = " + fmt(map.transform.scale.x) + " " + fmt(map.transform.scale.y) + "\n";
  for (auto [name, coeffs] : {std::pair{"coeffs_x", &map.coeffs_x}, std::pair{"coeffs_y", &map.coeffs_y}}) {
    out += name;
    out += " =";
    for (double c : *coeffs) out += " " + fmt(c);
    out += "\n";
  }
  return out;
}

GazeMap decode_gaze_map(std::string_view text) {
  std::map<std::string, std::vector<double>> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), [](char c) { return c == ' ' || c == '\t'; }), key.end());
    std::istringstream vals(line.substr(eq + 1));
    std::vector<double> v;
    std::string tok;
    while (vals >> tok) {
      double d = 0;
      const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size())
        throw Error(ErrorCode::config, "bad number in gaze map: " + tok);
      v.push_back(d);
    }
    kv[key] = std::move(v);
  }
  for (const char* k : {"degree", "offset", "scale", "coeffs_x", "coeffs_y"})
    if (!kv.count(k)) throw Error(ErrorCode::config, std::string("gaze map lacks ") + k);
  GazeMap m;
  if (kv["degree"].size() != 1 || kv["offset"].size() != 2 || kv["scale"].size() != 2)
    throw Error(ErrorCode::config, "malformed gaze map header");
  m.degree = static_cast<int>(kv["degree"][0]);
  m.transform.offset = {kv["offset"][0], kv["offset"][1]};
  m.transform.scale = {kv["scale"][0], kv["scale"][1]};
  m.coeffs_x = kv["coeffs_x"];
  m.coeffs_y = kv["coeffs_y"];
  if (m.degree < 1 || m.degree > 8) throw Error(ErrorCode::config, "gaze map degree must lie in [1, 8]");
  const auto n = static_cast<std::size_t>(monomial_count(m.degree));
  if (m.coeffs_x.size() != n || m.coeffs_y.size() != n)
    throw Error(ErrorCode::config, "gaze map coefficient count does not match its degree");
  return m;
}

void save_gaze_map(const std::filesystem::path& path, const GazeMap& map) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot create " + path.string());
  out << encode_gaze_map(map);
}

GazeMap load_gaze_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_gaze_map(ss.str());
}

// ---- tracking ----

std::string track_csv_header() {
  return "t,source,center_x,center_y,a,h,b,g,f,eccentricity,blink,gaze_x,gaze_y\n";
}

std::string format_track_row(const TrackRow& row) {
  std::string out = std::to_string(row.t);
  out += ',';
  out += to_string(row.source);
  if (row.model.ellipse_valid) {
    const Point c = ellipse_center(row.model.ellipse);
    const EllipseParams& e = row.model.ellipse;
    for (double v : {c.x, c.y, e.a, e.h, e.b, e.g, e.f, row.eccentricity}) out += ',' + fmt(v);
  } else {
    out += ",,,,,,,,";
  }
  out += row.blink ? ",1" : ",0";
  if (row.gaze) {
    out += ',' + fmt(row.gaze->x) + ',' + fmt(row.gaze->y);
  } else {
    out += ",,";
  }
  out += '\n';
  return out;
}

TrackingPipeline::TrackingPipeline(SensorSize sensor, const RunConfig& config, std::optional<GazeMap> map)
    : tracker_(sensor, config.tracker), blink_(config.blink), map_(std::move(map)) {}

TrackRow TrackingPipeline::make_row(const Emission& em) {
  TrackRow row;
  row.t = em.t;
  row.source = em.source;
  row.model = em.model;
  row.blink = blink_flag_;
  row.eccentricity = std::numeric_limits<double>::quiet_NaN();
  if (em.model.ellipse_valid) {
    row.eccentricity = eccentricity(em.model.ellipse);
    if (map_) row.gaze = map_gaze(*map_, ellipse_center(em.model.ellipse));
  }
  published_.publish(em.model);
  return row;
}

std::optional<TrackRow> TrackingPipeline::on_frame(const Frame& frame) {
  const auto em = tracker_.on_frame(frame);
  if (!em) return std::nullopt;
  blink_flag_ = blink_.observe(em->frame_eccentricity);
  return make_row(*em);
}

std::optional<TrackRow> TrackingPipeline::on_event(const Event& event) {
  const auto em = tracker_.on_event(event);
  if (!em) return std::nullopt;
  return make_row(*em);
}

std::optional<TrackRow> TrackingPipeline::process(const StreamItem& item) {
  if (const Frame* f = std::get_if<Frame>(&item)) return on_frame(*f);
  return on_event(std::get<Event>(item));
}

TrackSummary run_track(const std::filesystem::path& recording, const RunConfig& config,
                       const std::optional<GazeMap>& map, std::ostream& csv, bool threaded,
                       std::size_t queue_capacity) {
  config.validate();
  RecordingReader reader(recording);
  TrackingPipeline pipeline(reader.sensor(), config, map);
  TrackSummary summary;
  csv << track_csv_header();
  auto consume = [&](const StreamItem& item) {
    if (auto row = pipeline.process(item)) {
      csv << format_track_row(*row);
      ++summary.rows;
    }
  };

  if (!threaded) {
    while (auto item = reader.next()) consume(*item);
  } else {
    SpscQueue<std::optional<StreamItem>> queue(queue_capacity);
    std::atomic<bool> stop{false};
    std::exception_ptr producer_error;
    std::thread producer([&] {
      try {
        for (;;) {
          std::optional<StreamItem> item = reader.next();
          const bool done = !item;
          std::optional<StreamItem> slot = std::move(item);
          while (!queue.try_push(std::move(slot))) {
            if (stop.load(std::memory_order_relaxed)) return;
            std::this_thread::yield();
          }
          if (done) return;
        }
      } catch (...) {
        producer_error = std::current_exception();
        while (!queue.try_push(std::nullopt) && !stop.load(std::memory_order_relaxed)) std::this_thread::yield();
      }
    });
    try {
      for (;;) {
        std::optional<StreamItem> item = queue.pop();
        if (!item) break;
        consume(*item);
      }
    } catch (...) {
      stop.store(true);
      producer.join();
      throw;
    }
    producer.join();
    if (producer_error) std::rethrow_exception(producer_error);
  }
  summary.stats = pipeline.tracker().stats();
  return summary;
}

TrackSummary run_track(const Recording& rec, const RunConfig& config, const std::optional<GazeMap>& map,
                       std::ostream& csv) {
  config.validate();
  TrackingPipeline pipeline(rec.sensor, config, map);
  TrackSummary summary;
  csv << track_csv_header();
  std::size_t fi = 0;
  std::size_t ei = 0;
  while (fi < rec.frames.size() || ei < rec.events.size()) {
    std::optional<TrackRow> row;
    if (fi < rec.frames.size() && (ei >= rec.events.size() || rec.frames[fi].t <= rec.events[ei].t)) {
      row = pipeline.on_frame(rec.frames[fi++]);
    } else {
      row = pipeline.on_event(rec.events[ei++]);
    }
    if (row) {
      csv << format_track_row(*row);
      ++summary.rows;
    }
  }
  summary.stats = pipeline.tracker().stats();
  return summary;
}

// ---- saccade-window statistics ----

SaccadeWindowStats saccade_window_stats(const Recording& rec, const TrackerConfig& config) {
  const auto saccades = saccade_segments(rec);
  auto window_of = [&](Timestamp t) -> int {
    const double tt = static_cast<double>(t);
    for (std::size_t i = 0; i < saccades.size(); ++i)
      if (tt >= saccades[i]->t_start && tt <= saccades[i]->t_end) return static_cast<int>(i);
    return -1;
  };

  SaccadeWindowStats out;
  for (const Segment* s : saccades) out.saccade_ms += (s->t_end - s->t_start) / 1000.0;
  for (const Event& e : rec.events)
    if (window_of(e.t) >= 0) ++out.events;

  // Glint and eyelid updates re-emit an unchanged pupil; only pupil changes
  // extend the track.
  std::vector<std::vector<Point>> tracks(saccades.size());
  std::optional<EllipseParams> last;
  for (const Emission& em : process_stream(rec.sensor, rec.frames, rec.events, config)) {
    const bool changed = em.model.ellipse_valid && (!last || !(*last == em.model.ellipse));
    if (em.model.ellipse_valid) last = em.model.ellipse;
    const int w = window_of(em.t);
    if (w < 0) continue;
    if (em.source == FitSource::events) ++out.event_emissions;
    if (changed) tracks[static_cast<std::size_t>(w)].push_back(ellipse_center(em.model.ellipse));
  }
  double sum = 0.0;
  std::size_t steps = 0;
  for (const auto& track : tracks) {
    if (track.size() < 2) continue;
    sum += smoothness(track) * static_cast<double>(track.size() - 1);
    steps += track.size() - 1;
  }
  out.smoothness = steps > 0 ? sum / static_cast<double>(steps) : 0.0;
  return out;
}

std::vector<SweepRow> run_sweep(const Recording& rec, const RunConfig& config, const std::vector<int>& ns) {
  if (ns.empty()) throw Error(ErrorCode::empty_input, "sweep needs at least one N");
  std::vector<SweepRow> rows;
  for (int n : ns) {
    TrackerConfig tc = config.tracker;
    tc.fit.events_per_fit = n;
    tc.validate();
    rows.push_back({n, saccade_window_stats(rec, tc)});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "events_per_fit,smoothness,event_emissions,emissions_per_ms,events_per_ms\n";
  for (const SweepRow& r : rows)
    out << r.events_per_fit << ',' << fmt(r.stats.smoothness) << ',' << r.stats.event_emissions << ','
        << fmt(r.stats.emission_rate_per_ms()) << ',' << fmt(r.stats.event_rate_per_ms()) << '\n';
}

// ---- evaluation ----

std::vector<FrameScore> score_frames(const Recording& rec, std::span<const FrameTrace> trace,
                                     const BlinkConfig& blink) {
  if (!rec.has_truth()) throw Error(ErrorCode::empty_input, "scoring needs ground truth");
  if (trace.size() != rec.frames.size()) throw Error(ErrorCode::dimension_mismatch, "trace does not match the frames");
  const auto flags = blink_flags(trace, blink);
  std::vector<FrameScore> out;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    FrameScore s;
    s.t = trace[i].t;
    s.phase = rec.truth[i].phase;
    s.blink = flags[i];
    const EyeModel& m = trace[i].before;
    if (m.ellipse_valid) {
      s.iou = iou(rasterize_ellipse(m.ellipse, rec.sensor), rasterize_ellipse(rec.truth[i].ellipse, rec.sensor));
      s.center_error = center_error(m.ellipse, rec.truth[i].ellipse);
    } else {
      s.iou = 0.0;
      s.center_error = std::numeric_limits<double>::infinity();
    }
    out.push_back(s);
  }
  return out;
}

std::vector<CalibrationPair> fixation_pairs(const Recording& rec, std::span<const FrameTrace> trace,
                                            const BlinkConfig& blink, int parity) {
  if (!rec.has_truth()) throw Error(ErrorCode::empty_input, "calibration pairs need ground truth");
  const auto flags = blink_flags(trace, blink);
  std::vector<CalibrationPair> out;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const GroundTruth& g = rec.truth[i];
    const GroundTruth& prev = rec.truth[i - 1];
    if (g.phase != SegmentKind::fixation || g.target_index < 0) continue;
    if (prev.phase != SegmentKind::fixation || prev.target_index != g.target_index) continue;
    if (parity >= 0 && g.target_index % 2 != parity) continue;
    if (flags[i] || flags[i - 1] || !trace[i].after.ellipse_valid) continue;
    out.push_back({ellipse_center(trace[i].after.ellipse), g.screen});
  }
  return out;
}

GazeEvaluation evaluate_gaze(const Recording& rec, std::span<const FrameTrace> trace, const RunConfig& config) {
  GazeEvaluation out;
  const ScreenGeometry& screen = config.scene.screen;
  for (int train : {0, 1}) {
    GazeFold fold;
    fold.name = train == 0 ? "even->odd" : "odd->even";
    const auto pairs = fixation_pairs(rec, trace, config.blink, train);
    fold.calibration_pairs = pairs.size();
    const GazeMap map = calibrate(pairs, config.gaze_degree);

    std::map<int, std::vector<GazeSample>> by_target;
    const auto flags = blink_flags(trace, config.blink);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      const GroundTruth& g = rec.truth[i];
      const GroundTruth& prev = rec.truth[i - 1];
      if (g.phase != SegmentKind::fixation || g.target_index < 0 || g.target_index % 2 == train) continue;
      if (prev.phase != SegmentKind::fixation || prev.target_index != g.target_index) continue;
      if (!trace[i].after.ellipse_valid) continue;
      GazeSample s;
      s.t = g.t;
      s.blink = flags[i] || flags[i - 1];
      s.estimate = screen_to_angles(screen, map_gaze(map, ellipse_center(trace[i].after.ellipse)));
      s.truth = g.angles;
      fold.samples.push_back(s);
      by_target[g.target_index].push_back(s);
    }
    fold.accuracy = accuracy(fold.samples);
    double psum = 0.0;
    int groups = 0;
    for (const auto& [target, samples] : by_target) {
      const auto n = std::count_if(samples.begin(), samples.end(), [](const GazeSample& s) { return !s.blink; });
      if (n < 2) continue;
      psum += precision(samples);
      ++groups;
    }
    fold.precision = groups > 0 ? psum / groups : std::numeric_limits<double>::quiet_NaN();
    out.folds.push_back(std::move(fold));
  }
  out.accuracy = 0.5 * (out.folds[0].accuracy + out.folds[1].accuracy);
  out.precision = 0.5 * (out.folds[0].precision + out.folds[1].precision);
  return out;
}

double EvaluationReport::fraction_good(bool exclude_blinks, double min_iou, double max_center_error) const {
  std::size_t total = 0;
  std::size_t good = 0;
  for (const FrameScore& f : frames) {
    if (exclude_blinks && f.blink) continue;
    ++total;
    if (f.iou >= min_iou && f.center_error <= max_center_error) ++good;
  }
  return total == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(total);
}

EvaluationReport run_evaluate(const Recording& rec, const RunConfig& config) {
  config.validate();
  if (!rec.has_truth()) throw Error(ErrorCode::empty_input, "evaluation needs ground truth");
  EvaluationReport report;
  const auto trace = trace_frames(rec, config.tracker);
  report.frames = score_frames(rec, trace, config.blink);
  report.ablation = frame_only_ablation(rec, trace);
  bool even = false;
  bool odd = false;
  for (const GroundTruth& g : rec.truth) {
    if (g.target_index < 0) continue;
    (g.target_index % 2 == 0 ? even : odd) = true;
  }
  if (even && odd) report.gaze = evaluate_gaze(rec, trace, config);
  return report;
}

std::string histogram_csv(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw Error(ErrorCode::config, "histogram needs bins >= 1 and hi > lo");
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double v : values) {
    if (!std::isfinite(v)) v = hi;
    const int b = std::clamp(static_cast<int>(std::floor((v - lo) / width)), 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::string out = "lo,hi,count\n";
  for (int b = 0; b < bins; ++b)
    out += fmt(lo + b * width) + "," + fmt(lo + (b + 1) * width) + "," +
           std::to_string(counts[static_cast<std::size_t>(b)]) + "\n";
  return out;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationSample>& samples) {
  out << "t,phase,d_frame,d_event,difference\n";
  for (const AblationSample& s : samples)
    out << s.t << ',' << to_string(s.phase) << ',' << fmt(s.d_frame) << ',' << fmt(s.d_event) << ','
        << fmt(s.difference()) << '\n';
}

std::string evaluation_summary(const EvaluationReport& report) {
  std::ostringstream out;
  std::size_t blinks = 0;
  for (const FrameScore& f : report.frames) blinks += f.blink ? 1 : 0;
  out << "frames scored: " << report.frames.size() << "\n";
  out << "blink-flagged frames: " << blinks << "\n";
  out << "fraction with IOU >= 0.8 and center error <= 3 px: " << fmt(report.fraction_good(false)) << "\n";
  out << "same, blink frames excluded: " << fmt(report.fraction_good(true)) << "\n";
  std::size_t sacc = 0;
  std::size_t positive = 0;
  for (const AblationSample& s : report.ablation) {
    if (s.phase != SegmentKind::saccade) continue;
    ++sacc;
    positive += s.difference() > 0.0 ? 1 : 0;
  }
  out << "ablation saccade frames: " << sacc << ", positive differences: " << positive << "\n";
  if (report.gaze) {
    for (const GazeFold& f : report.gaze->folds)
      out << "gaze " << f.name << ": pairs " << f.calibration_pairs << ", samples " << f.samples.size()
          << ", accuracy " << fmt(f.accuracy) << " deg, precision " << fmt(f.precision) << " deg\n";
    out << "gaze accuracy (role-swap mean): " << fmt(report.gaze->accuracy) << " deg\n";
    out << "gaze precision (role-swap mean): " << fmt(report.gaze->precision) << " deg\n";
  }
  return out.str();
}

void write_evaluation(const std::filesystem::path& dir, const EvaluationReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create directory " + dir.string());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot create " + (dir / name).string());
    return f;
  };
  {
    auto f = open("frames.csv");
    f << "t,phase,blink,iou,center_error\n";
    for (const FrameScore& s : report.frames)
      f << s.t << ',' << to_string(s.phase) << ',' << (s.blink ? 1 : 0) << ',' << fmt(s.iou) << ','
        << fmt(s.center_error) << '\n';
  }
  {
    auto f = open("ablation.csv");
    write_ablation_csv(f, report.ablation);
  }
  std::vector<double> ious;
  std::vector<double> errors;
  for (const FrameScore& s : report.frames) {
    ious.push_back(s.iou);
    errors.push_back(s.center_error);
  }
  std::vector<double> diffs;
  for (const AblationSample& s : report.ablation) diffs.push_back(s.difference());
  open("iou_hist.csv") << histogram_csv(ious, 0.0, 1.0, 20);
  open("center_error_hist.csv") << histogram_csv(errors, 0.0, 10.0, 20);
  open("ablation_hist.csv") << histogram_csv(diffs, -10.0, 10.0, 40);
  if (report.gaze) {
    auto f = open("gaze.csv");
    f << "fold,t,theta_est,phi_est,theta_true,phi_true,blink\n";
    for (const GazeFold& fold : report.gaze->folds)
      for (const GazeSample& s : fold.samples)
        f << fold.name << ',' << s.t << ',' << fmt(s.estimate.theta_deg) << ',' << fmt(s.estimate.phi_deg) << ','
          << fmt(s.truth.theta_deg) << ',' << fmt(s.truth.phi_deg) << ',' << (s.blink ? 1 : 0) << '\n';
  }
  open("summary.txt") << evaluation_summary(report);
}

// ---- throughput ----

BenchResult run_bench(const Recording& rec, const TrackerConfig& config, double min_seconds) {
  if (rec.events.empty()) throw Error(ErrorCode::empty_input, "benchmark needs events");
  using Clock = std::chrono::steady_clock;

  // One untimed pass extracts the frame candidates; timed passes replay them.
  std::vector<FrameCandidates> candidates(rec.frames.size());
  auto replay = [&](bool record) {
    Tracker tracker(rec.sensor, config);
    std::size_t ei = 0;
    for (std::size_t fi = 0; fi <= rec.frames.size(); ++fi) {
      const Timestamp limit = fi < rec.frames.size() ? rec.frames[fi].t : std::numeric_limits<Timestamp>::max();
      while (ei < rec.events.size() && rec.events[ei].t < limit) tracker.on_event(rec.events[ei++]);
      if (fi == rec.frames.size()) break;
      if (record) tracker.on_frame(rec.frames[fi], &candidates[fi]);
      else tracker.on_candidates(candidates[fi]);
    }
    return tracker.stats();
  };
  replay(true);

  BenchResult out;
  const auto start = Clock::now();
  do {
    const TrackerStats st = replay(false);
    out.events += st.events;
    out.gated += st.gated_pupil + st.gated_eyelid + st.gated_glint;
    out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  } while (out.seconds < min_seconds);
  return out;
}

}  // namespace evtrack
