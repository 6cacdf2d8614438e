#pragma once

// Reproducible runs over recordings: synthetic scenarios, tracking with CSV
// output, the events-per-fit sweep, evaluation against ground truth, the
// frame-only ablation and the throughput benchmark.

#include <evtrack/blink.hpp>
#include <evtrack/config.hpp>
#include <evtrack/gaze.hpp>
#include <evtrack/metrics.hpp>
#include <evtrack/recording.hpp>
#include <evtrack/sim.hpp>
#include <evtrack/stream.hpp>
#include <evtrack/tracker.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace evtrack {

// ---- scenarios ----

struct SaccadeScenario {
  int saccades = 10;
  double min_amplitude_deg = 5.0;
  double max_amplitude_deg = 15.0;
  double max_horizontal_deg = 16.0;  // targets stay inside this box
  double max_vertical_deg = 8.0;
  double min_fixation_ms = 150.0;
  double max_fixation_ms = 300.0;
  double peak_velocity_deg_s = 300.0;
  int blinks = 0;                    // blinks placed in randomly chosen fixations
  double blink_ms = 120.0;
  double blink_depth_px = 120.0;
};

Trajectory saccade_trajectory(const SceneConfig& scene, std::uint64_t seed, const SaccadeScenario& s = {});

struct GridScenario {
  int columns = 11;
  int rows = 11;
  double width_deg = 40.0;
  double height_deg = 20.0;
  double fixation_ms = 160.0;
  double peak_velocity_deg_s = 300.0;
};

/// Serpentine fixations over a target grid; the fixation on column i of row j
/// carries target index j * columns + i.
Trajectory grid_trajectory(const SceneConfig& scene, const GridScenario& g = {});

struct BlinkScenario {
  int blinks = 5;
  double lead_in_ms = 1600.0;  // fixation before the first blink
  double gap_ms = 1400.0;      // fixation between blinks
  double blink_ms = 120.0;
  double blink_depth_px = 120.0;
};

Trajectory blink_trajectory(const SceneConfig& scene, const BlinkScenario& b = {});

/// Square-wave pursuit around the screen center.
Trajectory pursuit_trajectory(const SceneConfig& scene, double half_size_px = 200.0, double period_ms = 2000.0,
                              int laps = 2);

/// Frames at the scene frame rate with per-frame truth, plus events unless
/// `with_events` is false.
Recording simulate_recording(const SceneConfig& scene, const Trajectory& trajectory, std::uint64_t seed,
                             bool with_events = true);

// ---- gaze map persistence ----

std::string encode_gaze_map(const GazeMap& map);
GazeMap decode_gaze_map(std::string_view text);
void save_gaze_map(const std::filesystem::path& path, const GazeMap& map);
GazeMap load_gaze_map(const std::filesystem::path& path);

// ---- tracking ----

struct TrackRow {
  Timestamp t = 0;
  FitSource source = FitSource::frame;
  EyeModel model;
  double eccentricity = 0.0;
  bool blink = false;
  std::optional<Point> gaze;
};

std::string track_csv_header();
std::string format_track_row(const TrackRow& row);

/// Tracker plus blink detector and optional gaze map. The latest model is
/// published through a seqlock so other threads can read it without locks.
class TrackingPipeline {
 public:
  TrackingPipeline(SensorSize sensor, const RunConfig& config, std::optional<GazeMap> map = std::nullopt);

  std::optional<TrackRow> process(const StreamItem& item);
  std::optional<TrackRow> on_frame(const Frame& frame);
  std::optional<TrackRow> on_event(const Event& event);

  EyeModel snapshot() const { return published_.read(); }
  const Tracker& tracker() const { return tracker_; }

 private:
  TrackRow make_row(const Emission& em);

  Tracker tracker_;
  BlinkDetector blink_;
  std::optional<GazeMap> map_;
  bool blink_flag_ = false;
  SnapshotCell<EyeModel> published_;
};

struct TrackSummary {
  std::size_t rows = 0;
  TrackerStats stats;
};

/// Streams a recording directory through the pipeline. With `threaded`, a
/// decoder thread feeds the tracker through a bounded ordered queue; the
/// output is identical either way.
TrackSummary run_track(const std::filesystem::path& recording, const RunConfig& config,
                       const std::optional<GazeMap>& map, std::ostream& csv, bool threaded = true,
                       std::size_t queue_capacity = 4096);
TrackSummary run_track(const Recording& rec, const RunConfig& config, const std::optional<GazeMap>& map,
                       std::ostream& csv);

// ---- saccade-window statistics ----

struct SaccadeWindowStats {
  double saccade_ms = 0.0;
  std::size_t events = 0;
  std::size_t event_emissions = 0;
  double smoothness = 0.0;  // pooled over consecutive emissions inside saccades
  double event_rate_per_ms() const { return saccade_ms > 0 ? static_cast<double>(events) / saccade_ms : 0.0; }
  double emission_rate_per_ms() const {
    return saccade_ms > 0 ? static_cast<double>(event_emissions) / saccade_ms : 0.0;
  }
};

SaccadeWindowStats saccade_window_stats(const Recording& rec, const TrackerConfig& config);

struct SweepRow {
  int events_per_fit = 0;
  SaccadeWindowStats stats;
};

std::vector<SweepRow> run_sweep(const Recording& rec, const RunConfig& config, const std::vector<int>& ns);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// ---- evaluation ----

struct FrameScore {
  Timestamp t = 0;
  SegmentKind phase = SegmentKind::fixation;
  bool blink = false;
  double iou = 0.0;
  double center_error = 0.0;
};

/// Event-updated pupil just before each frame against the truth at that frame.
std::vector<FrameScore> score_frames(const Recording& rec, std::span<const FrameTrace> trace,
                                     const BlinkConfig& blink);

struct GazeFold {
  std::string name;
  std::size_t calibration_pairs = 0;
  std::vector<GazeSample> samples;
  double accuracy = 0.0;
  double precision = 0.0;
};

struct GazeEvaluation {
  std::vector<GazeFold> folds;  // even->odd and odd->even
  double accuracy = 0.0;        // averaged over folds
  double precision = 0.0;
};

/// Calibrates on one parity of the fixation targets and tests on the other,
/// then swaps roles. Uses settled, non-blink fixation frames.
GazeEvaluation evaluate_gaze(const Recording& rec, std::span<const FrameTrace> trace, const RunConfig& config);

/// Calibration pairs from settled fixation frames of the given target parity
/// (-1 for all targets).
std::vector<CalibrationPair> fixation_pairs(const Recording& rec, std::span<const FrameTrace> trace,
                                            const BlinkConfig& blink, int parity = -1);

struct EvaluationReport {
  std::vector<FrameScore> frames;
  std::vector<AblationSample> ablation;
  std::optional<GazeEvaluation> gaze;
  double fraction_good(bool exclude_blinks, double min_iou = 0.8, double max_center_error = 3.0) const;
};

EvaluationReport run_evaluate(const Recording& rec, const RunConfig& config);
/// Writes frames.csv, ablation.csv, histogram CSVs and summary.txt.
void write_evaluation(const std::filesystem::path& dir, const EvaluationReport& report);
std::string evaluation_summary(const EvaluationReport& report);

void write_ablation_csv(std::ostream& out, const std::vector<AblationSample>& samples);

/// Fixed-width histogram rows "lo,hi,count".
std::string histogram_csv(const std::vector<double>& values, double lo, double hi, int bins);

// ---- throughput ----

struct BenchResult {
  double seconds = 0.0;
  std::size_t events = 0;
  std::size_t gated = 0;
  double events_per_second() const { return seconds > 0 ? static_cast<double>(events) / seconds : 0.0; }
  double gated_per_second() const { return seconds > 0 ? static_cast<double>(gated) / seconds : 0.0; }
};

/// Replays the recording's merged stream through fresh trackers until
/// `min_seconds` of single-threaded processing have elapsed. Frame
/// candidates are extracted once in an untimed pass; the timed passes
/// process every event and fit the recorded candidates.
BenchResult run_bench(const Recording& rec, const TrackerConfig& config, double min_seconds);

}  // namespace evtrack
