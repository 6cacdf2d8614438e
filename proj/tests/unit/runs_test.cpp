#include <evtrack/error.hpp>
#include <evtrack/recording.hpp>
#include <evtrack/runs.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>

using namespace evtrack;
namespace fs = std::filesystem;

namespace {

const Recording& short_saccades() {
  static const Recording rec = [] {
    const SceneConfig scene;
    SaccadeScenario s;
    s.saccades = 3;
    return simulate_recording(scene, saccade_trajectory(scene, 21, s), 21);
  }();
  return rec;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("evtrack_runs_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(GazeMapFile, RoundTripExact) {
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      pairs.push_back({{100.0 + 13 * i, 90.0 + 11 * j}, {500.0 + 101 * i + 3 * j * j, 300.0 + 87 * j - i * i}});
  const GazeMap map = calibrate(pairs, 2);
  const GazeMap back = decode_gaze_map(encode_gaze_map(map));
  EXPECT_EQ(back.degree, map.degree);
  EXPECT_EQ(back.coeffs_x, map.coeffs_x);
  EXPECT_EQ(back.coeffs_y, map.coeffs_y);
  EXPECT_THROW(decode_gaze_map("degree = 2\n"), Error);
}

TEST(Track, CsvDeterministicAndThreadIndependent) {
  const fs::path dir = scratch("track");
  write_recording(dir, short_saccades());
  const RunConfig config;
  std::ostringstream a, b, c;
  const TrackSummary sa = run_track(dir, config, std::nullopt, a, true, 16);
  run_track(dir, config, std::nullopt, b, false);
  run_track(short_saccades(), config, std::nullopt, c);
  EXPECT_GT(sa.rows, short_saccades().frames.size());
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n') + 1), track_csv_header());
  fs::remove_all(dir);
}

TEST(Sweep, RowsPerN) {
  const auto rows = run_sweep(short_saccades(), RunConfig{}, {1, 20});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].events_per_fit, 1);
  EXPECT_GT(rows[0].stats.event_emissions, rows[1].stats.event_emissions);
  std::ostringstream out;
  write_sweep_csv(out, rows);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Evaluate, FidelityOnShortRun) {
  const EvaluationReport report = run_evaluate(short_saccades(), RunConfig{});
  EXPECT_EQ(report.frames.size() + 1, short_saccades().frames.size());  // the first frame has no prior estimate
  EXPECT_GE(report.fraction_good(false), 0.95);
  const fs::path dir = scratch("eval");
  write_evaluation(dir, report);
  EXPECT_TRUE(fs::exists(dir / "summary.txt"));
  EXPECT_TRUE(fs::exists(dir / "frames.csv"));
  fs::remove_all(dir);
}

TEST(Ablation, FixationFramesAreExactlyZero) {
  const auto samples = frame_only_ablation(short_saccades(), TrackerConfig{});
  std::size_t fix = 0;
  for (const AblationSample& s : samples)
    if (s.phase != SegmentKind::saccade) {
      ++fix;
      EXPECT_EQ(s.difference(), 0.0);
    }
  EXPECT_GT(fix, 0u);
}

TEST(Ablation, EventsDisabledGivesZeros) {
  TrackerConfig config;
  config.use_events = false;
  for (const AblationSample& s : frame_only_ablation(short_saccades(), config)) EXPECT_EQ(s.difference(), 0.0);
}

TEST(Histogram, Bins) {
  const std::string csv = histogram_csv({0.1, 0.2, 0.9, 1.5, -1.0}, 0.0, 1.0, 2);
  EXPECT_NE(csv.find("0,0.5,3"), std::string::npos);
  EXPECT_NE(csv.find("0.5,1,2"), std::string::npos);
}

TEST(Bench, CountsGatedEvents) {
  const BenchResult r = run_bench(short_saccades(), TrackerConfig{}, 0.05);
  EXPECT_GT(r.events, 0u);
  EXPECT_GT(r.gated, 0u);
  EXPECT_LE(r.gated, r.events);
  EXPECT_GT(r.seconds, 0.0);
}

TEST(FixationPairs, CalibrateOnTruthlessPairsRecoversGaze) {
  const SceneConfig scene;
  GridScenario g;
  g.columns = 5;
  g.rows = 5;
  const Recording rec = simulate_recording(scene, grid_trajectory(scene, g), 1, false);
  const auto trace = trace_frames(rec, TrackerConfig{});
  const auto pairs = fixation_pairs(rec, trace, BlinkConfig{});
  ASSERT_GE(pairs.size(), 25u);
  const GazeMap map = calibrate(pairs, 2);
  EXPECT_LT(std::sqrt(calibration_residual(map, pairs) / pairs.size()), 20.0);
}
