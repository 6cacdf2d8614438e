#include <evtrack/config.hpp>
#include <evtrack/error.hpp>
#include <evtrack/recording.hpp>
#include <evtrack/runs.hpp>
#include <evtrack/sim.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace evtrack;

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("-c,--config", opts.config_file, "flat key = value config file")->check(CLI::ExistingFile);
  app->add_option("-s,--set", opts.overrides, "override one config key, key=value (repeatable)");
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig config = opts.config_file.empty() ? RunConfig{} : load_config(opts.config_file);
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::config, "override '" + kv + "' lacks '='");
    set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

std::vector<int> parse_ns(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(item, &used);
      if (used != item.size() || n < 1) throw std::invalid_argument(item);
      out.push_back(n);
    } catch (const std::exception&) {
      throw Error(ErrorCode::config, "bad events-per-fit value '" + item + "'");
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

Trajectory build_trajectory(const std::string& scenario, const SceneConfig& scene, std::uint64_t seed, int saccades,
                            int blinks) {
  if (scenario == "saccades") {
    SaccadeScenario s;
    s.saccades = saccades;
    s.blinks = blinks;
    return saccade_trajectory(scene, seed, s);
  }
  if (scenario == "grid") return grid_trajectory(scene);
  if (scenario == "blinks") {
    BlinkScenario b;
    b.blinks = blinks > 0 ? blinks : b.blinks;
    return blink_trajectory(scene, b);
  }
  return pursuit_trajectory(scene);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event and frame fused pupil and gaze tracker"};
  app.require_subcommand(1);

  // simulate
  CommonOptions sim_common;
  std::string sim_out;
  std::uint64_t sim_seed = 0;
  std::string sim_scenario = "saccades";
  int sim_saccades = 10;
  int sim_blinks = 0;
  bool sim_no_events = false;
  bool sim_csv_events = false;
  auto* simulate = app.add_subcommand("simulate", "render a synthetic recording with ground truth");
  add_common(simulate, sim_common);
  simulate->add_option("-o,--out", sim_out, "output recording directory")->required();
  simulate->add_option("--seed", sim_seed, "random seed")->required();
  simulate->add_option("--scenario", sim_scenario, "saccades, grid, blinks or pursuit")
      ->check(CLI::IsMember({"saccades", "grid", "blinks", "pursuit"}));
  simulate->add_option("--saccades", sim_saccades, "saccade count (saccades scenario)")->check(CLI::PositiveNumber);
  simulate->add_option("--blinks", sim_blinks, "blink count (saccades and blinks scenarios)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_flag("--no-events", sim_no_events, "write frames and truth only");
  simulate->add_flag("--csv-events", sim_csv_events, "write events as CSV text instead of binary");

  // track
  CommonOptions track_common;
  std::string track_in;
  std::string track_out;
  std::string track_map;
  bool track_single = false;
  std::size_t track_queue = 4096;
  auto* track = app.add_subcommand("track", "stream a recording through the tracker and write CSV");
  add_common(track, track_common);
  track->add_option("-i,--in", track_in, "recording directory")->required()->check(CLI::ExistingDirectory);
  track->add_option("-o,--out", track_out, "output CSV (default stdout)");
  track->add_option("--gaze-map", track_map, "gaze map from calibrate")->check(CLI::ExistingFile);
  track->add_flag("--single-threaded", track_single, "decode and track on one thread");
  track->add_option("--queue-capacity", track_queue, "decoder queue capacity")->check(CLI::PositiveNumber);

  // calibrate
  CommonOptions cal_common;
  std::string cal_in;
  std::string cal_out;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "fit the gaze polynomial from calibration pairs");
  add_common(calibrate_cmd, cal_common);
  calibrate_cmd->add_option("-i,--in", cal_in, "recording directory")->required()->check(CLI::ExistingDirectory);
  calibrate_cmd->add_option("-o,--out", cal_out, "output gaze map file")->required();

  // sweep
  CommonOptions sweep_common;
  std::string sweep_in;
  std::string sweep_out;
  std::string sweep_ns = "1,5,10,20,50,100,500";
  auto* sweep = app.add_subcommand("sweep", "smoothness against events per fit");
  add_common(sweep, sweep_common);
  sweep->add_option("-i,--in", sweep_in, "recording directory")->required()->check(CLI::ExistingDirectory);
  sweep->add_option("-o,--out", sweep_out, "output CSV (default stdout)");
  sweep->add_option("--n", sweep_ns, "comma-separated events-per-fit values");

  // evaluate
  CommonOptions eval_common;
  std::string eval_in;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "score tracking and gaze against ground truth");
  add_common(evaluate, eval_common);
  evaluate->add_option("-i,--in", eval_in, "recording directory with truth")->required()->check(
      CLI::ExistingDirectory);
  evaluate->add_option("-o,--out", eval_out, "report directory")->required();

  // ablate
  CommonOptions abl_common;
  std::string abl_in;
  std::string abl_out;
  auto* ablate = app.add_subcommand("ablate", "compare event updates with holding the last frame");
  add_common(ablate, abl_common);
  ablate->add_option("-i,--in", abl_in, "recording directory with truth")->required()->check(CLI::ExistingDirectory);
  ablate->add_option("-o,--out", abl_out, "output CSV (default stdout)");

  // bench
  CommonOptions bench_common;
  std::string bench_in;
  std::uint64_t bench_seed = 7;
  double bench_seconds = 30.0;
  auto* bench = app.add_subcommand("bench", "single-threaded event throughput");
  add_common(bench, bench_common);
  bench->add_option("-i,--in", bench_in, "recording directory (default: simulated saccades)")->check(
      CLI::ExistingDirectory);
  bench->add_option("--seed", bench_seed, "seed for the simulated recording");
  bench->add_option("--seconds", bench_seconds, "minimum measured time")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      RunConfig config = resolve_config(sim_common);
      const Trajectory traj = build_trajectory(sim_scenario, config.scene, sim_seed, sim_saccades, sim_blinks);
      const Recording rec = simulate_recording(config.scene, traj, sim_seed, !sim_no_events);
      write_recording(sim_out, rec, sim_csv_events ? EventFormat::csv : EventFormat::binary);
      std::cerr << "wrote " << rec.frames.size() << " frames and " << rec.events.size() << " events to " << sim_out
                << "\n";
    } else if (*track) {
      const RunConfig config = resolve_config(track_common);
      std::optional<GazeMap> map;
      if (!track_map.empty()) map = load_gaze_map(track_map);
      TrackSummary summary;
      if (track_out.empty()) {
        summary = run_track(track_in, config, map, std::cout, !track_single, track_queue);
      } else {
        std::ofstream out(track_out, std::ios::binary);
        if (!out) throw Error(ErrorCode::io, "cannot write " + track_out);
        summary = run_track(track_in, config, map, out, !track_single, track_queue);
      }
      const TrackerStats& s = summary.stats;
      std::cerr << summary.rows << " rows; events " << s.events << ", gated pupil " << s.gated_pupil << ", glint "
                << s.gated_glint << ", eyelid " << s.gated_eyelid << ", rejected " << s.rejected << "\n";
    } else if (*calibrate_cmd) {
      const RunConfig config = resolve_config(cal_common);
      const Recording rec = read_recording(cal_in);
      std::vector<CalibrationPair> pairs = rec.calibration;
      if (pairs.empty()) {
        if (!rec.has_truth()) throw Error(ErrorCode::empty_input, "recording has neither calibration pairs nor truth");
        const auto trace = trace_frames(rec, config.tracker);
        pairs = fixation_pairs(rec, trace, config.blink);
      }
      const GazeMap map = calibrate(pairs, config.gaze_degree);
      save_gaze_map(cal_out, map);
      std::cerr << "degree " << config.gaze_degree << " map from " << pairs.size()
                << " pairs, rms residual "
                << std::sqrt(calibration_residual(map, pairs) / static_cast<double>(pairs.size())) << " screen px\n";
    } else if (*sweep) {
      const RunConfig config = resolve_config(sweep_common);
      const Recording rec = read_recording(sweep_in);
      const auto rows = run_sweep(rec, config, parse_ns(sweep_ns));
      if (sweep_out.empty()) {
        write_sweep_csv(std::cout, rows);
      } else {
        std::ostringstream ss;
        write_sweep_csv(ss, rows);
        write_text(sweep_out, ss.str());
      }
    } else if (*evaluate) {
      const RunConfig config = resolve_config(eval_common);
      const Recording rec = read_recording(eval_in);
      const EvaluationReport report = run_evaluate(rec, config);
      fs::create_directories(eval_out);
      write_evaluation(eval_out, report);
      std::cout << evaluation_summary(report);
    } else if (*ablate) {
      const RunConfig config = resolve_config(abl_common);
      const Recording rec = read_recording(abl_in);
      const auto samples = frame_only_ablation(rec, config.tracker);
      std::ostringstream ss;
      write_ablation_csv(ss, samples);
      if (abl_out.empty()) std::cout << ss.str();
      else write_text(abl_out, ss.str());
      std::size_t sac = 0, sac_pos = 0, fix = 0, fix_zero = 0;
      for (const AblationSample& s : samples) {
        if (s.phase == SegmentKind::saccade) {
          ++sac;
          sac_pos += s.difference() > 0.0;
        } else {
          ++fix;
          fix_zero += s.difference() == 0.0;
        }
      }
      std::cerr << "saccade frames " << sac << ", positive " << sac_pos << "; fixation frames " << fix << ", zero "
                << fix_zero << "\n";
    } else if (*bench) {
      const RunConfig config = resolve_config(bench_common);
      Recording rec;
      if (bench_in.empty()) {
        rec = simulate_recording(config.scene, saccade_trajectory(config.scene, bench_seed), bench_seed);
      } else {
        rec = read_recording(bench_in);
      }
      const BenchResult r = run_bench(rec, config.tracker, bench_seconds);
      std::cout << "seconds " << r.seconds << "\nevents " << r.events << "\ngated " << r.gated << "\nevents_per_second "
                << r.events_per_second() << "\ngated_per_second " << r.gated_per_second() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (e.offset() >= 0) std::cerr << " (offset " << e.offset() << ")";
    std::cerr << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
