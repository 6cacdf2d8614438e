#include <evtrack/conic.hpp>
#include <evtrack/fit.hpp>
#include <evtrack/frames.hpp>
#include <evtrack/sim.hpp>
#include <evtrack/stream.hpp>
#include <evtrack/tracker.hpp>

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

using namespace evtrack;

namespace {

std::vector<Point> ring(int n, double cx, double cy, double r, double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    pts.push_back({cx + r * std::cos(a) + u(rng), cy + r * std::sin(a) + u(rng)});
  }
  return pts;
}

void BM_SmwUpdate(benchmark::State& state) {
  const auto pts = ring(1024, 0.5, 0.4, 0.06, 0.002, 1);
  auto fit = FitState<5>::from_accumulation(batch_accumulate<QuadricKind::ellipse>(pts));
  std::size_t i = 0;
  for (auto _ : state) {
    const Point p = pts[i++ & 1023];
    fit.smw_update(feature_vector_ellipse(p), 1.0, 0.9, 100);
    benchmark::DoNotOptimize(fit.solve());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SmwUpdate);

void BM_BatchSolve(benchmark::State& state) {
  const auto pts = ring(static_cast<int>(state.range(0)), 0.5, 0.4, 0.06, 0.002, 2);
  auto fit = FitState<5>::from_accumulation(batch_accumulate<QuadricKind::ellipse>(pts));
  for (auto _ : state) {
    fit.blend_batch(batch_accumulate<QuadricKind::ellipse>(pts), 0.9);
    benchmark::DoNotOptimize(fit.solve());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchSolve)->Arg(20)->Arg(100)->Arg(500);

void BM_EllipseGate(benchmark::State& state) {
  const EllipseGate gate(ellipse_from_geometry({{173.0, 140.0}, 20.0, 17.0, 0.3}));
  const auto pts = ring(1024, 173.0, 140.0, 19.0, 3.0, 3);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gate.distance(pts[i++ & 1023]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EllipseGate);

void BM_TrackerEvent(benchmark::State& state) {
  const SceneConfig scene;
  Tracker tracker(scene.sensor, TrackerConfig{});
  tracker.on_frame(render_frame(scene, {{scene.screen.cx, scene.screen.cy}}, 0));
  const auto pts = ring(1024, scene.eye_center.x, scene.eye_center.y, scene.pupil_radius, 1.5, 4);
  std::size_t i = 0;
  Timestamp t = 1;
  for (auto _ : state) {
    const Point p = pts[i++ & 1023];
    benchmark::DoNotOptimize(tracker.on_event(
        {t++, static_cast<std::uint16_t>(std::lround(p.x)), static_cast<std::uint16_t>(std::lround(p.y)), 1}));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrackerEvent);

void BM_PupilCandidates(benchmark::State& state) {
  const SceneConfig scene;
  const Frame frame = render_frame(scene, {{scene.screen.cx, scene.screen.cy}}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(pupil_candidates(frame, {}));
}
BENCHMARK(BM_PupilCandidates)->Unit(benchmark::kMicrosecond);

void BM_SpscTransfer(benchmark::State& state) {
  constexpr std::uint64_t n = 1 << 16;
  for (auto _ : state) {
    SpscQueue<std::uint64_t> q(1024);
    std::thread producer([&] {
      for (std::uint64_t i = 0; i < n; ++i) q.push(i);
    });
    std::uint64_t sum = 0;
    for (std::uint64_t i = 0; i < n; ++i) sum += q.pop();
    producer.join();
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SpscTransfer)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
