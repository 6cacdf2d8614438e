#include <evtrack/error.hpp>
#include <evtrack/metrics.hpp>
#include <evtrack/runs.hpp>
#include <evtrack/sim.hpp>
#include <evtrack/tracker.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace evtrack;

namespace {

EyeModel circle_pupil(double cx, double cy, double r) {
  EyeModel m;
  m.ellipse = ellipse_from_geometry({{cx, cy}, r, r, 0.0});
  m.ellipse_valid = true;
  return m;
}

void expect_same_model(const EyeModel& a, const EyeModel& b, double tol) {
  EXPECT_NEAR(a.ellipse.a, b.ellipse.a, tol * std::abs(b.ellipse.a));
  EXPECT_NEAR(a.ellipse.h, b.ellipse.h, tol * std::abs(b.ellipse.a));
  EXPECT_NEAR(a.ellipse.b, b.ellipse.b, tol * std::abs(b.ellipse.b));
  EXPECT_NEAR(a.ellipse.g, b.ellipse.g, tol * std::abs(b.ellipse.g));
  EXPECT_NEAR(a.ellipse.f, b.ellipse.f, tol * std::abs(b.ellipse.f));
}

}  // namespace

TEST(Gate, OnBoundaryIsPupil) {
  const EyeModel m = circle_pupil(100, 100, 20);
  EXPECT_EQ(gate_event(m, Point{120.0, 100.0}, 2.0), Membership::pupil);
}

TEST(Gate, FarIsRejected) {
  EyeModel m = circle_pupil(100, 100, 20);
  m.glint = {70, 110, 3};
  m.glint_valid = true;
  m.eyelid = {0.0, 0.0, 30.0};
  m.eyelid_valid = true;
  EXPECT_EQ(gate_event(m, Point{100.0 + 20 + 20, 100.0 + 40}, 2.0), Membership::rejected);
}

TEST(Gate, RadialDistanceOne) {
  const EyeModel m = circle_pupil(100, 100, 20);
  EXPECT_EQ(gate_event(m, Point{121.0, 100.0}, 2.0), Membership::pupil);
  EXPECT_NEAR(EllipseGate(m.ellipse).distance({121.0, 100.0}), 1.0, 1e-9);
  EXPECT_EQ(gate_event(m, Point{123.0, 100.0}, 2.0), Membership::rejected);
}

TEST(Gate, PriorityPupilThenGlintThenEyelid) {
  EyeModel m = circle_pupil(100, 100, 20);
  m.glint = {120, 100, 1};
  m.glint_valid = true;
  m.eyelid = {0.0, 0.0, 100.0};  // image row 100
  m.eyelid_valid = true;
  EXPECT_EQ(gate_event(m, Point{120.0, 100.0}, 2.0), Membership::pupil);
  m.ellipse_valid = false;
  EXPECT_EQ(gate_event(m, Point{120.0, 100.0}, 2.0), Membership::glint);
  m.glint_valid = false;
  EXPECT_EQ(gate_event(m, Point{120.0, 100.0}, 2.0), Membership::eyelid);
  m.eyelid_valid = false;
  EXPECT_EQ(gate_event(m, Point{120.0, 100.0}, 2.0), Membership::rejected);
}

TEST(Gate, MatchesProjectionDistance) {
  const EllipseParams e = ellipse_from_geometry({{150, 110}, 24, 15, 0.6});
  const EllipseGate gate(e);
  for (int i = 0; i < 50; ++i) {
    const Point p{120.0 + 1.3 * i, 80.0 + 1.1 * i};
    const Point q = project_onto_ellipse(e, p);
    EXPECT_NEAR(gate.distance(p), std::hypot(q.x - p.x, q.y - p.y), 1e-9);
  }
}

TEST(Tracker, StaticEyeConstantModel) {
  const SceneConfig scene;
  TrackerConfig config;
  Tracker tracker(scene.sensor, config);
  const Frame f0 = render_frame(scene, {{scene.screen.cx, scene.screen.cy}}, 0);
  const EyeModel first = tracker.on_frame(f0)->model;
  ASSERT_TRUE(first.ellipse_valid);
  for (int k = 1; k < 6; ++k) {
    Frame f = f0;
    f.t = 40000 * k;
    expect_same_model(tracker.on_frame(f)->model, first, 1e-9);
  }
}

TEST(Tracker, FirstFrameCenterMatchesTruth) {
  const SceneConfig scene;
  Tracker tracker(scene.sensor, TrackerConfig{});
  const Frame f = render_frame(scene, {{scene.screen.cx + 200, scene.screen.cy - 100}}, 0);
  const EyeModel m = tracker.on_frame(f)->model;
  const Trajectory traj = Trajectory(scene.screen, {scene.screen.cx + 200, scene.screen.cy - 100}).fixate(10);
  const GroundTruth truth = ground_truth(scene, traj, 0);
  EXPECT_LT(center_error(m.ellipse, truth.ellipse), 0.5);
}

TEST(Tracker, FrozenBlendKeepsModel) {
  const SceneConfig scene;
  Trajectory traj(scene.screen, {scene.screen.cx, scene.screen.cy});
  traj.fixate(50).saccade_to({scene.screen.cx + 300, scene.screen.cy}, 300).fixate(50);
  const Recording rec = simulate_recording(scene, traj, 1);
  TrackerConfig config;
  config.fit.gamma = 1.0;
  config.fit.gamma_prime = 1.0;
  const auto out = process_stream(rec.sensor, rec.frames, rec.events, config);
  ASSERT_FALSE(out.empty());
  for (const Emission& em : out) EXPECT_EQ(em.model.ellipse, out.front().model.ellipse);
}

TEST(Tracker, SaccadeCentersMoveMonotonically) {
  const SceneConfig scene;
  Trajectory traj(scene.screen, {scene.screen.cx - 150, scene.screen.cy});
  traj.fixate(30).saccade_to_in({scene.screen.cx + 150, scene.screen.cy}, 30).fixate(60);
  const Recording rec = simulate_recording(scene, traj, 2);
  const auto out = process_stream(rec.sensor, rec.frames, rec.events, TrackerConfig{});
  double last_x = -1e9;
  std::size_t moves = 0;
  for (const Emission& em : out) {
    const double x = ellipse_center(em.model.ellipse).x;
    EXPECT_GE(x, last_x - 0.5) << "at t=" << em.t;
    if (x > last_x + 1e-9) ++moves;
    last_x = std::max(last_x, x);
  }
  EXPECT_GT(moves, 10u);
  // Final estimate before the last frame against the truth at that frame.
  const auto trace = trace_frames(rec, TrackerConfig{});
  const GroundTruth& truth = rec.truth.back();
  EXPECT_LT(center_error(trace.back().before.ellipse, truth.ellipse), 3.0);
}

TEST(Tracker, DeterministicOutput) {
  const SceneConfig scene;
  Trajectory traj(scene.screen, {scene.screen.cx, scene.screen.cy});
  traj.fixate(30).saccade_to({scene.screen.cx + 200, scene.screen.cy + 100}, 300).fixate(30);
  const Recording rec = simulate_recording(scene, traj, 4);
  const auto a = process_stream(rec.sensor, rec.frames, rec.events, TrackerConfig{});
  const auto b = process_stream(rec.sensor, rec.frames, rec.events, TrackerConfig{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].model.ellipse, b[i].model.ellipse);
  }
}

TEST(Tracker, ReplayedCandidatesMatchFrames) {
  const SceneConfig scene;
  Trajectory traj(scene.screen, {scene.screen.cx, scene.screen.cy});
  traj.fixate(30).saccade_to({scene.screen.cx - 150, scene.screen.cy + 80}, 300).fixate(30);
  const Recording rec = simulate_recording(scene, traj, 6);
  Tracker live(rec.sensor, TrackerConfig{});
  Tracker replay(rec.sensor, TrackerConfig{});
  std::size_t ei = 0;
  for (const Frame& f : rec.frames) {
    for (; ei < rec.events.size() && rec.events[ei].t < f.t; ++ei) {
      live.on_event(rec.events[ei]);
      replay.on_event(rec.events[ei]);
    }
    FrameCandidates c;
    const auto a = live.on_frame(f, &c);
    EXPECT_EQ(c.t, f.t);
    const auto b = replay.on_candidates(c);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->model.ellipse, b->model.ellipse);
    EXPECT_EQ(a->model.eyelid, b->model.eyelid);
    EXPECT_EQ(a->model.glint, b->model.glint);
  }
  EXPECT_EQ(live.stats().gated_pupil, replay.stats().gated_pupil);
}

TEST(Tracker, EmissionRateFollowsN) {
  const SceneConfig scene;
  Trajectory traj(scene.screen, {scene.screen.cx, scene.screen.cy});
  traj.fixate(30).saccade_to({scene.screen.cx + 300, scene.screen.cy}, 300).fixate(30);
  const Recording rec = simulate_recording(scene, traj, 5);
  TrackerConfig config;
  config.fit.events_per_fit = 20;
  const SaccadeWindowStats st = saccade_window_stats(rec, config);
  ASSERT_GT(st.saccade_ms, 0.0);
  EXPECT_NEAR(st.emission_rate_per_ms(), st.event_rate_per_ms() / 20.0, 0.1 * st.event_rate_per_ms() / 20.0);
}

TEST(Tracker, OutlierIsGatedSoFitIsNotLeastSquares) {
  const SceneConfig scene;
  TrackerConfig config;
  config.fit.events_per_fit = 1;
  Tracker tracker(scene.sensor, config);
  tracker.on_frame(render_frame(scene, {{scene.screen.cx, scene.screen.cy}}, 0));
  tracker.on_event({1, 5, 5, -1});
  EXPECT_EQ(tracker.stats().rejected, 1u);
  EXPECT_EQ(tracker.stats().event_updates, 0u);
}

TEST(Tracker, EventsDisabledIgnoresEvents) {
  const SceneConfig scene;
  TrackerConfig config;
  config.use_events = false;
  Tracker tracker(scene.sensor, config);
  tracker.on_frame(render_frame(scene, {{scene.screen.cx, scene.screen.cy}}, 0));
  const EllipseGeometry g = ellipse_geometry(tracker.model().ellipse);
  const Event ev{1, static_cast<std::uint16_t>(g.center.x + g.semi_major), static_cast<std::uint16_t>(g.center.y), -1};
  EXPECT_FALSE(tracker.on_event(ev).has_value());
}

TEST(Tracker, FrameSizeMismatchThrows) {
  Tracker tracker({346, 260}, TrackerConfig{});
  try {
    tracker.on_frame(Frame(0, 10, 10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(ProcessStream, OutOfOrderEventsThrow) {
  const std::vector<Frame> frames;
  const std::vector<Event> events{{10, 1, 1, 1}, {5, 1, 1, 1}};
  try {
    process_stream({346, 260}, frames, events, TrackerConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_order);
    EXPECT_EQ(e.offset(), 1);
  }
}
