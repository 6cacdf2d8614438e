#include <evtrack/fit.hpp>
#include <evtrack/frames.hpp>
#include <evtrack/sim.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

using namespace evtrack;

namespace {

Frame disk_frame(int w, int h, double cx, double cy, double r, std::uint8_t inside = 20, std::uint8_t outside = 200) {
  Frame f(0, w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.at(x, y) = std::hypot(x - cx, y - cy) <= r ? inside : outside;
  return f;
}

CircleParams fit_circle(const std::vector<Point>& pts) {
  auto state = FitState<3>::from_accumulation(batch_accumulate<QuadricKind::circle>(pts));
  return to_circle(state.solve());
}

std::set<std::pair<int, int>> as_set(const std::vector<Point>& pts) {
  std::set<std::pair<int, int>> s;
  for (const Point& p : pts) s.insert({static_cast<int>(p.x), static_cast<int>(p.y)});
  return s;
}

}  // namespace

TEST(PupilCandidates, WhiteFrameIsEmpty) {
  Frame f(0, 64, 48);
  std::fill(f.pixels.begin(), f.pixels.end(), 255);
  EXPECT_TRUE(pupil_candidates(f, {}).empty());
}

TEST(PupilCandidates, DiskCenterAndRadius) {
  const Frame f = disk_frame(200, 160, 100, 80, 20);
  const auto pts = pupil_candidates(f, {});
  ASSERT_GT(pts.size(), 20u);
  const CircleParams c = fit_circle(pts);
  EXPECT_NEAR(c.cx, 100.0, 0.5);
  EXPECT_NEAR(c.cy, 80.0, 0.5);
  EXPECT_NEAR(c.r, 20.0, 1.0);
}

TEST(PupilCandidates, SaltNoiseRemovedByOpening) {
  const Frame clean = disk_frame(200, 160, 100, 80, 20);
  Frame noisy = clean;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> ux(0, 199), uy(0, 159);
  for (int i = 0; i < 300; ++i) {
    const int x = ux(rng), y = uy(rng);
    if (std::hypot(x - 100, y - 80) > 24) noisy.at(x, y) = 0;
  }
  EXPECT_EQ(as_set(pupil_candidates(noisy, {})), as_set(pupil_candidates(clean, {})));
}

TEST(PupilCandidates, SubsetOfMaskBoundary) {
  const Frame f = disk_frame(120, 100, 50, 45, 15);
  const FramePipelineConfig config;
  const BinaryMask opened = open(threshold_below(f, config.theta), config.sigma);
  for (const Point& p : pupil_candidates(f, config)) {
    const int x = static_cast<int>(p.x), y = static_cast<int>(p.y);
    ASSERT_TRUE(opened.at(x, y));
    const bool all_in = opened.inside(x - 1, y) && opened.at(x - 1, y) && opened.inside(x + 1, y) &&
                        opened.at(x + 1, y) && opened.inside(x, y - 1) && opened.at(x, y - 1) &&
                        opened.inside(x, y + 1) && opened.at(x, y + 1);
    EXPECT_FALSE(all_in);
  }
}

TEST(PupilCandidates, TranslationEquivariant) {
  const auto a = pupil_candidates(disk_frame(160, 120, 60.3, 50.7, 14), {});
  const auto b = pupil_candidates(disk_frame(160, 120, 67.3, 46.7, 14), {});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(b[i].x, a[i].x + 7);
    EXPECT_EQ(b[i].y, a[i].y - 4);
  }
}

TEST(Opening, Idempotent) {
  std::mt19937_64 rng(2);
  BinaryMask m(60, 40);
  for (auto& b : m.bits) b = (rng() % 3) != 0;
  const BinaryMask once = open(m, 2);
  EXPECT_EQ(open(once, 2), once);
}

TEST(DiskElement, Radius) {
  const auto d = disk_element(2);
  EXPECT_EQ(d.size(), 13u);
  for (const Offset& o : d) EXPECT_LE(o.dx * o.dx + o.dy * o.dy, 4);
}

TEST(MaskBoundary, SquareRing) {
  BinaryMask m(10, 10);
  for (int y = 2; y < 7; ++y)
    for (int x = 2; x < 7; ++x) m.set(x, y, true);
  EXPECT_EQ(mask_boundary(m).size(), 16u);
}

TEST(EyelidCandidates, UniformFrameEmpty) {
  Frame f(0, 100, 80);
  std::fill(f.pixels.begin(), f.pixels.end(), 90);
  EXPECT_TRUE(eyelid_candidates(f, Point{50, 60}, {}).empty());
  EXPECT_TRUE(eyelid_candidates(f, std::nullopt, {}).empty());
}

TEST(EyelidCandidates, SimulatedEyelidUpperHalf) {
  const SceneConfig scene;
  const Frame f = render_frame(scene, {{scene.screen.cx, scene.screen.cy}}, 0);
  const auto pts = eyelid_candidates(f, scene.eye_center, {});
  EXPECT_GE(pts.size(), 3u);
  for (const Point& p : pts) EXPECT_LT(p.y, f.height / 2.0);
}

TEST(EyelidCandidates, LowerHalfTextureIgnored) {
  Frame f(0, 100, 80);
  std::fill(f.pixels.begin(), f.pixels.end(), 100);
  for (int y = 50; y < 80; y += 6)
    for (int x = 20; x < 80; x += 6) f.at(x, y) = 45;
  EXPECT_TRUE(eyelid_candidates(f, Point{50, 60}, {}).empty());
}

TEST(GlintCandidates, Examples) {
  Frame f(0, 100, 80);
  std::fill(f.pixels.begin(), f.pixels.end(), 100);
  f.at(60, 40) = f.at(61, 40) = f.at(60, 41) = 250;
  const auto pts = glint_candidates(f, Point{50, 40}, {});
  EXPECT_EQ(pts.size(), 3u);
  FramePipelineConfig far;
  far.rho_double_prime = 5.0;
  EXPECT_TRUE(glint_candidates(f, Point{40, 40}, far).empty());
  Frame black(0, 100, 80);
  EXPECT_TRUE(glint_candidates(black, Point{50, 40}, {}).empty());
}

TEST(FramePipelineConfig, Validation) {
  FramePipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.t1 = 130;
  EXPECT_ANY_THROW(c.validate());
}
