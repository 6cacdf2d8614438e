#include <evtrack/frames.hpp>

#include <evtrack/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evtrack {

void FramePipelineConfig::validate() const {
  auto in_range = [](int v) { return v >= 0 && v <= 255; };
  if (!in_range(theta) || !in_range(t1) || !in_range(t2) || !in_range(t3))
    throw Error(ErrorCode::config, "intensity thresholds must lie in [0, 255]");
  if (!(t1 < t2)) throw Error(ErrorCode::config, "t1 must be below t2");
  if (sigma < 0) throw Error(ErrorCode::config, "sigma must be non-negative");
  if (!(rho_prime > 0.0) || !(rho_double_prime > 0.0))
    throw Error(ErrorCode::config, "candidate radii must be positive");
  if (!(harris_rel_thresh >= 0.0 && harris_rel_thresh <= 1.0))
    throw Error(ErrorCode::config, "harris_rel_thresh must lie in [0, 1]");
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<Offset> disk_element(int radius) {
  std::vector<Offset> out;
  for (int j = -radius; j <= radius; ++j)
    for (int i = -radius; i <= radius; ++i)
      if (i * i + j * j <= radius * radius) out.push_back({i, j});
  return out;
}

namespace {

void check_frame(const Frame& frame) {
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height)
    throw Error(ErrorCode::dimension_mismatch, "frame pixel count does not match its size");
}

}  // namespace

BinaryMask threshold_below(const Frame& frame, int theta) {
  check_frame(frame);
  BinaryMask mask(frame.width, frame.height);
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) mask.bits[i] = frame.pixels[i] < theta ? 1 : 0;
  return mask;
}

BinaryMask erode(const BinaryMask& mask, const std::vector<Offset>& element) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      bool keep = true;
      for (const Offset& o : element) {
        const int xx = x + o.dx;
        const int yy = y + o.dy;
        if (!mask.inside(xx, yy) || !mask.at(xx, yy)) {
          keep = false;
          break;
        }
      }
      if (keep) out.set(x, y, true);
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& mask, const std::vector<Offset>& element) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (const Offset& o : element) {
        const int xx = x + o.dx;
        const int yy = y + o.dy;
        if (out.inside(xx, yy)) out.set(xx, yy, true);
      }
    }
  }
  return out;
}

BinaryMask open(const BinaryMask& mask, int radius) {
  const auto element = disk_element(radius);
  return dilate(erode(mask, element), element);
}

std::vector<Point> mask_boundary(const BinaryMask& mask) {
  std::vector<Point> out;
  auto outside = [&](int x, int y) { return !mask.inside(x, y) || !mask.at(x, y); };
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y) &&
          (outside(x - 1, y) || outside(x + 1, y) || outside(x, y - 1) || outside(x, y + 1)))
        out.push_back({static_cast<double>(x), static_cast<double>(y)});
  return out;
}

std::vector<Point> pupil_candidates(const Frame& frame, const FramePipelineConfig& config) {
  return mask_boundary(open(threshold_below(frame, config.theta), config.sigma));
}

Frame clip_intensity(const Frame& frame, int lo, int hi) {
  check_frame(frame);
  Frame out = frame;
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(std::clamp<int>(p, lo, hi));
  return out;
}

std::vector<Point> harris_corners(const Frame& frame, double k, double rel_thresh) {
  check_frame(frame);
  const int w = frame.width;
  const int h = frame.height;
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> ixx(n, 0.0), iyy(n, 0.0), ixy(n, 0.0);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      auto I = [&](int dx, int dy) { return static_cast<double>(frame.at(x + dx, y + dy)); };
      const double gx = (I(1, -1) + 2 * I(1, 0) + I(1, 1)) - (I(-1, -1) + 2 * I(-1, 0) + I(-1, 1));
      const double gy = (I(-1, 1) + 2 * I(0, 1) + I(1, 1)) - (I(-1, -1) + 2 * I(0, -1) + I(1, -1));
      ixx[idx(x, y)] = gx * gx;
      iyy[idx(x, y)] = gy * gy;
      ixy[idx(x, y)] = gx * gy;
    }
  }
  constexpr int r = 2;  // 5x5 window
  std::vector<double> response(n, 0.0);
  double max_r = 0.0;
  for (int y = r; y + r < h; ++y) {
    for (int x = r; x + r < w; ++x) {
      double sxx = 0, syy = 0, sxy = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const std::size_t i = idx(x + dx, y + dy);
          sxx += ixx[i];
          syy += iyy[i];
          sxy += ixy[i];
        }
      const double det = sxx * syy - sxy * sxy;
      const double tr = sxx + syy;
      const double R = det - k * tr * tr;
      response[idx(x, y)] = R;
      max_r = std::max(max_r, R);
    }
  }
  std::vector<Point> out;
  if (!(max_r > 0.0)) return out;
  const double thresh = rel_thresh * max_r;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double R = response[idx(x, y)];
      if (!(R > thresh)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double other = response[idx(x + dx, y + dy)];
          // Ties go to the first pixel in scan order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (other > R || (earlier && other == R)) {
            is_max = false;
            break;
          }
        }
      if (is_max) out.push_back({static_cast<double>(x), static_cast<double>(y)});
    }
  }
  return out;
}

std::vector<Point> eyelid_candidates(const Frame& frame, std::optional<Point> pupil_center,
                                     const FramePipelineConfig& config) {
  if (!pupil_center) return {};
  const auto corners =
      harris_corners(clip_intensity(frame, config.t1, config.t2), config.harris_k, config.harris_rel_thresh);
  std::vector<Point> out;
  const double half_rows = 0.5 * frame.height;
  for (const Point& p : corners)
    if (norm(p - *pupil_center) < config.rho_prime && p.y < half_rows) out.push_back(p);
  return out;
}

std::vector<Point> glint_candidates(const Frame& frame, std::optional<Point> pupil_center,
                                    const FramePipelineConfig& config) {
  check_frame(frame);
  if (!pupil_center) return {};
  std::vector<Point> out;
  const double rr = config.rho_double_prime;
  const int x0 = std::max(0, static_cast<int>(std::floor(pupil_center->x - rr)));
  const int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(pupil_center->x + rr)));
  const int y0 = std::max(0, static_cast<int>(std::floor(pupil_center->y - rr)));
  const int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(pupil_center->y + rr)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      if (frame.at(x, y) > config.t3 && norm(p - *pupil_center) < rr) out.push_back(p);
    }
  return out;
}

}  // namespace evtrack
