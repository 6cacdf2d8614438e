#pragma once

// Candidate-point extraction from grayscale frames: pupil boundary, eyelid
// corners and glint pixels.

#include <evtrack/types.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace evtrack {

struct FramePipelineConfig {
  int theta = 60;                   // pupil threshold: intensity < theta
  int sigma = 2;                    // opening disk radius, pixels
  int t1 = 40;                      // eyelid clip range [t1, t2]
  int t2 = 120;
  int t3 = 220;                     // glint threshold: intensity > t3
  double rho_prime = 80.0;          // eyelid candidate radius around the pupil
  double rho_double_prime = 40.0;   // glint candidate radius around the pupil
  double harris_k = 0.04;
  double harris_rel_thresh = 0.1;   // keep R > rel * max(R)

  void validate() const;
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int width, int height)
      : width(width), height(height), bits(static_cast<std::size_t>(width) * height, 0) {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

struct Offset {
  int dx;
  int dy;
};

/// {(i, j) : i^2 + j^2 <= r^2}
std::vector<Offset> disk_element(int radius);

BinaryMask threshold_below(const Frame& frame, int theta);
BinaryMask erode(const BinaryMask& mask, const std::vector<Offset>& element);
BinaryMask dilate(const BinaryMask& mask, const std::vector<Offset>& element);
BinaryMask open(const BinaryMask& mask, int radius);

/// Mask pixels with at least one 4-neighbour outside the mask (the image
/// border counts as outside), in row-major order.
std::vector<Point> mask_boundary(const BinaryMask& mask);

std::vector<Point> pupil_candidates(const Frame& frame, const FramePipelineConfig& config);

/// Harris corners (3x3 Sobel, 5x5 box window, 3x3 non-maximum suppression).
std::vector<Point> harris_corners(const Frame& frame, double k, double rel_thresh);

Frame clip_intensity(const Frame& frame, int lo, int hi);

std::vector<Point> eyelid_candidates(const Frame& frame, std::optional<Point> pupil_center,
                                     const FramePipelineConfig& config);

std::vector<Point> glint_candidates(const Frame& frame, std::optional<Point> pupil_center,
                                    const FramePipelineConfig& config);

}  // namespace evtrack
