#pragma once

#include <cstdint>
#include <vector>

namespace evtrack {

using Timestamp = std::uint64_t;  // microseconds

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

double norm(Point p);

struct Event {
  Timestamp t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t polarity = 1;  // +1 brighter, -1 darker

  friend bool operator==(const Event&, const Event&) = default;
};

struct SensorSize {
  int width = 346;
  int height = 260;

  friend bool operator==(const SensorSize&, const SensorSize&) = default;
};

/// 8-bit grayscale image, row-major.
struct Frame {
  Timestamp t = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(Timestamp t, int width, int height);
  Frame(Timestamp t, int width, int height, std::vector<std::uint8_t> pixels);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

}  // namespace evtrack
