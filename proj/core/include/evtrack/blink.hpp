#pragma once

#include <cstddef>
#include <deque>

namespace evtrack {

struct BlinkConfig {
  int window = 30;      // n
  double lambda = 3.0;  // threshold multiplier
  int follow_on = 3;    // k frames flagged after a detection

  void validate() const;
};

/// Adaptive-threshold blink detector over per-frame ellipse eccentricities.
/// A frame is a blink when its eccentricity exceeds mean + lambda * stddev
/// of the last n non-blink frames; the next k frames are flagged too.
/// Flagged values never enter the baseline buffer.
class BlinkDetector {
 public:
  explicit BlinkDetector(BlinkConfig config = {});

  /// `eccentricity` >= 1; +inf marks a frame whose fit failed.
  bool observe(double eccentricity);

  std::size_t buffered() const { return buffer_.size(); }
  int cooldown() const { return cooldown_; }
  double mean() const;
  double stddev() const;

 private:
  BlinkConfig config_;
  std::deque<double> buffer_;
  int cooldown_ = 0;
};

}  // namespace evtrack
