#include <evtrack/blink.hpp>

#include <evtrack/error.hpp>

#include <cmath>
#include <numeric>

namespace evtrack {

void BlinkConfig::validate() const {
  if (window < 2) throw Error(ErrorCode::config, "blink window must be >= 2");
  if (!(lambda > 0.0)) throw Error(ErrorCode::config, "blink lambda must be positive");
  if (follow_on < 0) throw Error(ErrorCode::config, "blink follow-on count must be >= 0");
}

BlinkDetector::BlinkDetector(BlinkConfig config) : config_(config) { config_.validate(); }

double BlinkDetector::mean() const {
  if (buffer_.empty()) return 0.0;
  return std::accumulate(buffer_.begin(), buffer_.end(), 0.0) / static_cast<double>(buffer_.size());
}

double BlinkDetector::stddev() const {
  if (buffer_.size() < 2) return 0.0;
  const double mu = mean();
  double ss = 0.0;
  for (double r : buffer_) ss += (r - mu) * (r - mu);
  return std::sqrt(ss / static_cast<double>(buffer_.size() - 1));
}

bool BlinkDetector::observe(double eccentricity) {
  if (cooldown_ > 0) {
    --cooldown_;
    return true;
  }
  const bool full = buffer_.size() == static_cast<std::size_t>(config_.window);
  if (full && eccentricity > mean() + config_.lambda * stddev()) {
    cooldown_ = config_.follow_on;
    return true;
  }
  // Failed fits during warm-up carry no baseline information.
  if (!std::isfinite(eccentricity)) return false;
  buffer_.push_back(eccentricity);
  if (buffer_.size() > static_cast<std::size_t>(config_.window)) buffer_.pop_front();
  return false;
}

}  // namespace evtrack
