#pragma once

// Online least-squares engine shared by the ellipse, parabola and circle
// fits. A fit keeps the blended normal equations (A_bar, b_bar) and, on the
// per-event path, a cached inverse maintained by rank-1 Sherman-Morrison
// updates.

#include <evtrack/conic.hpp>
#include <evtrack/error.hpp>
#include <evtrack/types.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace evtrack {

template <int K>
using Vec = Eigen::Matrix<double, K, 1>;
template <int K>
using Mat = Eigen::Matrix<double, K, K>;

enum class QuadricKind { ellipse, parabola, circle };

/// (x^2, xy, y^2, x, y); the right-hand side is the constant 1.
Vec<5> feature_vector_ellipse(Point p);
/// (y^2, y, 1) in the eyelid frame; the right-hand side is x.
Vec<3> feature_vector_parabola(Point p);
/// (x, y, 1); the right-hand side is -(x^2 + y^2).
Vec<3> feature_vector_circle(Point p);

template <QuadricKind Kind>
struct QuadricTraits;

template <>
struct QuadricTraits<QuadricKind::ellipse> {
  static constexpr int dim = 5;
  static Vec<5> feature(Point p) { return feature_vector_ellipse(p); }
  static double target(Point) { return 1.0; }
};

template <>
struct QuadricTraits<QuadricKind::parabola> {
  static constexpr int dim = 3;
  static Vec<3> feature(Point p) { return feature_vector_parabola(p); }
  static double target(Point p) { return p.x; }
};

template <>
struct QuadricTraits<QuadricKind::circle> {
  static constexpr int dim = 3;
  static Vec<3> feature(Point p) { return feature_vector_circle(p); }
  static double target(Point p) { return -(p.x * p.x + p.y * p.y); }
};

template <int K>
struct Accumulation {
  Mat<K> A = Mat<K>::Zero();
  Vec<K> b = Vec<K>::Zero();
  std::size_t count = 0;
};

/// A = sum v v^T, b = sum target(p) v over the point set.
template <QuadricKind Kind>
Accumulation<QuadricTraits<Kind>::dim> batch_accumulate(std::span<const Point> points) {
  using Traits = QuadricTraits<Kind>;
  Accumulation<Traits::dim> acc;
  for (const Point& p : points) {
    const Vec<Traits::dim> v = Traits::feature(p);
    acc.A.noalias() += v * v.transpose();
    acc.b += Traits::target(p) * v;
  }
  acc.count = points.size();
  return acc;
}

struct FitConfig {
  double gamma = 0.2;         // weight kept on the old state when a frame arrives
  double gamma_prime = 0.9;   // weight kept on the old state per event update
  double delta = 2.0;         // gating distance, pixels
  int events_per_fit = 20;    // N
  int refresh_period = 100;   // rank-1 updates between full re-inversions

  /// Throws Error{config} on out-of-range values.
  void validate() const;
};

inline constexpr double kSmwBreakdownTolerance = 1e-12;
inline constexpr double kSingularThreshold = 1e-14;

template <int K>
class FitState {
 public:
  /// A_bar = I, b_bar = 0, A_inv = I.
  static FitState identity() {
    FitState s;
    s.a_bar_.setIdentity();
    s.a_inv_.setIdentity();
    s.b_bar_.setZero();
    s.inverse_fresh_ = true;
    return s;
  }

  static FitState from_accumulation(const Accumulation<K>& acc) {
    FitState s;
    s.a_bar_ = acc.A;
    s.b_bar_ = acc.b;
    s.observation_count_ = acc.count;
    s.inverse_fresh_ = false;
    return s;
  }

  /// A_bar <- gamma A_bar + (1 - gamma) A, same for b. Invalidates A_inv.
  void blend_batch(const Mat<K>& A, const Vec<K>& b, std::size_t count, double gamma) {
    a_bar_ = gamma * a_bar_ + (1.0 - gamma) * A;
    b_bar_ = gamma * b_bar_ + (1.0 - gamma) * b;
    observation_count_ += count;
    inverse_fresh_ = false;
  }

  void blend_batch(const Accumulation<K>& acc, double gamma) {
    blend_batch(acc.A, acc.b, acc.count, gamma);
  }

  /// Rank-1 update of the cached inverse for one observation with feature
  /// `v` and right-hand side `target`. Re-inverts fully every
  /// `refresh_period` updates (0 disables the periodic refresh).
  void smw_update(const Vec<K>& v, double target, double gamma_prime, int refresh_period) {
    if (!(gamma_prime > 0.0 && gamma_prime <= 1.0))
      throw Error(ErrorCode::config, "gamma_prime must lie in (0, 1]");
    if (!inverse_fresh_) refresh();
    const double w = 1.0 - gamma_prime;
    const Vec<K> av = a_inv_ * v;
    const double denom = gamma_prime + w * v.dot(av);
    if (!(denom > kSmwBreakdownTolerance))
      throw Error(ErrorCode::numerical_breakdown, "Sherman-Morrison denominator vanished");
    a_inv_ = (a_inv_ - (w / denom) * (av * av.transpose())) / gamma_prime;
    a_bar_ = gamma_prime * a_bar_ + w * (v * v.transpose());
    b_bar_ = gamma_prime * b_bar_ + (w * target) * v;
    ++observation_count_;
    ++updates_since_refresh_;
    if (refresh_period > 0 && updates_since_refresh_ >= refresh_period) refresh();
  }

  /// Full re-inversion of A_bar. Throws Error{singular_matrix}.
  void refresh() {
    Eigen::FullPivLU<Mat<K>> lu(a_bar_);
    lu.setThreshold(kSingularThreshold);
    if (!lu.isInvertible()) throw Error(ErrorCode::singular_matrix, "A_bar is not invertible");
    a_inv_ = lu.inverse();
    a_inv_ = 0.5 * (a_inv_ + a_inv_.transpose()).eval();
    inverse_fresh_ = true;
    updates_since_refresh_ = 0;
  }

  /// A_inv b_bar. Requires at least K observations.
  Vec<K> solve() {
    if (observation_count_ < static_cast<std::size_t>(K))
      throw Error(ErrorCode::singular_matrix, "fewer observations than parameters");
    if (!inverse_fresh_) refresh();
    return a_inv_ * b_bar_;
  }

  const Mat<K>& a_bar() const { return a_bar_; }
  const Vec<K>& b_bar() const { return b_bar_; }
  const Mat<K>& a_inv() const { return a_inv_; }
  bool inverse_fresh() const { return inverse_fresh_; }
  std::size_t observation_count() const { return observation_count_; }

 private:
  FitState() = default;

  Mat<K> a_bar_ = Mat<K>::Zero();
  Vec<K> b_bar_ = Vec<K>::Zero();
  Mat<K> a_inv_ = Mat<K>::Zero();
  bool inverse_fresh_ = false;
  std::size_t observation_count_ = 0;
  int updates_since_refresh_ = 0;
};

inline EllipseParams to_ellipse(const Vec<5>& x) { return {x[0], x[1], x[2], x[3], x[4]}; }
inline ParabolaParams to_parabola(const Vec<3>& x) { return {x[0], x[1], x[2]}; }

/// Converts the (g, f, c) solution of x^2 + y^2 + g x + f y + c = 0.
/// Throws Error{degenerate_conic} when the radius is not real.
CircleParams to_circle(const Vec<3>& x);

}  // namespace evtrack
