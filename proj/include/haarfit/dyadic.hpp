#pragma once

// Dyadic interval and box arithmetic on [0,1]^d: locating the box that
// contains a point, counting boxes by measure, discrete mixed differences,
// and a sampling estimator for the mixed Hoelder constant.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "haarfit/combinat.hpp"
#include "haarfit/rng.hpp"

namespace haarfit {

using Point = std::vector<double>;

/// One dyadic interval [offset * 2^-level, (offset+1) * 2^-level).
struct DyadicInterval {
  int level = 0;
  std::uint64_t offset = 0;
};

/// Cartesian product of dyadic intervals, one per axis.
struct DyadicBox {
  std::vector<DyadicInterval> axes;

  int dim() const { return static_cast<int>(axes.size()); }

  int level_sum() const {
    int s = 0;
    for (const auto& a : axes) s += a.level;
    return s;
  }

  double measure() const { return std::ldexp(1.0, -level_sum()); }

  Point center() const {
    Point c(axes.size());
    for (std::size_t j = 0; j < axes.size(); ++j) {
      c[j] = std::ldexp(static_cast<double>(axes[j].offset) + 0.5, -axes[j].level);
    }
    return c;
  }

  /// Half-open containment; the interval touching 1 is treated as closed on
  /// the right so boundary samples are not rejected.
  bool contains(std::span<const double> x) const {
    if (x.size() != axes.size()) return false;
    for (std::size_t j = 0; j < axes.size(); ++j) {
      const double lo = std::ldexp(static_cast<double>(axes[j].offset), -axes[j].level);
      const double hi = std::ldexp(static_cast<double>(axes[j].offset) + 1.0, -axes[j].level);
      const bool right_edge = axes[j].offset + 1 == (std::uint64_t{1} << axes[j].level);
      if (x[j] < lo) return false;
      if (x[j] > hi) return false;
      if (x[j] == hi && !right_edge) return false;
    }
    return true;
  }
};

/// Offset of the level-`level` dyadic interval containing x in [0,1];
/// x == 1 is clamped into the last interval.
inline std::uint64_t dyadic_offset(double x, int level) {
  const std::uint64_t cells = std::uint64_t{1} << level;
  const double scaled = std::ldexp(x, level);
  std::uint64_t o = scaled <= 0.0 ? 0 : static_cast<std::uint64_t>(scaled);
  if (o >= cells) o = cells - 1;
  return o;
}

/// The unique dyadic box with the given per-axis levels that contains x.
inline DyadicBox locate_box(std::span<const double> x, std::span<const int> levels) {
  if (x.size() != levels.size()) {
    throw std::invalid_argument("haarfit: locate_box dimension mismatch between point and levels");
  }
  DyadicBox box;
  box.axes.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    box.axes[j].level = levels[j];
    box.axes[j].offset = dyadic_offset(x[j], levels[j]);
  }
  return box;
}

/// Number of dyadic boxes of measure 2^-m in [0,1]^d: 2^m * C(m+d-1, d-1).
inline std::uint64_t box_count(int d, int m) {
  if (d < 1 || m < 0) throw std::invalid_argument("haarfit: box_count requires d >= 1, m >= 0");
  const u128 v = detail::checked_mul_u128(
      pow2_u64(m), binomial_u64(static_cast<std::uint64_t>(m + d - 1), static_cast<std::uint64_t>(d - 1)));
  return detail::narrow_u64(v, "box_count");
}

/// Number of distinct shapes (level vectors summing to m): C(m+d-1, d-1).
inline std::uint64_t shape_count(int d, int m) {
  if (d < 1 || m < 0) throw std::invalid_argument("haarfit: shape_count requires d >= 1, m >= 0");
  return binomial_u64(static_cast<std::uint64_t>(m + d - 1), static_cast<std::uint64_t>(d - 1));
}

/// Axis descriptor for a general (non-dyadic) box: either the interval
/// [start, start+length) or the singleton {start}.
struct BoxAxis {
  double start = 0.0;
  double length = 0.0;
  bool is_interval = false;

  static BoxAxis interval(double start, double length) { return {start, length, true}; }
  static BoxAxis singleton(double at) { return {at, 0.0, false}; }
};

struct GeneralBox {
  std::vector<BoxAxis> axes;

  int live_count() const {
    int r = 0;
    for (const auto& a : axes) r += a.is_interval ? 1 : 0;
    return r;
  }

  /// Product of the live side lengths (the r-dimensional measure).
  double live_measure() const {
    double v = 1.0;
    for (const auto& a : axes) {
      if (a.is_interval) v *= a.length;
    }
    return v;
  }
};

/// Discrete mixed difference of f over `box`: the alternating sum of f over
/// the 2^r corners spanned by the live axes, with the singleton axes fixed.
template <class F>
double mixed_difference(F&& f, const GeneralBox& box) {
  std::vector<std::size_t> live;
  for (std::size_t j = 0; j < box.axes.size(); ++j) {
    if (box.axes[j].is_interval) live.push_back(j);
  }
  const std::size_t r = live.size();
  Point corner(box.axes.size());
  for (std::size_t j = 0; j < box.axes.size(); ++j) corner[j] = box.axes[j].start;

  double sum = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << r); ++mask) {
    int ones = 0;
    for (std::size_t i = 0; i < r; ++i) {
      const bool hi = (mask >> i) & 1u;
      corner[live[i]] = box.axes[live[i]].start + (hi ? box.axes[live[i]].length : 0.0);
      ones += hi ? 1 : 0;
    }
    const bool negate = ((static_cast<int>(r) - ones) & 1) != 0;
    const double v = f(std::span<const double>(corner));
    sum += negate ? -v : v;
  }
  return sum;
}

/// Statistical lower bound on the (c, alpha)-mixed-Hoelder constant of f:
/// max over sampled boxes of |delta_R f| / |R|^alpha.  Boxes are drawn with
/// every live-axis count r in {1,...,d} and log-uniform side lengths.
template <class F>
double estimate_mixed_holder_constant(F&& f, int d, double alpha, int trials, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("haarfit: estimate_mixed_holder_constant requires d >= 1");
  if (trials < 1) throw std::invalid_argument("haarfit: estimate_mixed_holder_constant requires trials >= 1");
  Rng rng(derive_seed(seed, 0x686F6C64657231ULL));
  std::vector<std::size_t> axes(static_cast<std::size_t>(d));
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (int r = 1; r <= d; ++r) {
      // random subset of r live axes (partial Fisher-Yates)
      for (std::size_t j = 0; j < axes.size(); ++j) axes[j] = j;
      for (int i = 0; i < r; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(d - i));
        std::swap(axes[static_cast<std::size_t>(i)], axes[j]);
      }
      GeneralBox box;
      box.axes.assign(static_cast<std::size_t>(d), BoxAxis{});
      for (int j = 0; j < d; ++j) box.axes[static_cast<std::size_t>(j)] = BoxAxis::singleton(rng.uniform01());
      for (int i = 0; i < r; ++i) {
        const double h = std::exp2(-rng.uniform(0.0, 10.0));
        const double a = rng.uniform01() * (1.0 - h);
        box.axes[axes[static_cast<std::size_t>(i)]] = BoxAxis::interval(a, h);
      }
      const double delta = std::abs(mixed_difference(f, box));
      const double ratio = delta / std::pow(box.live_measure(), alpha);
      if (ratio > best) best = ratio;
    }
  }
  return best;
}

}  // namespace haarfit
