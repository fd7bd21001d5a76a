#pragma once

// Deterministic sparse-grid approximation from samples at dyadic box
// centers: the alternating binomial combination over level vectors, the
// full-indicator weight vector that realizes it as an inner product, and
// the closed-form projection onto the sparse embedding coordinates.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "haarfit/combinat.hpp"
#include "haarfit/dyadic.hpp"
#include "haarfit/embedding.hpp"

namespace haarfit {

/// Alternating binomial identity
///   sum_{k=0}^{min(d-1,m)} (-1)^k C(d-1,k) C(m-k+d-1, d-1)  ==  1
/// returned as computed (callers assert the value).
inline std::int64_t binomial_identity(int d, int m) {
  if (d < 1 || m < 1) throw std::invalid_argument("haarfit: binomial_identity requires d, m >= 1");
  std::int64_t acc = 0;
  const int kmax = std::min(d - 1, m);
  for (int k = 0; k <= kmax; ++k) {
    const std::uint64_t term =
        binomial_u64(static_cast<std::uint64_t>(d - 1), static_cast<std::uint64_t>(k)) *
        binomial_u64(static_cast<std::uint64_t>(m - k + d - 1), static_cast<std::uint64_t>(d - 1));
    if (term > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw std::overflow_error("haarfit: binomial_identity term overflow");
    }
    acc += (k & 1) ? -static_cast<std::int64_t>(term) : static_cast<std::int64_t>(term);
  }
  return acc;
}

/// Function values at the centers of all dyadic boxes of measure >= 2^-m,
/// stored behind a perfect arithmetic index (level vector, offsets) -> slot.
class CenterSamplePlan {
 public:
  CenterSamplePlan(int d, int m) : d_(d), m_(m) {
    if (d < 1 || m < 0) throw std::invalid_argument("haarfit: CenterSamplePlan requires d >= 1, m >= 0");
    level_begin_.resize(static_cast<std::size_t>(m) + 2, 0);
    std::uint64_t at = 0;
    for (int j = 0; j <= m; ++j) {
      level_begin_[static_cast<std::size_t>(j)] = at;
      at += box_count(d, j);
    }
    level_begin_[static_cast<std::size_t>(m) + 1] = at;
    values_.assign(at, 0.0);
  }

  int dim() const { return d_; }
  int scale() const { return m_; }
  std::uint64_t size() const { return values_.size(); }
  bool filled() const { return filled_; }

  /// Slot of the box with the given per-axis levels (sum <= m) and offsets.
  std::uint64_t index_of(std::span<const int> levels, std::span<const std::uint64_t> offsets) const {
    int j = 0;
    for (int l : levels) j += l;
    const std::uint64_t rank = composition_rank(levels);
    std::uint64_t off = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) off = (off << levels[i]) | offsets[i];
    return level_begin_[static_cast<std::size_t>(j)] + rank * pow2_u64(j) + off;
  }

  static Point center_of(std::span<const int> levels, std::span<const std::uint64_t> offsets) {
    Point c(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
      c[i] = std::ldexp(static_cast<double>(offsets[i]) + 0.5, -levels[i]);
    }
    return c;
  }

  /// Evaluate f at every box center in the plan.
  template <class F>
  void fill(F&& f) {
    for_each_box([&](std::span<const int> levels, std::span<const std::uint64_t> offsets, std::uint64_t slot) {
      const Point c = center_of(levels, offsets);
      values_[slot] = f(std::span<const double>(c));
    });
    filled_ = true;
  }

  double value(std::span<const int> levels, std::span<const std::uint64_t> offsets) const {
    require_filled();
    return values_[index_of(levels, offsets)];
  }

  double value_at(std::uint64_t slot) const {
    require_filled();
    return values_[slot];
  }

  void set_value(std::uint64_t slot, double v) {
    values_[slot] = v;
    filled_ = true;
  }

  /// Visit every box (levels, offsets, slot) in storage order.
  template <class Fn>
  void for_each_box(Fn&& fn) const {
    std::vector<std::uint64_t> offsets(static_cast<std::size_t>(d_), 0);
    for (int j = 0; j <= m_; ++j) {
      std::uint64_t slot = level_begin_[static_cast<std::size_t>(j)];
      for_each_composition(j, d_, [&](std::span<const int> levels) {
        const std::uint64_t cells = pow2_u64(j);
        for (std::uint64_t c = 0; c < cells; ++c) {
          std::uint64_t rest = c;
          for (std::size_t i = levels.size(); i-- > 0;) {
            const std::uint64_t width = std::uint64_t{1} << levels[i];
            offsets[i] = rest % width;
            rest /= width;
          }
          fn(levels, std::span<const std::uint64_t>(offsets), slot++);
        }
      });
    }
  }

 private:
  void require_filled() const {
    if (!filled_) throw std::logic_error("haarfit: CenterSamplePlan not filled");
  }

  int d_;
  int m_;
  bool filled_ = false;
  std::vector<std::uint64_t> level_begin_;
  std::vector<double> values_;
};

/// Sparse-grid combination at x from center samples:
///   sum_{k=0}^{min(d-1,m)} (-1)^k C(d-1,k) sum_{|levels| = m-k} f_levels(x),
/// where f_levels(x) is the plan value of the box with those levels
/// containing x.  Requires m <= plan scale.
inline double smolyak_evaluate(const CenterSamplePlan& plan, std::span<const double> x, int m) {
  const int d = plan.dim();
  if (static_cast<int>(x.size()) != d) {
    throw std::invalid_argument("haarfit: smolyak_evaluate point dimension mismatch");
  }
  if (m < 0 || m > plan.scale()) {
    throw std::invalid_argument("haarfit: smolyak_evaluate scale exceeds plan");
  }
  std::vector<std::uint64_t> offsets(static_cast<std::size_t>(d));
  double acc = 0.0;
  const int kmax = std::min(d - 1, m);
  for (int k = 0; k <= kmax; ++k) {
    const double coeff = static_cast<double>(
        binomial_u64(static_cast<std::uint64_t>(d - 1), static_cast<std::uint64_t>(k)));
    double shell = 0.0;
    for_each_composition(m - k, d, [&](std::span<const int> levels) {
      for (std::size_t i = 0; i < levels.size(); ++i) {
        offsets[i] = dyadic_offset(x[i], levels[i]);
      }
      shell += plan.value(levels, std::span<const std::uint64_t>(offsets));
    });
    acc += (k & 1) ? -coeff * shell : coeff * shell;
  }
  return acc;
}

inline double smolyak_evaluate(const CenterSamplePlan& plan, std::span<const double> x) {
  return smolyak_evaluate(plan, x, plan.scale());
}

/// Dense weights over the P = box_count(d, m) finest boxes.
struct FullEmbeddingWeights {
  int d = 0;
  int m = 0;
  std::vector<double> values;
};

/// Slot of a finest box (level sum exactly m) in FullEmbeddingWeights.
inline std::uint64_t finest_box_index(int m, std::span<const int> levels,
                                      std::span<const std::uint64_t> offsets) {
  const std::uint64_t rank = composition_rank(levels);
  std::uint64_t off = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) off = (off << levels[i]) | offsets[i];
  return rank * pow2_u64(m) + off;
}

/// Weight vector whose inner product with the finest-box indicator vector of
/// x reproduces the sparse-grid combination:  entry j collects the center
/// samples of every box of measure 2^(k-m) containing finest box j, with
/// weight (-1)^k C(d-1,k) / C(k+d-1, d-1).
inline FullEmbeddingWeights phi_prime(const CenterSamplePlan& plan) {
  if (!plan.filled()) throw std::logic_error("haarfit: phi_prime requires a filled plan");
  const int d = plan.dim();
  const int m = plan.scale();
  FullEmbeddingWeights w{d, m, std::vector<double>(box_count(d, m), 0.0)};

  const int kmax = std::min(d - 1, m);
  std::vector<double> coeff(static_cast<std::size_t>(kmax) + 1);
  for (int k = 0; k <= kmax; ++k) {
    const double c = static_cast<double>(binomial_u64(static_cast<std::uint64_t>(d - 1),
                                                      static_cast<std::uint64_t>(k))) /
                     static_cast<double>(binomial_u64(static_cast<std::uint64_t>(k + d - 1),
                                                      static_cast<std::uint64_t>(d - 1)));
    coeff[static_cast<std::size_t>(k)] = (k & 1) ? -c : c;
  }

  std::vector<int> sup_levels(static_cast<std::size_t>(d));
  std::vector<std::uint64_t> sup_offsets(static_cast<std::size_t>(d));
  std::uint64_t slot = 0;
  for_each_composition(m, d, [&](std::span<const int> levels) {
    const std::uint64_t cells = pow2_u64(m);
    std::vector<std::uint64_t> offsets(static_cast<std::size_t>(d));
    for (std::uint64_t c = 0; c < cells; ++c) {
      std::uint64_t rest = c;
      for (std::size_t i = levels.size(); i-- > 0;) {
        const std::uint64_t width = std::uint64_t{1} << levels[i];
        offsets[i] = rest % width;
        rest /= width;
      }
      double acc = 0.0;
      for (int k = 0; k <= kmax; ++k) {
        // supersets of the finest box with level sum m-k: subtract a total
        // of k levels, axis-wise, never below zero
        double shell = 0.0;
        for_each_composition(k, d, [&](std::span<const int> drop) {
          for (std::size_t i = 0; i < levels.size(); ++i) {
            if (drop[i] > levels[i]) return;
          }
          for (std::size_t i = 0; i < levels.size(); ++i) {
            sup_levels[i] = levels[i] - drop[i];
            sup_offsets[i] = offsets[i] >> drop[i];
          }
          shell += plan.value(std::span<const int>(sup_levels), std::span<const std::uint64_t>(sup_offsets));
        });
        acc += coeff[static_cast<std::size_t>(k)] * shell;
      }
      w.values[slot++] = acc;
    }
  });
  return w;
}

/// <Phi'(f), Psi'(x)> where Psi'(x) is the indicator vector of the finest
/// boxes containing x (one per shape).
inline double evaluate_full(const FullEmbeddingWeights& w, std::span<const double> x) {
  if (static_cast<int>(x.size()) != w.d) {
    throw std::invalid_argument("haarfit: evaluate_full point dimension mismatch");
  }
  std::vector<std::uint64_t> offsets(static_cast<std::size_t>(w.d));
  double acc = 0.0;
  for_each_composition(w.m, w.d, [&](std::span<const int> levels) {
    for (std::size_t i = 0; i < levels.size(); ++i) offsets[i] = dyadic_offset(x[i], levels[i]);
    acc += w.values[finest_box_index(w.m, levels, std::span<const std::uint64_t>(offsets))];
  });
  return acc;
}

/// Least-squares weights in the sparse embedding coordinates for the
/// sparse-grid approximant of f.  Because the brute-force row matrix has
/// orthogonal columns of equal norm, the projection is w = A^T g / 2^((d-1)m)
/// with g the combination values at the 2^(dm) cell centers; the residual
/// vanishes (the embedding spans the combination space).
template <class F>
std::vector<double> best_linear_weights(F&& f, int d, int m) {
  if (d < 1 || m < 0) throw std::invalid_argument("haarfit: best_linear_weights requires d >= 1, m >= 0");
  if (d * m > 24) throw std::invalid_argument("haarfit: best_linear_weights guard violated (d*m must be <= 24)");
  CenterSamplePlan plan(d, m);
  plan.fill(f);
  const TripleIndex idx(d, m);
  std::vector<double> w(idx.size(), 0.0);
  SparseEmbedding s;
  detail::for_each_cell_center(d, m, [&](std::span<const double> x) {
    const double g = smolyak_evaluate(plan, x, m);
    idx.embed(x, s);
    axpy(std::span<double>(w), g, s);
  });
  const double inv = std::ldexp(1.0, -(d - 1) * m);
  for (double& v : w) v *= inv;
  return w;
}

}  // namespace haarfit
