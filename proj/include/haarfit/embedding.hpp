#pragma once

// The sparse point embedding Psi : [0,1]^d -> R^p built from signed
// indicators of dyadic boxes.  Each coordinate of the embedding is labeled
// by a triple (k, live-axis vector, box); TripleIndex fixes one canonical
// enumeration of the triples and computes flat coordinate indices
// arithmetically, so embedding a point costs O(1) per nonzero.
//
// Canonical enumeration order: ascending k, then the live-axis vectors of
// order k in lexicographic order, then box shapes in lexicographic order of
// the sign-axis levels (the level of the first live axis is the remainder),
// then box offsets row-major along the live axes.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "haarfit/combinat.hpp"
#include "haarfit/dyadic.hpp"

namespace haarfit {

/// Sparse vector in R^p, indices strictly increasing.
struct SparseEmbedding {
  std::vector<std::uint64_t> index;
  std::vector<double> value;

  std::size_t size() const { return index.size(); }

  void clear() {
    index.clear();
    value.clear();
  }

  void reserve(std::size_t n) {
    index.reserve(n);
    value.reserve(n);
  }

  void push(std::uint64_t i, double v) {
    index.push_back(i);
    value.push_back(v);
  }
};

inline double dot(std::span<const double> w, const SparseEmbedding& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.index.size(); ++i) acc += w[s.index[i]] * s.value[i];
  return acc;
}

/// w += alpha * s along the sparse support.
inline void axpy(std::span<double> w, double alpha, const SparseEmbedding& s) {
  for (std::size_t i = 0; i < s.index.size(); ++i) w[s.index[i]] += alpha * s.value[i];
}

/// One embedding coordinate label: live axes (first is always axis 0) and
/// the dyadic box, which is the full interval on every non-live axis.
struct Triple {
  std::vector<int> live_axes;  // strictly increasing, live_axes[0] == 0
  DyadicBox box;

  int order() const { return static_cast<int>(live_axes.size()) - 1; }  // k
};

/// Embedding dimension p = sum_k 2^(m-k) C(m,k) C(d-1,k).
inline std::uint64_t embedding_dim(int d, int m) {
  if (d < 1 || m < 0) throw std::invalid_argument("haarfit: embedding_dim requires d >= 1, m >= 0");
  u128 p = 0;
  const int kmax = std::min(d - 1, m);
  for (int k = 0; k <= kmax; ++k) {
    u128 term = detail::checked_mul_u128(
        pow2_u64(m - k), binomial_u64(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)));
    term = detail::checked_mul_u128(term,
                                    binomial_u64(static_cast<std::uint64_t>(d - 1), static_cast<std::uint64_t>(k)));
    p += term;
  }
  return detail::narrow_u64(p, "embedding_dim");
}

/// ||Psi(x)||^2 = sum_k 2^-k C(m,k) C(d-1,k); identical for every x.
inline double embedding_norm_sq(int d, int m) {
  if (d < 1 || m < 0) throw std::invalid_argument("haarfit: embedding_norm_sq requires d >= 1, m >= 0");
  double s = 0.0;
  const int kmax = std::min(d - 1, m);
  for (int k = 0; k <= kmax; ++k) {
    s += std::ldexp(static_cast<double>(binomial_u64(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)) *
                                        binomial_u64(static_cast<std::uint64_t>(d - 1), static_cast<std::uint64_t>(k))),
                    -k);
  }
  return s;
}

class TripleIndex {
 public:
  static constexpr const char* layout_tag = "k-asc.r-lex.shape-lex.offset-rowmajor.v1";

  TripleIndex(int d, int m) : d_(d), m_(m) {
    if (d < 1 || m < 0) throw std::invalid_argument("haarfit: TripleIndex requires d >= 1, m >= 0");
    p_ = embedding_dim(d, m);
    const int kmax = std::min(d - 1, m);
    sign_axis_sets_.resize(static_cast<std::size_t>(kmax) + 1);
    shapes_.resize(static_cast<std::size_t>(kmax) + 1);
    block_start_.resize(static_cast<std::size_t>(kmax) + 1);
    k_begin_.resize(static_cast<std::size_t>(kmax) + 2, 0);
    value_scale_.resize(static_cast<std::size_t>(kmax) + 1);

    std::uint64_t at = 0;
    nnz_ = 0;
    for (int k = 0; k <= kmax; ++k) {
      k_begin_[static_cast<std::size_t>(k)] = at;
      build_axis_sets(k);
      build_shapes(k);
      const std::uint64_t per_block =
          binomial_u64(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)) * pow2_u64(m - k);
      auto& starts = block_start_[static_cast<std::size_t>(k)];
      starts.resize(sign_axis_sets_[static_cast<std::size_t>(k)].size());
      for (std::size_t r = 0; r < starts.size(); ++r) {
        starts[r] = at;
        at += per_block;
      }
      nnz_ += binomial_u64(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)) *
              binomial_u64(static_cast<std::uint64_t>(d - 1), static_cast<std::uint64_t>(k));
      value_scale_[static_cast<std::size_t>(k)] = std::ldexp(1.0, -(k / 2)) * ((k & 1) ? std::numbers::sqrt2 / 2.0 : 1.0);
    }
    k_begin_[static_cast<std::size_t>(kmax) + 1] = at;
    norm_sq_ = embedding_norm_sq(d, m);
  }

  int dim() const { return d_; }
  int scale() const { return m_; }
  std::uint64_t size() const { return p_; }              // p
  std::uint64_t nonzeros_per_point() const { return nnz_; }
  double norm_sq() const { return norm_sq_; }
  int max_order() const { return static_cast<int>(shapes_.size()) - 1; }

  /// Live-axis vectors of order k, lexicographic; each starts with axis 0.
  const std::vector<std::vector<int>>& axis_sets(int k) const {
    return sign_axis_sets_[static_cast<std::size_t>(k)];
  }

  /// Compute Psi(x) into `out` (cleared first).  Entries come out with
  /// strictly increasing indices.
  void embed(std::span<const double> x, SparseEmbedding& out) const {
    if (static_cast<int>(x.size()) != d_) {
      throw std::invalid_argument("haarfit: embed point dimension mismatch");
    }
    out.clear();
    out.reserve(nnz_);
    const int kmax = max_order();
    for (int k = 0; k <= kmax; ++k) {
      const auto& rsets = sign_axis_sets_[static_cast<std::size_t>(k)];
      const auto& shapes = shapes_[static_cast<std::size_t>(k)];
      const std::uint64_t stride = pow2_u64(m_ - k);
      const double scale = value_scale_[static_cast<std::size_t>(k)];
      const std::size_t tuple = static_cast<std::size_t>(k) + 1;
      for (std::size_t r = 0; r < rsets.size(); ++r) {
        const auto& axes = rsets[r];
        std::uint64_t at = block_start_[static_cast<std::size_t>(k)][r];
        for (std::size_t s = 0; s < shapes.size(); s += tuple, at += stride) {
          std::uint64_t off = 0;
          int sign = 1;
          for (std::size_t i = 0; i < tuple; ++i) {
            const int level = shapes[s + i];
            const double c = x[static_cast<std::size_t>(axes[i])];
            // offset at level+1 resolves both the box offset and the half
            const std::uint64_t fine = dyadic_offset(c, level + 1);
            if (i > 0 && (fine & 1u) == 0) sign = -sign;
            off = (off << level) | (fine >> 1);
          }
          out.push(at + off, sign > 0 ? scale : -scale);
        }
      }
    }
  }

  SparseEmbedding embed(std::span<const double> x) const {
    SparseEmbedding s;
    embed(x, s);
    return s;
  }

  /// Flat index of the triple with order k, axis-set rank r_rank, live-axis
  /// levels `levels` (length k+1) and live-axis offsets `offsets`.
  std::uint64_t flat_index(int k, std::size_t r_rank, std::span<const int> levels,
                           std::span<const std::uint64_t> offsets) const {
    const std::uint64_t stride = pow2_u64(m_ - k);
    std::uint64_t shape_rank = 0;
    int budget = m_ - k;
    for (std::size_t j = 1; j < levels.size(); ++j) {
      const int q = static_cast<int>(levels.size()) - 1 - static_cast<int>(j);
      for (int v = 0; v < levels[j]; ++v) {
        // tuples with the remaining slots summing to at most budget - v
        shape_rank += binomial_u64(static_cast<std::uint64_t>(budget - v + q), static_cast<std::uint64_t>(q));
      }
      budget -= levels[j];
    }
    std::uint64_t off = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) off = (off << levels[i]) | offsets[i];
    return block_start_[static_cast<std::size_t>(k)][r_rank] + shape_rank * stride + off;
  }

  /// Inverse of the enumeration: the triple labeling coordinate `index`.
  Triple triple_at(std::uint64_t index) const {
    if (index >= p_) throw std::out_of_range("haarfit: triple_at index out of range");
    const int k = order_of(index);
    const std::uint64_t per_block =
        binomial_u64(static_cast<std::uint64_t>(m_), static_cast<std::uint64_t>(k)) * pow2_u64(m_ - k);
    const std::uint64_t in_k = index - k_begin_[static_cast<std::size_t>(k)];
    const std::size_t r_rank = static_cast<std::size_t>(in_k / per_block);
    const std::uint64_t stride = pow2_u64(m_ - k);
    const std::uint64_t in_block = in_k % per_block;
    const std::size_t shape_idx = static_cast<std::size_t>(in_block / stride);
    std::uint64_t off = in_block % stride;

    Triple t;
    t.live_axes = sign_axis_sets_[static_cast<std::size_t>(k)][r_rank];
    t.box.axes.assign(static_cast<std::size_t>(d_), DyadicInterval{0, 0});
    const std::size_t tuple = static_cast<std::size_t>(k) + 1;
    const int* shape = &shapes_[static_cast<std::size_t>(k)][shape_idx * tuple];
    for (std::size_t i = tuple; i-- > 0;) {
      const int level = shape[i];
      t.box.axes[static_cast<std::size_t>(t.live_axes[i])] =
          DyadicInterval{level, off & ((std::uint64_t{1} << level) - 1)};
      off >>= level;
    }
    return t;
  }

  /// k of the triple that labels coordinate `index`.
  int order_of(std::uint64_t index) const {
    int k = 0;
    while (k + 1 <= max_order() && index >= k_begin_[static_cast<std::size_t>(k) + 1]) ++k;
    return k;
  }

  /// Coordinate magnitude 2^(-k/2) for order k.
  double value_magnitude(int k) const { return value_scale_[static_cast<std::size_t>(k)]; }

 private:
  void build_axis_sets(int k) {
    auto& out = sign_axis_sets_[static_cast<std::size_t>(k)];
    std::vector<int> cur(static_cast<std::size_t>(k) + 1);
    cur[0] = 0;
    auto rec = [&](auto&& self, int pos, int from) -> void {
      if (pos == k + 1) {
        out.push_back(cur);
        return;
      }
      for (int a = from; a < d_; ++a) {
        cur[static_cast<std::size_t>(pos)] = a;
        self(self, pos + 1, a + 1);
      }
    };
    rec(rec, 1, 1);
  }

  void build_shapes(int k) {
    auto& out = shapes_[static_cast<std::size_t>(k)];
    const int budget = m_ - k;
    std::vector<int> cur(static_cast<std::size_t>(k) + 1);
    // lexicographic in the sign-axis levels (positions 1..k); position 0
    // absorbs the remainder so every tuple sums to m-k
    auto rec = [&](auto&& self, int pos, int rest) -> void {
      if (pos == k + 1) {
        cur[0] = rest;
        for (int v : cur) out.push_back(v);
        return;
      }
      for (int v = 0; v <= rest; ++v) {
        cur[static_cast<std::size_t>(pos)] = v;
        self(self, pos + 1, rest - v);
      }
    };
    rec(rec, 1, budget);
  }

  int d_;
  int m_;
  std::uint64_t p_ = 0;
  std::uint64_t nnz_ = 0;
  double norm_sq_ = 0.0;
  std::vector<std::vector<std::vector<int>>> sign_axis_sets_;  // per k
  std::vector<std::vector<int>> shapes_;                       // per k, flattened (k+1)-tuples
  std::vector<std::vector<std::uint64_t>> block_start_;        // per k, per axis-set rank
  std::vector<std::uint64_t> k_begin_;
  std::vector<double> value_scale_;
};

template <class T>
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<T> a;

  explicit SquareMatrix(std::size_t n_) : n(n_), a(n_ * n_, T{}) {}
  T& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

namespace detail {

inline void check_gram_guard(int d, int m) {
  if (d < 1 || m < 0) throw std::invalid_argument("haarfit: gram requires d >= 1, m >= 0");
  if (d * m > 24) throw std::invalid_argument("haarfit: gram guard violated (d*m must be <= 24)");
}

template <class Fn>
void for_each_cell_center(int d, int m, Fn&& fn) {
  const std::uint64_t cells_per_axis = pow2_u64(m);
  std::uint64_t total = 1;
  for (int j = 0; j < d; ++j) total *= cells_per_axis;
  Point x(static_cast<std::size_t>(d));
  for (std::uint64_t c = 0; c < total; ++c) {
    std::uint64_t rest = c;
    for (int j = 0; j < d; ++j) {
      x[static_cast<std::size_t>(j)] = std::ldexp(static_cast<double>(rest % cells_per_axis) + 0.5, -m);
      rest /= cells_per_axis;
    }
    fn(std::span<const double>(x));
  }
}

}  // namespace detail

/// Exact Gram data of the brute-force row matrix A (one row Psi(x_c) per
/// center of the regular 2^(dm) cell grid):  (A^T A)_{ij} equals
/// counts(i,j) * 2^(-(k_i+k_j)/2), where counts holds signed integer sums.
inline SquareMatrix<std::int64_t> gram_counts(int d, int m) {
  detail::check_gram_guard(d, m);
  const TripleIndex idx(d, m);
  SquareMatrix<std::int64_t> counts(idx.size());
  SparseEmbedding s;
  detail::for_each_cell_center(d, m, [&](std::span<const double> x) {
    idx.embed(x, s);
    for (std::size_t a = 0; a < s.size(); ++a) {
      const int sa = s.value[a] > 0 ? 1 : -1;
      for (std::size_t b = 0; b < s.size(); ++b) {
        const int sb = s.value[b] > 0 ? 1 : -1;
        counts(s.index[a], s.index[b]) += sa * sb;
      }
    }
  });
  return counts;
}

/// Dense A^T A over the full cell grid (Lemma-4 verification harness).
inline SquareMatrix<double> gram_matrix(int d, int m) {
  const auto counts = gram_counts(d, m);
  const TripleIndex idx(d, m);
  SquareMatrix<double> g(counts.n);
  for (std::size_t i = 0; i < counts.n; ++i) {
    const double vi = idx.value_magnitude(idx.order_of(i));
    for (std::size_t j = 0; j < counts.n; ++j) {
      const double vj = idx.value_magnitude(idx.order_of(j));
      g(i, j) = static_cast<double>(counts(i, j)) * vi * vj;
    }
  }
  return g;
}

}  // namespace haarfit
