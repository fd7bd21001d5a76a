#pragma once

// Checked integer combinatorics shared by the dyadic-box counting formulas
// and the embedding layout tables.  All counting goes through unsigned
// 128-bit intermediates and throws std::overflow_error instead of wrapping.

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace haarfit {

using u128 = unsigned __int128;

namespace detail {

inline u128 checked_mul_u128(u128 a, u128 b) {
  if (a != 0 && b > std::numeric_limits<u128>::max() / a) {
    throw std::overflow_error("haarfit: 128-bit multiply overflow");
  }
  return a * b;
}

inline std::uint64_t narrow_u64(u128 v, const char* what) {
  if (v > std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error(std::string("haarfit: value does not fit in 64 bits: ") + what);
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

/// 2^e as a checked 64-bit integer (e <= 63).
inline std::uint64_t pow2_u64(int e) {
  if (e < 0 || e > 63) throw std::overflow_error("haarfit: pow2_u64 exponent out of range");
  return std::uint64_t{1} << e;
}

/// Binomial coefficient C(n, k), exact, throws on 64-bit overflow.
inline std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  u128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = detail::checked_mul_u128(r, n - k + i);
    r /= i;  // exact: r is C(n-k+i, i) after this step
  }
  return detail::narrow_u64(r, "binomial");
}

/// Number of nonnegative integer tuples of length `parts` summing to `total`:
/// C(total + parts - 1, parts - 1).  parts == 0 counts the empty tuple.
inline std::uint64_t composition_count(std::uint64_t total, std::uint64_t parts) {
  if (parts == 0) return total == 0 ? 1 : 0;
  return binomial_u64(total + parts - 1, parts - 1);
}

/// Visit all nonnegative tuples (a_0,...,a_{parts-1}) with sum == total in
/// lexicographic order.  fn receives a span that is reused between calls.
template <class Fn>
void for_each_composition(int total, int parts, Fn&& fn) {
  if (parts == 0) {
    if (total == 0) {
      fn(std::span<const int>{});
    }
    return;
  }
  std::vector<int> a(static_cast<std::size_t>(parts), 0);
  auto rec = [&](auto&& self, int pos, int rest) -> void {
    if (pos == parts - 1) {
      a[static_cast<std::size_t>(pos)] = rest;
      fn(std::span<const int>(a));
      return;
    }
    for (int v = 0; v <= rest; ++v) {
      a[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, rest - v);
    }
  };
  rec(rec, 0, total);
}

/// Lexicographic rank of a fixed-sum composition among all compositions of
/// the same sum and length.
inline std::uint64_t composition_rank(std::span<const int> a) {
  const int parts = static_cast<int>(a.size());
  std::uint64_t rank = 0;
  int rest = 0;
  for (int v : a) rest += v;
  for (int pos = 0; pos < parts; ++pos) {
    const int q = parts - 1 - pos;  // remaining free slots after this one
    for (int v = 0; v < a[static_cast<std::size_t>(pos)]; ++v) {
      rank += composition_count(static_cast<std::uint64_t>(rest - v), static_cast<std::uint64_t>(q));
    }
    rest -= a[static_cast<std::size_t>(pos)];
  }
  return rank;
}

}  // namespace haarfit
