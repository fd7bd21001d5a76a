#pragma once

// Randomized Kaczmarz fitting over uniformly sampled function values, model
// evaluation, exact integration of the fitted model, spin cycling over torus
// shifts, and the noiseless/noise split used to audit the error recursion.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "haarfit/dyadic.hpp"
#include "haarfit/embedding.hpp"

namespace haarfit {

struct Sample {
  Point point;
  double value = 0.0;
};

struct FitConfig {
  double c1 = 3.5;                            // oversampling constant
  std::optional<std::uint64_t> n_override;    // explicit step count
  std::uint64_t seed = 0;                     // recorded in the model file
  double log_base = std::numbers::e;          // base of the log in the default step count
};

/// Arithmetic counters for cost-scaling checks.
struct FitCounters {
  std::uint64_t steps = 0;
  std::uint64_t embed_entries = 0;  // nonzeros touched while embedding
  std::uint64_t flops = 0;          // multiply-adds in dot + axpy
};

/// Default step count ceil(c1 * p * log(2^m)); at least 1.
inline std::uint64_t default_sample_count(double c1, std::uint64_t p, int m,
                                          double log_base = std::numbers::e) {
  const double raw = c1 * static_cast<double>(p) * (static_cast<double>(m) * std::numbers::ln2 / std::log(log_base));
  const double n = std::ceil(raw);
  return n < 1.0 ? 1 : static_cast<std::uint64_t>(n);
}

/// One Kaczmarz projection: w += (b - <row, w>) / norm_sq * row.
/// Touches only the sparse support; afterwards <row, w> == b up to roundoff.
inline void kaczmarz_step(std::span<double> w, const SparseEmbedding& row, double b, double norm_sq) {
  if (!(norm_sq > 0.0)) throw std::invalid_argument("haarfit: kaczmarz_step requires norm_sq > 0");
  const double resid = (b - dot(w, row)) / norm_sq;
  axpy(w, resid, row);
}

/// Fitted model: weights in the canonical embedding layout plus the value
/// offset that was subtracted from the samples before iterating.
struct Approximant {
  TripleIndex layout;
  std::vector<double> weights;
  double centering = 0.0;
  double c1 = 3.5;
  std::uint64_t seed = 0;

  int dim() const { return layout.dim(); }
  int scale() const { return layout.scale(); }
};

/// Reusable-scratch evaluator: f~(x) = <weights, Psi(x)> + centering.
class Evaluator {
 public:
  explicit Evaluator(const Approximant& a) : a_(&a) {}

  double operator()(std::span<const double> x) {
    a_->layout.embed(x, scratch_);
    return dot(std::span<const double>(a_->weights), scratch_) + a_->centering;
  }

 private:
  const Approximant* a_;
  SparseEmbedding scratch_;
};

inline double evaluate(const Approximant& a, std::span<const double> x) {
  return Evaluator(a)(x);
}

/// Integral of the fitted model over [0,1]^d: every order-k >= 1 coordinate
/// integrates to zero and each order-0 indicator to 2^-m, so only the first
/// 2^m weights contribute.
inline double integrate(const Approximant& a) {
  const std::uint64_t block = pow2_u64(a.scale());
  double s = 0.0;
  for (std::uint64_t i = 0; i < block; ++i) s += a.weights[i];
  return std::ldexp(s, -a.scale()) + a.centering;
}

/// Fit by streaming samples from `next` (signature bool(Sample&), returning
/// false when exhausted).  Runs n steps where n comes from the config; the
/// first sample's value becomes the centering offset.
template <class NextSample>
Approximant fit_stream(NextSample&& next, int d, int m, const FitConfig& config,
                       FitCounters* counters = nullptr) {
  TripleIndex layout(d, m);
  const std::uint64_t n =
      config.n_override ? *config.n_override : default_sample_count(config.c1, layout.size(), m, config.log_base);
  if (n < 1) throw std::invalid_argument("haarfit: fit requires at least one sample");

  std::vector<double> w(layout.size(), 0.0);
  const double norm_sq = layout.norm_sq();
  SparseEmbedding row;
  Sample s;
  double centering = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!next(s)) {
      throw std::runtime_error("haarfit: sample stream exhausted after " + std::to_string(i) +
                               " of " + std::to_string(n) + " samples");
    }
    if (static_cast<int>(s.point.size()) != d) {
      throw std::invalid_argument("haarfit: fit sample dimension mismatch");
    }
    if (i == 0) centering = s.value;
    layout.embed(std::span<const double>(s.point), row);
    kaczmarz_step(std::span<double>(w), row, s.value - centering, norm_sq);
    if (counters != nullptr) {
      counters->steps += 1;
      counters->embed_entries += row.size();
      counters->flops += 4 * row.size();  // dot + axpy, one mul-add each per nonzero
    }
  }
  return Approximant{std::move(layout), std::move(w), centering, config.c1, config.seed};
}

inline Approximant fit(std::span<const Sample> samples, int d, int m, const FitConfig& config,
                       FitCounters* counters = nullptr) {
  std::size_t at = 0;
  return fit_stream(
      [&](Sample& out) {
        if (at >= samples.size()) return false;
        out = samples[at++];
        return true;
      },
      d, m, config, counters);
}

/// x + gamma on the torus, componentwise; exact passthrough for zero shifts.
inline Point torus_add(std::span<const double> x, std::span<const double> gamma) {
  Point y(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (gamma[j] == 0.0) {
      y[j] = x[j];
    } else {
      double v = x[j] + gamma[j];
      if (v >= 1.0) v -= 1.0;
      y[j] = v;
    }
  }
  return y;
}

struct SpinConfig {
  std::vector<Point> shifts;
};

/// Shift-and-average ensemble: one model per torus shift, all fitted from
/// the same samples (shifting a sample point does not change its value).
class SpinEnsemble {
 public:
  SpinEnsemble(std::vector<Approximant> models, std::vector<Point> shifts)
      : models_(std::move(models)), shifts_(std::move(shifts)) {}

  double operator()(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < models_.size(); ++i) {
      const Point shifted = torus_add(x, std::span<const double>(shifts_[i]));
      acc += evaluate(models_[i], std::span<const double>(shifted));
    }
    return acc / static_cast<double>(models_.size());
  }

  /// Integral of the averaged evaluator (shifting preserves the integral).
  double integrate() const {
    double acc = 0.0;
    for (const auto& m : models_) acc += haarfit::integrate(m);
    return acc / static_cast<double>(models_.size());
  }

  const std::vector<Approximant>& models() const { return models_; }
  const std::vector<Point>& shifts() const { return shifts_; }

 private:
  std::vector<Approximant> models_;
  std::vector<Point> shifts_;
};

inline SpinEnsemble spin_cycle(std::span<const Sample> samples, int d, int m, const FitConfig& config,
                               const SpinConfig& spin) {
  if (spin.shifts.empty()) throw std::invalid_argument("haarfit: spin_cycle requires at least one shift");
  for (const auto& g : spin.shifts) {
    if (static_cast<int>(g.size()) != d) throw std::invalid_argument("haarfit: spin shift dimension mismatch");
  }
  std::vector<Approximant> models;
  models.reserve(spin.shifts.size());
  for (const auto& g : spin.shifts) {
    std::size_t at = 0;
    models.push_back(fit_stream(
        [&](Sample& out) {
          if (at >= samples.size()) return false;
          out.point = torus_add(std::span<const double>(samples[at].point), std::span<const double>(g));
          out.value = samples[at].value;
          ++at;
          return true;
        },
        d, m, config));
  }
  return SpinEnsemble(std::move(models), spin.shifts);
}

/// Per-step audit of the split w*_n = w_n + e_n, where w_n iterates on the
/// noiseless right-hand side <w_ref, Psi(X_n)> and e_n on the residuals
/// eps_n.  Checks the identity and the orthogonality bound
/// ||e_n||^2 <= sum_j eps_j^2 / ||Psi(X_j)||^2 at every step.
struct NoiseLedger {
  std::size_t steps = 0;
  double max_identity_error = 0.0;   // max_n ||w*_n - (w_n + e_n)||_inf
  double max_bound_excess = 0.0;     // max_n (||e_n||^2 - bound_n), <= 0 when clean
  bool bound_ok = true;
  std::vector<double> noise_norm_sq;  // ||e_n||^2 per step
  std::vector<double> bound;          // sum_j<=n eps_j^2 / norm_sq per step
};

inline NoiseLedger noise_ledger(std::span<const Sample> samples, int d, int m,
                                std::span<const double> w_ref) {
  TripleIndex layout(d, m);
  if (w_ref.size() != layout.size()) {
    throw std::invalid_argument("haarfit: noise_ledger reference weight length mismatch");
  }
  const double norm_sq = layout.norm_sq();
  std::vector<double> w_star(layout.size(), 0.0);
  std::vector<double> w_clean(layout.size(), 0.0);
  std::vector<double> e(layout.size(), 0.0);

  NoiseLedger ledger;
  ledger.noise_norm_sq.reserve(samples.size());
  ledger.bound.reserve(samples.size());
  SparseEmbedding row;
  double bound_acc = 0.0;
  for (const Sample& s : samples) {
    layout.embed(std::span<const double>(s.point), row);
    const double b_clean = dot(w_ref, row);
    const double eps = s.value - b_clean;
    kaczmarz_step(std::span<double>(w_star), row, s.value, norm_sq);
    kaczmarz_step(std::span<double>(w_clean), row, b_clean, norm_sq);
    kaczmarz_step(std::span<double>(e), row, eps, norm_sq);
    bound_acc += eps * eps / norm_sq;

    double e_sq = 0.0;
    double ident = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      e_sq += e[i] * e[i];
      ident = std::max(ident, std::abs(w_star[i] - (w_clean[i] + e[i])));
    }
    ledger.steps += 1;
    ledger.noise_norm_sq.push_back(e_sq);
    ledger.bound.push_back(bound_acc);
    ledger.max_identity_error = std::max(ledger.max_identity_error, ident);
    const double excess = e_sq - bound_acc;
    ledger.max_bound_excess = std::max(ledger.max_bound_excess, excess);
    // roundoff slack on an otherwise exact inequality
    if (excess > 1e-12 * std::max(1.0, bound_acc)) ledger.bound_ok = false;
  }
  return ledger;
}

}  // namespace haarfit
