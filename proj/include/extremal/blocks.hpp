#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/functional.hpp"
#include "extremal/series.hpp"

namespace extremal {

// Threshold-normalized view X_{n,i} = (X_i/u) 1{X_i > u} of a raw series.
// Values are computed on access unless materialized. The raw data must
// outlive the view.
class NormalizedSeries {
 public:
  NormalizedSeries(std::span<const double> raw, double u, bool materialize = false) : raw_(raw), u_(u) {
    if (!std::isfinite(u_)) throw Error(ErrorCode::kInvalidThreshold, "threshold is not finite");
    if (u_ <= 0.0 && count_exceedances(raw_, u_) > 0) {
      throw Error(ErrorCode::kInvalidThreshold,
                  "threshold u=" + std::to_string(u_) + " must be positive when observations exceed it");
    }
    if (materialize) {
      values_.resize(raw_.size());
      for (std::size_t i = 0; i < raw_.size(); ++i) values_[i] = compute(i);
    }
  }

  std::size_t size() const noexcept { return raw_.size(); }
  double threshold() const noexcept { return u_; }
  bool materialized() const noexcept { return !values_.empty(); }
  std::span<const double> raw() const noexcept { return raw_; }

  bool exceeds(std::size_t i) const { return raw_[i] > u_; }
  double operator[](std::size_t i) const { return values_.empty() ? compute(i) : values_[i]; }

  // Window of length len starting at 0-based index start. Uses scratch unless
  // the view is materialized.
  std::span<const double> window(std::size_t start, std::size_t len, std::vector<double>& scratch) const {
    if (!values_.empty()) return std::span<const double>(values_).subspan(start, len);
    scratch.resize(len);
    for (std::size_t j = 0; j < len; ++j) scratch[j] = compute(start + j);
    return scratch;
  }

 private:
  double compute(std::size_t i) const {
    if (!(raw_[i] > u_)) return 0.0;
    // keep exceedances strictly above 1 even when X_i/u rounds down to 1
    const double q = raw_[i] / u_;
    return q > 1.0 ? q : std::nextafter(1.0, 2.0);
  }

  std::span<const double> raw_;
  double u_;
  std::vector<double> values_;
};

inline NormalizedSeries normalize(const Series& series, double u, bool materialize = false) {
  return NormalizedSeries(series.values(), u, materialize);
}

inline NormalizedSeries normalize(const Series& series, const ResolvedThreshold& thr, bool materialize = false) {
  return NormalizedSeries(series.values(), thr.u, materialize);
}

enum class BlockMode { kSliding, kDisjoint };

inline const char* to_string(BlockMode mode) { return mode == BlockMode::kSliding ? "sliding" : "disjoint"; }

namespace detail {

// Maximum of every length-w window of v(0..n-1) via a monotone deque.
// Element j is max(v(j), ..., v(j+w-1)) for j in [0, n-w].
template <typename Access>
std::vector<double> sliding_window_max(Access v, std::size_t n, std::size_t w) {
  std::vector<double> out;
  if (w == 0 || w > n) return out;
  out.reserve(n - w + 1);
  std::deque<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = v(i);
    while (!idx.empty() && v(idx.back()) <= x) idx.pop_back();
    idx.push_back(i);
    if (idx.front() + w <= i) idx.pop_front();
    if (i + 1 >= w) out.push_back(v(idx.front()));
  }
  return out;
}

inline void check_window(std::size_t n, std::size_t s) {
  if (s < 1 || s > n) {
    throw Error(ErrorCode::kWindow,
                "block length s=" + std::to_string(s) + " must lie in [1, n=" + std::to_string(n) + "]");
  }
}

// Evaluates g(Y_{n,j}) for arbitrary 0-based window starts j in [0, n-s].
class WindowEvaluator {
 public:
  WindowEvaluator(const BlockFunctional& g, const NormalizedSeries& ns, std::size_t s) : g_(g), ns_(ns), s_(s) {
    check_window(ns.size(), s);
    if (!g_.eval) throw Error(ErrorCode::kInvalidFunctional, "functional '" + g_.name + "' has no evaluator");
    const std::vector<double> zeros(s, 0.0);
    if (g_.eval(zeros) != 0.0) {
      throw Error(ErrorCode::kInvalidFunctional, "functional '" + g_.name + "' does not vanish on the zero block");
    }
    auto access = [this](std::size_t i) { return ns_[i]; };
    switch (g_.kind) {
      case FunctionalKind::kBlockMax:
        maxima_ = sliding_window_max(access, ns.size(), s);
        break;
      case FunctionalKind::kRuns:
        if (s > 1) maxima_ = sliding_window_max(access, ns.size(), s - 1);
        break;
      default:
        break;
    }
  }

  double operator()(std::size_t start) {
    switch (g_.kind) {
      case FunctionalKind::kBlockMax:
        return maxima_[start] > 1.0 ? 1.0 : 0.0;
      case FunctionalKind::kFirstExceed:
        return ns_.exceeds(start) ? 1.0 : 0.0;
      case FunctionalKind::kRuns:
        if (!ns_.exceeds(start)) return 0.0;
        return s_ == 1 || maxima_[start + 1] <= 1.0 ? 1.0 : 0.0;
      case FunctionalKind::kCustom:
        break;
    }
    return g_.eval(ns_.window(start, s_, scratch_));
  }

 private:
  const BlockFunctional& g_;
  const NormalizedSeries& ns_;
  std::size_t s_;
  std::vector<double> maxima_;
  std::vector<double> scratch_;
};

}  // namespace detail

// sum_{i=1}^{n-s+1} g(Y_{n,i})
inline double sliding_block_sum(const BlockFunctional& g, const NormalizedSeries& ns, std::size_t s) {
  detail::WindowEvaluator eval(g, ns, s);
  double sum = 0.0;
  for (std::size_t j = 0; j + s <= ns.size(); ++j) sum += eval(j);
  return sum;
}

// sum_{i=1}^{floor(n/s)} g(Y_{n,(i-1)s+1})
inline double disjoint_block_sum(const BlockFunctional& g, const NormalizedSeries& ns, std::size_t s) {
  detail::WindowEvaluator eval(g, ns, s);
  const std::size_t blocks = ns.size() / s;
  if (blocks * s > ns.size()) throw Error(ErrorCode::kWindow, "disjoint block extends past the series end");
  double sum = 0.0;
  for (std::size_t i = 0; i < blocks; ++i) sum += eval(i * s);
  return sum;
}

// Inner sums over the m big blocks of length r. Sliding mode sums g over the
// r sliding windows starting in each big block; disjoint mode over the r/s
// disjoint windows tiling it.
inline std::vector<double> big_block_sums(const BlockFunctional& g, const NormalizedSeries& ns,
                                          const BlockScheme& scheme, BlockMode mode) {
  if (scheme.n() != ns.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "block scheme n=" + std::to_string(scheme.n()) +
                                                   " does not match series length " + std::to_string(ns.size()));
  }
  if (mode == BlockMode::kDisjoint) scheme.require_divisible();
  const std::size_t m = scheme.m();
  if (m == 0) throw Error(ErrorCode::kInsufficientData, "no complete big block fits into the series");
  const std::size_t s = scheme.s();
  const std::size_t r = scheme.r();
  detail::WindowEvaluator eval(g, ns, s);
  std::vector<double> sums(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    if (mode == BlockMode::kSliding) {
      for (std::size_t j = 0; j < r; ++j) acc += eval(i * r + j);
    } else {
      for (std::size_t j = 0; j < r / s; ++j) acc += eval(i * r + j * s);
    }
    sums[i] = acc;
  }
  return sums;
}

// Exceedance counts sum_{j in big block i} 1{X_j > u}, one per big block.
inline std::vector<double> big_block_exceedances(const NormalizedSeries& ns, const BlockScheme& scheme) {
  if (scheme.n() != ns.size()) throw Error(ErrorCode::kDimensionMismatch, "block scheme does not match series");
  const std::size_t m = scheme.m();
  if (m == 0) throw Error(ErrorCode::kInsufficientData, "no complete big block fits into the series");
  std::vector<double> counts(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    counts[i] = static_cast<double>(count_exceedances(ns.raw(), ns.threshold(), i * scheme.r(), (i + 1) * scheme.r()));
  }
  return counts;
}

}  // namespace extremal
