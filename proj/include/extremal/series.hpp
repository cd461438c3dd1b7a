#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "extremal/error.hpp"

namespace extremal {

// A finite real-valued path X_1..X_n. Immutable once constructed.
class Series {
 public:
  explicit Series(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw Error(ErrorCode::kInsufficientData, "series must contain at least one value");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(ErrorCode::kInvalidParameter,
                    "series value at index " + std::to_string(i) + " is not finite");
      }
    }
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

// Number of i in [first, last) with X_i > u (0-based, half open).
inline std::size_t count_exceedances(std::span<const double> x, double u, std::size_t first,
                                     std::size_t last) {
  std::size_t count = 0;
  for (std::size_t i = first; i < last; ++i) count += x[i] > u ? 1 : 0;
  return count;
}

inline std::size_t count_exceedances(std::span<const double> x, double u) {
  return count_exceedances(x, u, 0, x.size());
}

// k-th largest value X_{n-k+1:n}, 1 <= k <= n.
inline double kth_largest(std::span<const double> x, std::size_t k) {
  if (k < 1 || k > x.size()) {
    throw Error(ErrorCode::kInvalidParameter,
                "rank k=" + std::to_string(k) + " outside [1, " + std::to_string(x.size()) + "]");
  }
  std::vector<double> copy(x.begin(), x.end());
  auto nth = copy.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(copy.begin(), nth, copy.end(), std::greater<>());
  return *nth;
}

enum class ThresholdKind { kDeterministic, kRank };

class ThresholdSpec {
 public:
  static ThresholdSpec deterministic(double u) { return ThresholdSpec(ThresholdKind::kDeterministic, u, 0); }
  static ThresholdSpec rank(std::size_t k) { return ThresholdSpec(ThresholdKind::kRank, 0.0, k); }

  ThresholdKind kind() const noexcept { return kind_; }
  double level() const noexcept { return u_; }
  std::size_t k() const noexcept { return k_; }

 private:
  ThresholdSpec(ThresholdKind kind, double u, std::size_t k) : kind_(kind), u_(u), k_(k) {}

  ThresholdKind kind_;
  double u_;
  std::size_t k_;
};

// A threshold resolved against a concrete series.
struct ResolvedThreshold {
  ThresholdKind kind = ThresholdKind::kDeterministic;
  std::size_t k = 0;
  double u = 0.0;
  std::size_t n_exceed = 0;  // over the full range 1..n
  double v_hat = 0.0;
  std::optional<double> d_ratio;  // u / reference level, when a reference is supplied
};

inline ResolvedThreshold resolve(const Series& series, const ThresholdSpec& spec,
                                 std::optional<double> reference_u = std::nullopt) {
  ResolvedThreshold out;
  out.kind = spec.kind();
  out.k = spec.k();
  out.u = spec.kind() == ThresholdKind::kRank ? kth_largest(series.values(), spec.k()) : spec.level();
  if (!std::isfinite(out.u)) throw Error(ErrorCode::kInvalidThreshold, "threshold is not finite");
  out.n_exceed = count_exceedances(series.values(), out.u);
  out.v_hat = static_cast<double>(out.n_exceed) / static_cast<double>(series.size());
  if (reference_u) {
    if (*reference_u == 0.0) throw Error(ErrorCode::kInvalidThreshold, "reference level must be nonzero");
    out.d_ratio = out.u / *reference_u;
  }
  return out;
}

// Sequence parameters n, s_n, r_n and the derived big-block count m_n.
class BlockScheme {
 public:
  BlockScheme(std::size_t n, std::size_t s, std::size_t r) : n_(n), s_(s), r_(r) {
    if (s_ < 1 || s_ > r_ || r_ > n_) {
      throw Error(ErrorCode::kScheme, "block scheme requires 1 <= s <= r <= n (n=" + std::to_string(n_) +
                                          ", s=" + std::to_string(s_) + ", r=" + std::to_string(r_) + ")");
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t s() const noexcept { return s_; }
  std::size_t r() const noexcept { return r_; }
  std::size_t m() const noexcept { return (n_ - s_ + 1) / r_; }
  bool divisible() const noexcept { return r_ % s_ == 0; }

  void require_divisible() const {
    if (!divisible()) {
      throw Error(ErrorCode::kScheme, "r=" + std::to_string(r_) + " is not a multiple of s=" + std::to_string(s_));
    }
  }

 private:
  std::size_t n_;
  std::size_t s_;
  std::size_t r_;
};

}  // namespace extremal
