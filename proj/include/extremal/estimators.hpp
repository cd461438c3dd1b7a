#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "extremal/blocks.hpp"
#include "extremal/error.hpp"
#include "extremal/functional.hpp"
#include "extremal/series.hpp"

namespace extremal {

enum class EstimatorMethod { kDisjoint, kSliding, kRuns, kSlidingRandomU };

inline const char* to_string(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::kDisjoint: return "disjoint";
    case EstimatorMethod::kSliding: return "sliding";
    case EstimatorMethod::kRuns: return "runs";
    case EstimatorMethod::kSlidingRandomU: return "sliding_random_u";
  }
  return "unknown";
}

inline EstimatorMethod method_from_string(const std::string& name) {
  if (name == "disjoint" || name == "d") return EstimatorMethod::kDisjoint;
  if (name == "sliding" || name == "s") return EstimatorMethod::kSliding;
  if (name == "runs" || name == "r") return EstimatorMethod::kRuns;
  if (name == "sliding_random_u") return EstimatorMethod::kSlidingRandomU;
  throw Error(ErrorCode::kInvalidParameter, "unknown estimator method '" + name + "'");
}

// Range of the exceedance count in the denominator: 1..n-s+1 (trimmed) or 1..n (full).
enum class Denominator { kTrimmed, kFull };

struct EstimatorOptions {
  // Unset: trimmed for the deterministic-level estimators, full for the
  // random-threshold estimator.
  std::optional<Denominator> denominator;
  bool clip_unit = false;
};

inline const char* to_string(const std::optional<Denominator>& d) {
  if (!d) return "default";
  return *d == Denominator::kFull ? "full" : "trimmed";
}

struct ThetaEstimate {
  EstimatorMethod method = EstimatorMethod::kSliding;
  double theta_hat = 0.0;
  double u_used = 0.0;
  std::size_t s = 0;
  std::size_t n = 0;
  std::size_t n_exceed = 0;
  std::optional<double> stderr_hat;
  std::optional<std::size_t> k;      // rank, random-threshold method only
  std::optional<double> d_ratio;     // u_hat / reference level
};

struct RatioEstimate {
  std::string functional;
  BlockMode mode = BlockMode::kSliding;
  double xi_hat = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  double scale = 1.0;
};

// s = ceil(sqrt(n/k)), clamped to [1, n].
inline std::size_t default_block_length(std::size_t n, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidParameter, "rank k must be positive");
  const double s = std::ceil(std::sqrt(static_cast<double>(n) / static_cast<double>(k)));
  return std::clamp<std::size_t>(static_cast<std::size_t>(s), 1, n);
}

namespace detail {

inline std::size_t exceedance_denominator(const Series& x, double u, std::size_t s, const EstimatorOptions& opts) {
  check_window(x.size(), s);
  const Denominator range = opts.denominator.value_or(Denominator::kTrimmed);
  const std::size_t last = range == Denominator::kFull ? x.size() : x.size() - s + 1;
  const std::size_t count = count_exceedances(x.values(), u, 0, last);
  if (count == 0) throw NoExceedanceError(x.size(), u);
  return count;
}

inline ThetaEstimate make_estimate(EstimatorMethod method, double numerator, std::size_t denominator, double u,
                                   std::size_t s, std::size_t n, const EstimatorOptions& opts) {
  ThetaEstimate est;
  est.method = method;
  est.theta_hat = numerator / static_cast<double>(denominator);
  if (opts.clip_unit) est.theta_hat = std::clamp(est.theta_hat, 0.0, 1.0);
  est.u_used = u;
  est.s = s;
  est.n = n;
  est.n_exceed = denominator;
  return est;
}

}  // namespace detail

// Disjoint blocks estimator: number of disjoint blocks with an exceedance over
// the exceedance count.
inline ThetaEstimate theta_disjoint(const Series& x, double u, std::size_t s, const EstimatorOptions& opts = {}) {
  const std::size_t denom = detail::exceedance_denominator(x, u, s, opts);
  const auto ns = normalize(x, u);
  const double num = disjoint_block_sum(block_max(), ns, s);
  return detail::make_estimate(EstimatorMethod::kDisjoint, num, denom, u, s, x.size(), opts);
}

// Sliding blocks estimator: (1/s) times the number of sliding windows with an
// exceedance over the exceedance count.
inline ThetaEstimate theta_sliding(const Series& x, double u, std::size_t s, const EstimatorOptions& opts = {}) {
  const std::size_t denom = detail::exceedance_denominator(x, u, s, opts);
  const auto ns = normalize(x, u);
  const double num = sliding_block_sum(block_max(), ns, s) / static_cast<double>(s);
  return detail::make_estimate(EstimatorMethod::kSliding, num, denom, u, s, x.size(), opts);
}

// Runs estimator: fraction of exceedances not followed by another exceedance
// within the next s-1 observations. Always in [0, 1].
inline ThetaEstimate theta_runs(const Series& x, double u, std::size_t s, const EstimatorOptions& opts = {}) {
  const std::size_t denom = detail::exceedance_denominator(x, u, s, opts);
  const auto ns = normalize(x, u);
  const double num = sliding_block_sum(runs(), ns, s);
  return detail::make_estimate(EstimatorMethod::kRuns, num, denom, u, s, x.size(), opts);
}

// Sliding blocks estimator at the random level u_hat = X_{n-k+1:n}. Strict
// exceedance means at most k-1 observations exceed u_hat. Unless set in opts,
// the denominator counts exceedances over the full range 1..n.
inline ThetaEstimate theta_sliding_random_u(const Series& x, std::size_t k, std::optional<std::size_t> s = std::nullopt,
                                            const EstimatorOptions& opts = {},
                                            std::optional<double> reference_u = std::nullopt) {
  if (k < 1 || k >= x.size()) {
    throw Error(ErrorCode::kInvalidParameter,
                "rank k=" + std::to_string(k) + " must satisfy 1 <= k < n=" + std::to_string(x.size()));
  }
  const std::size_t block = s.value_or(default_block_length(x.size(), k));
  const ResolvedThreshold thr = resolve(x, ThresholdSpec::rank(k), reference_u);
  EstimatorOptions delegated = opts;
  delegated.denominator = opts.denominator.value_or(Denominator::kFull);
  ThetaEstimate est = theta_sliding(x, thr.u, block, delegated);
  est.method = EstimatorMethod::kSlidingRandomU;
  est.k = k;
  est.d_ratio = thr.d_ratio;
  return est;
}

inline ThetaEstimate estimate_theta(EstimatorMethod method, const Series& x, double u, std::size_t s,
                                    const EstimatorOptions& opts = {}) {
  switch (method) {
    case EstimatorMethod::kDisjoint: return theta_disjoint(x, u, s, opts);
    case EstimatorMethod::kSliding: return theta_sliding(x, u, s, opts);
    case EstimatorMethod::kRuns: return theta_runs(x, u, s, opts);
    case EstimatorMethod::kSlidingRandomU: break;
  }
  throw Error(ErrorCode::kInvalidParameter, "sliding_random_u needs a rank threshold, not a level");
}

// Generic ratio estimator of xi: the g block sum (scaled by 1/(s a) for
// sliding, 1/a for disjoint) over the exceedance count.
inline RatioEstimate ratio_estimate(const BlockFunctional& g, const Series& x, double u, std::size_t s, BlockMode mode,
                                    const EstimatorOptions& opts = {}) {
  if (!(g.scale > 0.0)) throw Error(ErrorCode::kInvalidFunctional, "functional scale must be positive");
  const std::size_t denom = detail::exceedance_denominator(x, u, s, opts);
  const auto ns = normalize(x, u);
  RatioEstimate out;
  out.functional = g.name;
  out.mode = mode;
  out.scale = g.scale;
  out.denominator = static_cast<double>(denom);
  if (mode == BlockMode::kSliding) {
    out.numerator = sliding_block_sum(g, ns, s) / (static_cast<double>(s) * g.scale);
  } else {
    out.numerator = disjoint_block_sum(g, ns, s) / g.scale;
  }
  out.xi_hat = out.numerator / out.denominator;
  return out;
}

}  // namespace extremal
