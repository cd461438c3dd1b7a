#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "extremal/blocks.hpp"
#include "extremal/error.hpp"
#include "extremal/estimators.hpp"
#include "extremal/functional.hpp"
#include "extremal/linalg.hpp"
#include "extremal/series.hpp"
#include "extremal/stats.hpp"

namespace extremal {

// Big-block plug-in estimates of the asymptotic (co)variance constants of the
// sliding and disjoint blocks statistics. Each constant is a sample moment of
// the m big-block inner sums divided by its normalizer; v_hat is taken over
// the full range 1..n.

namespace detail {

inline double empirical_rate(const Series& x, double u) {
  const std::size_t count = count_exceedances(x.values(), u);
  if (count == 0) throw NoExceedanceError(x.size(), u);
  return static_cast<double>(count) / static_cast<double>(x.size());
}

inline void require_blocks(const BlockScheme& scheme, std::size_t minimum) {
  if (scheme.m() < minimum) {
    throw Error(ErrorCode::kInsufficientData, "need at least " + std::to_string(minimum) + " big blocks, have m=" +
                                                  std::to_string(scheme.m()));
  }
}

}  // namespace detail

inline double estimate_c_s(const BlockFunctional& g, const Series& x, double u, const BlockScheme& scheme) {
  detail::require_blocks(scheme, 2);
  const double v = detail::empirical_rate(x, u);
  const auto ns = normalize(x, u);
  const auto sums = big_block_sums(g, ns, scheme, BlockMode::kSliding);
  const double s = static_cast<double>(scheme.s());
  return stats::sample_variance(sums) / (static_cast<double>(scheme.r()) * v * s * s * g.scale * g.scale);
}

inline double estimate_c_d(const BlockFunctional& g, const Series& x, double u, const BlockScheme& scheme) {
  scheme.require_divisible();
  detail::require_blocks(scheme, 2);
  const double v = detail::empirical_rate(x, u);
  const auto ns = normalize(x, u);
  const auto sums = big_block_sums(g, ns, scheme, BlockMode::kDisjoint);
  return stats::sample_variance(sums) / (static_cast<double>(scheme.r()) * v * g.scale * g.scale);
}

// Mean squared big-block exceedance count over r v_hat.
inline double estimate_c_v(const Series& x, double u, const BlockScheme& scheme) {
  detail::require_blocks(scheme, 1);
  const double v = detail::empirical_rate(x, u);
  const auto ns = normalize(x, u);
  const auto counts = big_block_exceedances(ns, scheme);
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return sq / static_cast<double>(counts.size()) / (static_cast<double>(scheme.r()) * v);
}

inline double estimate_cross_cov(const BlockFunctional& g, const Series& x, double u, const BlockScheme& scheme,
                                 BlockMode mode) {
  if (mode == BlockMode::kDisjoint) scheme.require_divisible();
  detail::require_blocks(scheme, 2);
  const double v = detail::empirical_rate(x, u);
  const auto ns = normalize(x, u);
  const auto sums = big_block_sums(g, ns, scheme, mode);
  const auto counts = big_block_exceedances(ns, scheme);
  double norm = static_cast<double>(scheme.r()) * v * g.scale;
  if (mode == BlockMode::kSliding) norm *= static_cast<double>(scheme.s());
  return stats::sample_covariance(sums, counts) / norm;
}

struct VarianceReport {
  std::string functional;
  double c_s = 0.0;
  double c_d = 0.0;
  double c_v = 0.0;
  double c_sv = 0.0;
  double c_dv = 0.0;
  double xi_hat = 0.0;
  double c_tilde_s = 0.0;
  double c_tilde_d = 0.0;
  std::size_t n = 0;
  std::size_t s = 0;
  std::size_t r = 0;
  std::size_t m = 0;
  double v_hat = 0.0;
};

// c~ = c + xi^2 c_v - 2 xi c_(.,v)
inline double combine_ratio_variance(double c, double c_v, double c_cross, double xi) {
  return c + xi * xi * c_v - 2.0 * xi * c_cross;
}

// All constants for one functional. xi_hat is the sliding ratio estimate,
// shared by both combinations.
inline VarianceReport variance_report(const BlockFunctional& g, const Series& x, double u, const BlockScheme& scheme) {
  VarianceReport rep;
  rep.functional = g.name;
  rep.c_s = estimate_c_s(g, x, u, scheme);
  rep.c_d = estimate_c_d(g, x, u, scheme);
  rep.c_v = estimate_c_v(x, u, scheme);
  rep.c_sv = estimate_cross_cov(g, x, u, scheme, BlockMode::kSliding);
  rep.c_dv = estimate_cross_cov(g, x, u, scheme, BlockMode::kDisjoint);
  rep.xi_hat = ratio_estimate(g, x, u, scheme.s(), BlockMode::kSliding).xi_hat;
  rep.c_tilde_s = combine_ratio_variance(rep.c_s, rep.c_v, rep.c_sv, rep.xi_hat);
  rep.c_tilde_d = combine_ratio_variance(rep.c_d, rep.c_v, rep.c_dv, rep.xi_hat);
  rep.n = scheme.n();
  rep.s = scheme.s();
  rep.r = scheme.r();
  rep.m = scheme.m();
  rep.v_hat = detail::empirical_rate(x, u);
  return rep;
}

struct PluginVariance {
  double value = 0.0;
  bool degenerate = false;  // theta (theta c - 1) == 0
  bool negative = false;    // c < 1/theta; value carries the raw number
};

// Limit variance theta (theta c - 1) of the extremal index estimators.
inline PluginVariance plugin_asymptotic_variance(double theta, double c) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "theta must lie in (0, 1], got " + std::to_string(theta));
  }
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw Error(ErrorCode::kInvalidParameter, "c must be finite and nonnegative, got " + std::to_string(c));
  }
  PluginVariance out;
  out.value = theta * (theta * c - 1.0);
  out.degenerate = std::abs(out.value) <= 1e-12;
  out.negative = !out.degenerate && out.value < 0.0;
  return out;
}

// sqrt(theta (theta c - 1) / (n v)) when the plug-in is positive.
inline std::optional<double> plugin_stderr(double theta_hat, double c_hat, std::size_t n, double v_hat) {
  const double var = theta_hat * (theta_hat * c_hat - 1.0);
  if (!(var > 0.0) || !(v_hat > 0.0)) return std::nullopt;
  return std::sqrt(var / (static_cast<double>(n) * v_hat));
}

struct CovMatrixPair {
  SymMatrix c_s;
  SymMatrix c_d;
};

inline constexpr std::size_t kMaxFunctionals = 16;

struct LoewnerVerdict {
  bool dominated = false;
  double lambda_min = 0.0;  // smallest eigenvalue of C_d - C_s
};

inline double default_loewner_tol(const CovMatrixPair& pair) { return 1e-8 * std::abs(pair.c_d.trace()); }

// C_s <=_L C_d iff lambda_min(C_d - C_s) >= -tol.
inline LoewnerVerdict loewner_compare(const CovMatrixPair& pair, double tol) {
  if (pair.c_s.dim() != pair.c_d.dim() || pair.c_s.dim() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "covariance matrices must be nonempty and of equal dimension");
  }
  if (pair.c_s.dim() > kMaxFunctionals) {
    throw Error(ErrorCode::kInvalidParameter, "at most " + std::to_string(kMaxFunctionals) + " functionals supported");
  }
  if (!pair.c_s.is_symmetric(1e-12) || !pair.c_d.is_symmetric(1e-12)) {
    throw Error(ErrorCode::kInvalidParameter, "covariance matrices must be symmetric");
  }
  LoewnerVerdict out;
  out.lambda_min = symmetric_eigenvalues(pair.c_d - pair.c_s).front();
  out.dominated = out.lambda_min >= -tol;
  return out;
}

// Big-block plug-ins of the matrices (c^(s)(g,h)) and (c^(d)(g,h)).
inline CovMatrixPair estimate_cov_matrices(std::span<const BlockFunctional> functionals, const Series& x, double u,
                                           const BlockScheme& scheme) {
  if (functionals.empty() || functionals.size() > kMaxFunctionals) {
    throw Error(ErrorCode::kInvalidParameter, "functional set size must lie in [1, 16]");
  }
  scheme.require_divisible();
  detail::require_blocks(scheme, 2);
  const double v = detail::empirical_rate(x, u);
  const auto ns = normalize(x, u);
  const std::size_t dim = functionals.size();
  std::vector<std::vector<double>> sliding(dim), disjoint(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    sliding[i] = big_block_sums(functionals[i], ns, scheme, BlockMode::kSliding);
    disjoint[i] = big_block_sums(functionals[i], ns, scheme, BlockMode::kDisjoint);
  }
  const double r = static_cast<double>(scheme.r());
  const double s = static_cast<double>(scheme.s());
  CovMatrixPair out{SymMatrix(dim), SymMatrix(dim)};
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      const double a = functionals[i].scale * functionals[j].scale;
      out.c_s(i, j) = out.c_s(j, i) = stats::sample_covariance(sliding[i], sliding[j]) / (r * v * s * s * a);
      out.c_d(i, j) = out.c_d(j, i) = stats::sample_covariance(disjoint[i], disjoint[j]) / (r * v * a);
    }
  }
  return out;
}

}  // namespace extremal
