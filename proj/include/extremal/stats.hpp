#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "extremal/error.hpp"

namespace extremal::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::kInsufficientSample, "mean of an empty sample");
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

// Unbiased (m-1) sample covariance.
inline double sample_covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "covariance of samples of unequal size");
  if (x.size() < 2) throw Error(ErrorCode::kInsufficientSample, "covariance needs at least two values");
  const double mx = mean(x);
  const double my = mean(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - mx) * (y[i] - my);
  return acc / static_cast<double>(x.size() - 1);
}

inline double sample_variance(std::span<const double> x) { return sample_covariance(x, x); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Leave-one-out jackknife standard error of a statistic over R units.
// stat(excluded) evaluates the statistic with unit `excluded` removed.
inline double jackknife_se(std::size_t units, const std::function<double(std::size_t)>& stat) {
  if (units < 2) throw Error(ErrorCode::kInsufficientSample, "jackknife needs at least two units");
  std::vector<double> loo(units);
  for (std::size_t i = 0; i < units; ++i) loo[i] = stat(i);
  const double center = mean(loo);
  double acc = 0.0;
  for (double v : loo) acc += (v - center) * (v - center);
  return std::sqrt(acc * static_cast<double>(units - 1) / static_cast<double>(units));
}

// Copy of x without element `excluded`.
inline std::vector<double> without(std::span<const double> x, std::size_t excluded) {
  std::vector<double> out;
  out.reserve(x.size() - 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i != excluded) out.push_back(x[i]);
  }
  return out;
}

struct NormalityDiagnostic {
  double mean = 0.0;
  double sd = 0.0;
  double max_cdf_dev = 0.0;  // sup |F_emp - Phi|
  std::size_t count = 0;
};

inline NormalityDiagnostic normality_diagnostic(std::span<const double> z) {
  if (z.size() < 50) {
    throw Error(ErrorCode::kInsufficientSample,
                "normality diagnostic needs at least 50 values, got " + std::to_string(z.size()));
  }
  NormalityDiagnostic out;
  out.count = z.size();
  out.mean = mean(z);
  out.sd = std::sqrt(sample_variance(z));
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double phi = normal_cdf(sorted[i]);
    out.max_cdf_dev = std::max({out.max_cdf_dev, std::abs(static_cast<double>(i + 1) / n - phi),
                                std::abs(static_cast<double>(i) / n - phi)});
  }
  return out;
}

}  // namespace extremal::stats
