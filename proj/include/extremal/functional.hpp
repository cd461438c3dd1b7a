#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "extremal/error.hpp"

namespace extremal {

enum class FunctionalKind { kBlockMax, kFirstExceed, kRuns, kCustom };

// A map from a block of normalized values to a real number. Must vanish on the
// all-zero block. Built-in kinds get O(1) amortized window evaluation in the
// block kernels; custom ones are evaluated on a copied window.
struct BlockFunctional {
  using Eval = std::function<double(std::span<const double>)>;

  std::string name;
  FunctionalKind kind = FunctionalKind::kCustom;
  Eval eval;
  std::optional<double> bound;
  double scale = 1.0;  // a_n

  BlockFunctional with_scale(double a) const {
    if (!(a > 0.0)) throw Error(ErrorCode::kInvalidFunctional, "functional scale must be positive");
    BlockFunctional copy = *this;
    copy.scale = a;
    return copy;
  }
};

namespace detail {

inline double max_of(std::span<const double> x) {
  return x.empty() ? 0.0 : *std::max_element(x.begin(), x.end());
}

}  // namespace detail

// g1 = 1{max x_i > 1}
inline BlockFunctional block_max() {
  return {"block_max", FunctionalKind::kBlockMax,
          [](std::span<const double> x) { return detail::max_of(x) > 1.0 ? 1.0 : 0.0; }, 1.0, 1.0};
}

// h = 1{x_1 > 1}
inline BlockFunctional first_exceed() {
  return {"first_exceed", FunctionalKind::kFirstExceed,
          [](std::span<const double> x) { return !x.empty() && x[0] > 1.0 ? 1.0 : 0.0; }, 1.0, 1.0};
}

// f = 1{x_1 > 1, max_{2<=i<=s} x_i <= 1}
inline BlockFunctional runs() {
  return {"runs", FunctionalKind::kRuns,
          [](std::span<const double> x) {
            return !x.empty() && x[0] > 1.0 && detail::max_of(x.subspan(1)) <= 1.0 ? 1.0 : 0.0;
          },
          1.0, 1.0};
}

inline BlockFunctional custom_functional(std::string name, BlockFunctional::Eval eval,
                                         std::optional<double> bound = std::nullopt) {
  if (!eval) throw Error(ErrorCode::kInvalidFunctional, "functional '" + name + "' has no evaluator");
  return {std::move(name), FunctionalKind::kCustom, std::move(eval), bound, 1.0};
}

inline BlockFunctional functional_by_name(const std::string& name) {
  if (name == "block_max") return block_max();
  if (name == "first_exceed") return first_exceed();
  if (name == "runs") return runs();
  throw Error(ErrorCode::kInvalidFunctional, "unknown functional '" + name + "'");
}

}  // namespace extremal
