#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/rng.hpp"
#include "extremal/series.hpp"
#include "extremal/stats.hpp"

namespace extremal {

enum class ModelFamily { kIidFrechet, kArmax, kMovingMax };

// Stationary simulators with unit Frechet margins and known extremal index.
//   IID_FRECHET      X_t = Z_t                                  theta = 1
//   ARMAX(alpha)     X_t = max(alpha X_{t-1}, (1-alpha) Z_t)     theta = 1 - alpha
//   MOVING_MAX(q, w) X_t = max_j w_j Z_{t-j}, sum w_j = 1        theta = max_j w_j
struct ModelSpec {
  ModelFamily family = ModelFamily::kIidFrechet;
  double alpha = 0.5;
  std::size_t q = 1;
  std::vector<double> weights;  // empty: equal weights over q+1 lags
  std::optional<std::size_t> burn_in;

  static ModelSpec iid() { return {}; }

  static ModelSpec armax(double alpha) {
    ModelSpec spec;
    spec.family = ModelFamily::kArmax;
    spec.alpha = alpha;
    return spec;
  }

  static ModelSpec moving_max(std::size_t q, std::vector<double> weights = {}) {
    ModelSpec spec;
    spec.family = ModelFamily::kMovingMax;
    spec.q = q;
    spec.weights = std::move(weights);
    return spec;
  }

  void validate() const {
    if (family == ModelFamily::kArmax && !(alpha > 0.0 && alpha < 1.0)) {
      throw Error(ErrorCode::kInvalidParameter, "ARMAX alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
    if (family == ModelFamily::kMovingMax) {
      if (q < 1) throw Error(ErrorCode::kInvalidParameter, "moving maximum order q must be >= 1");
      if (!weights.empty()) {
        if (weights.size() != q + 1) {
          throw Error(ErrorCode::kInvalidParameter, "moving maximum needs q+1 weights");
        }
        for (double w : weights) {
          if (!(w > 0.0) || !std::isfinite(w)) {
            throw Error(ErrorCode::kInvalidParameter, "moving maximum weights must be positive");
          }
        }
      }
    }
  }

  std::size_t order() const { return family == ModelFamily::kMovingMax ? q : 1; }

  std::size_t burn_in_length() const { return burn_in.value_or(std::max<std::size_t>(1000, 50 * order())); }

  // Weights normalized to sum one (moving maximum only).
  std::vector<double> normalized_weights() const {
    std::vector<double> w = weights.empty() ? std::vector<double>(q + 1, 1.0) : weights;
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
    return w;
  }

  double theta_true() const {
    switch (family) {
      case ModelFamily::kIidFrechet: return 1.0;
      case ModelFamily::kArmax: return 1.0 - alpha;
      case ModelFamily::kMovingMax: {
        const auto w = normalized_weights();
        return *std::max_element(w.begin(), w.end());
      }
    }
    return 1.0;
  }

  std::string name() const {
    switch (family) {
      case ModelFamily::kIidFrechet: return "iid";
      case ModelFamily::kArmax: return "armax";
      case ModelFamily::kMovingMax: return "moving_max";
    }
    return "unknown";
  }
};

// Level u with P{X > u} = 1 - p under unit Frechet margins.
inline double frechet_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "quantile level must lie in (0, 1), got " + std::to_string(p));
  }
  return -1.0 / std::log(p);
}

inline double frechet_cdf(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

// Innovations consumed after burn-in. For the moving maximum the q innovations
// preceding time 1 come first.
struct InnovationTrace {
  double initial_state = 0.0;  // ARMAX: X_0
  std::vector<double> innovations;
};

// Step-by-step stationary path generator.
class PathGenerator {
 public:
  PathGenerator(const ModelSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
    spec_.validate();
    if (spec_.family == ModelFamily::kMovingMax) {
      weights_ = spec_.normalized_weights();
      window_.assign(spec_.q + 1, 0.0);
      for (std::size_t j = 0; j < spec_.q; ++j) push_innovation(unit_frechet(rng_));
    } else if (spec_.family == ModelFamily::kArmax) {
      state_ = unit_frechet(rng_);
    }
    for (std::size_t i = 0; i < spec_.burn_in_length(); ++i) next();
  }

  // Start recording innovations from the next step on.
  void start_trace(InnovationTrace* trace) {
    trace_ = trace;
    if (!trace_) return;
    trace_->initial_state = state_;
    trace_->innovations.clear();
    if (spec_.family == ModelFamily::kMovingMax) {
      for (std::size_t j = spec_.q; j >= 1; --j) trace_->innovations.push_back(lagged(j - 1));
    }
  }

  double next() {
    const double z = unit_frechet(rng_);
    if (trace_) trace_->innovations.push_back(z);
    switch (spec_.family) {
      case ModelFamily::kIidFrechet:
        return z;
      case ModelFamily::kArmax:
        state_ = std::max(spec_.alpha * state_, (1.0 - spec_.alpha) * z);
        return state_;
      case ModelFamily::kMovingMax: {
        push_innovation(z);
        double x = 0.0;
        for (std::size_t j = 0; j <= spec_.q; ++j) x = std::max(x, weights_[j] * lagged(j));
        return x;
      }
    }
    return z;
  }

 private:
  void push_innovation(double z) {
    head_ = (head_ + 1) % window_.size();
    window_[head_] = z;
  }

  // Z_{t-j} relative to the most recent innovation.
  double lagged(std::size_t j) const { return window_[(head_ + window_.size() - j) % window_.size()]; }

  ModelSpec spec_;
  CounterRng rng_;
  double state_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> window_;
  std::size_t head_ = 0;
  InnovationTrace* trace_ = nullptr;
};

inline Series simulate(const ModelSpec& spec, std::size_t n, std::uint64_t seed, InnovationTrace* trace = nullptr) {
  if (n < 1) throw Error(ErrorCode::kInvalidParameter, "path length n must be >= 1");
  PathGenerator gen(spec, seed);
  gen.start_trace(trace);
  std::vector<double> x(n);
  for (auto& v : x) v = gen.next();
  return Series(std::move(x));
}

struct ThetaOracle {
  double theta = 0.0;
  double p_block = 0.0;   // P{M_{1,s} > u}
  double p_single = 0.0;  // P{X_1 > u}
  double stderr = 0.0;
};

// Brute-force P{M_{1,s} > u} / (s P{X_1 > u}) from reps independent paths of
// length s, u the unit Frechet quantile at u_quantile.
inline ThetaOracle theta_oracle_mc(const ModelSpec& spec, std::size_t s, double u_quantile, std::size_t reps,
                                   std::uint64_t seed) {
  if (reps < 100) throw Error(ErrorCode::kInvalidParameter, "theta oracle needs reps >= 100");
  if (s < 1) throw Error(ErrorCode::kInvalidParameter, "block length must be >= 1");
  const double u = frechet_quantile(u_quantile);
  std::size_t block_hits = 0;
  std::size_t single_hits = 0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const Series path = simulate(spec, s, derive_seed(seed, rep, StreamTag::kThetaOracle));
    const std::size_t c = count_exceedances(path.values(), u);
    single_hits += c;
    block_hits += c > 0 ? 1 : 0;
  }
  if (single_hits == 0) throw Error(ErrorCode::kInsufficientEvents, "no exceedances at the oracle quantile");
  ThetaOracle out;
  out.p_block = static_cast<double>(block_hits) / static_cast<double>(reps);
  out.p_single = static_cast<double>(single_hits) / static_cast<double>(reps * s);
  out.theta = out.p_block / (static_cast<double>(s) * out.p_single);
  out.stderr = std::sqrt(out.p_block * (1.0 - out.p_block) / static_cast<double>(reps)) /
               (static_cast<double>(s) * out.p_single);
  return out;
}

// P{W_k > 1} for the forward tail process of a built-in family.
inline double tail_chain_probability(const ModelSpec& spec, std::size_t k) {
  spec.validate();
  if (k == 0) return 1.0;
  switch (spec.family) {
    case ModelFamily::kIidFrechet: return 0.0;
    case ModelFamily::kArmax: return std::pow(spec.alpha, static_cast<double>(k));
    case ModelFamily::kMovingMax: {
      const auto w = spec.normalized_weights();
      double p = 0.0;
      for (std::size_t j = 0; j + k < w.size(); ++j) p += std::min(w[j], w[j + k]);
      return p;
    }
  }
  return 0.0;
}

// c = 1 + 2 sum_{k>=1} P{W_k > 1}, closed form.
inline double tail_process_c_analytic(const ModelSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case ModelFamily::kIidFrechet: return 1.0;
    case ModelFamily::kArmax: return (1.0 + spec.alpha) / (1.0 - spec.alpha);
    case ModelFamily::kMovingMax: {
      double c = 1.0;
      for (std::size_t k = 1; k <= spec.q; ++k) c += 2.0 * tail_chain_probability(spec, k);
      return c;
    }
  }
  return 1.0;
}

struct TailChainEstimate {
  double c = 0.0;
  double stderr = 0.0;
  double truncation_bound = 0.0;   // 2 sum_{k>K} P{W_k > 1} upper envelope
  std::vector<double> probabilities;  // P_hat{W_k > 1}, k = 1..K
};

// Monte Carlo over the forward tail chain: W_0 ~ Pareto(1) pushed through the
// family's multiplier recursion.
inline TailChainEstimate tail_process_c_mc(const ModelSpec& spec, std::size_t lags, std::size_t reps,
                                           std::uint64_t seed) {
  spec.validate();
  if (lags < 1) throw Error(ErrorCode::kInvalidParameter, "truncation lag K must be >= 1");
  if (reps < 2) throw Error(ErrorCode::kInvalidParameter, "tail chain MC needs reps >= 2");
  CounterRng rng(derive_seed(seed, 0, StreamTag::kTailChain));
  const auto weights = spec.family == ModelFamily::kMovingMax ? spec.normalized_weights() : std::vector<double>{};
  std::vector<double> hits(lags, 0.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const double w0 = 1.0 / rng.uniform();
    std::size_t origin = 0;
    if (!weights.empty()) {
      double u = rng.uniform();
      while (origin + 1 < weights.size() && u > weights[origin]) u -= weights[origin++];
    }
    double count = 0.0;
    for (std::size_t k = 1; k <= lags; ++k) {
      double wk = 0.0;
      if (spec.family == ModelFamily::kArmax) {
        wk = std::pow(spec.alpha, static_cast<double>(k)) * w0;
      } else if (spec.family == ModelFamily::kMovingMax && origin + k < weights.size()) {
        wk = w0 * weights[origin + k] / weights[origin];
      }
      if (wk > 1.0) {
        hits[k - 1] += 1.0;
        count += 1.0;
      }
    }
    sum += count;
    sum_sq += count * count;
  }
  TailChainEstimate out;
  const double n = static_cast<double>(reps);
  for (double& h : hits) h /= n;
  out.probabilities = hits;
  const double mean = sum / n;
  out.c = 1.0 + 2.0 * mean;
  out.stderr = 2.0 * std::sqrt(std::max(0.0, (sum_sq / n - mean * mean) / (n - 1.0)));
  if (spec.family == ModelFamily::kArmax) {
    out.truncation_bound = 2.0 * std::pow(spec.alpha, static_cast<double>(lags + 1)) / (1.0 - spec.alpha);
  } else if (spec.family == ModelFamily::kMovingMax) {
    for (std::size_t k = lags + 1; k <= spec.q; ++k) out.truncation_bound += 2.0 * tail_chain_probability(spec, k);
  }
  return out;
}

// Analytic value when the family has one (all built-ins), tail chain MC otherwise.
inline double tail_process_c(const ModelSpec& spec, std::size_t lags = 64, std::size_t reps = 100000,
                             std::uint64_t seed = 0) {
  switch (spec.family) {
    case ModelFamily::kIidFrechet:
    case ModelFamily::kArmax:
    case ModelFamily::kMovingMax:
      return tail_process_c_analytic(spec);
  }
  return tail_process_c_mc(spec, lags, reps, seed).c;
}

struct ConditionalExceedance {
  std::vector<double> probabilities;  // P_hat(X_k > u | X_0 > u), k = 1..k_max
  std::size_t events = 0;
  double u = 0.0;
  double v = 0.0;  // P{X > u} = 1 - u_quantile
  // 1 + 2 sum_k (P_hat_k - v): the background rate v is removed from each lag
  double c_centered = 0.0;
  double c_stderr = 0.0;  // batch means over consecutive events
};

// Direct simulation of the conditional exceedance profile along one long
// stationary path, collecting `events` conditioning exceedances.
inline ConditionalExceedance conditional_exceedance_mc(const ModelSpec& spec, std::size_t k_max, double u_quantile,
                                                       std::size_t events, std::uint64_t seed,
                                                       std::size_t batches = 100) {
  if (k_max < 1) throw Error(ErrorCode::kInvalidParameter, "k_max must be >= 1");
  if (events < 500) {
    throw Error(ErrorCode::kInsufficientEvents,
                "need at least 500 conditioning events, requested " + std::to_string(events));
  }
  const double u = frechet_quantile(u_quantile);
  const double v = 1.0 - u_quantile;
  // Expected path length is events / v; stop well beyond it.
  const double budget = 1000.0 * static_cast<double>(events) / v + static_cast<double>(k_max);
  const auto max_steps = static_cast<std::uint64_t>(std::min(budget, 1e12));

  PathGenerator gen(spec, derive_seed(seed, 0, StreamTag::kConditional));
  // ring of event indices for the last k_max steps; -1 means no event
  std::vector<std::int64_t> ring(k_max + 1, -1);
  std::vector<double> follow(events, 0.0);  // exceedances after each event
  std::vector<double> lag_hits(k_max, 0.0);
  std::size_t collected = 0;
  std::uint64_t t = 0;
  std::uint64_t stop_at = max_steps;
  for (; t < stop_at; ++t) {
    const bool exceed = gen.next() > u;
    const std::size_t slot = t % ring.size();
    ring[slot] = -1;
    if (!exceed) continue;
    for (std::size_t k = 1; k <= k_max && k <= t; ++k) {
      const std::int64_t ev = ring[(t - k) % ring.size()];
      if (ev >= 0) {
        follow[static_cast<std::size_t>(ev)] += 1.0;
        lag_hits[k - 1] += 1.0;
      }
    }
    if (collected < events) {
      ring[slot] = static_cast<std::int64_t>(collected++);
      if (collected == events) stop_at = t + k_max + 1;
    }
  }
  if (collected < events) {
    throw Error(ErrorCode::kInsufficientEvents, "collected only " + std::to_string(collected) + " of " +
                                                    std::to_string(events) + " conditioning events");
  }
  ConditionalExceedance out;
  out.events = events;
  out.u = u;
  out.v = v;
  const double n = static_cast<double>(events);
  out.probabilities.resize(k_max);
  double centered = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    out.probabilities[k] = lag_hits[k] / n;
    centered += out.probabilities[k] - v;
  }
  out.c_centered = 1.0 + 2.0 * centered;

  batches = std::clamp<std::size_t>(batches, 2, events);
  const std::size_t per_batch = events / batches;
  std::vector<double> batch_means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * per_batch; i < (b + 1) * per_batch; ++i) acc += follow[i];
    batch_means[b] = acc / static_cast<double>(per_batch);
  }
  out.c_stderr = 2.0 * std::sqrt(stats::sample_variance(batch_means) / static_cast<double>(batches));
  return out;
}

}  // namespace extremal
