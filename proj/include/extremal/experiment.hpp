#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "extremal/blocks.hpp"
#include "extremal/error.hpp"
#include "extremal/estimators.hpp"
#include "extremal/functional.hpp"
#include "extremal/linalg.hpp"
#include "extremal/models.hpp"
#include "extremal/rng.hpp"
#include "extremal/stats.hpp"
#include "extremal/variance.hpp"

namespace extremal {

struct Tolerances {
  double mean_band = 0.05;          // |mean theta_hat - theta| for consistency
  double equal_law_rho = 1.5;       // variance ratios in [1/rho, rho]
  double sd_low = 0.7;              // band for sd of standardized errors
  double sd_high = 1.4;
  double normality_max_dev = 0.08;  // sup |F_emp - Phi|
  double dominance_se = 3.0;        // jackknife SEs allowed below zero
  double loewner_se = 3.0;
  double degenerate_var_max = 0.1;
};

inline const std::vector<std::string>& all_gates() {
  static const std::vector<std::string> gates = {"consistency", "equal_law", "random_threshold", "normality",
                                                 "degenerate_routing", "dominance", "loewner"};
  return gates;
}

struct ExperimentConfig {
  ModelSpec model = ModelSpec::armax(0.5);
  std::size_t n = 50000;
  std::optional<std::size_t> rank_k = 1000;
  std::optional<double> quantile;
  std::optional<std::size_t> s;
  std::optional<std::size_t> r;
  std::vector<EstimatorMethod> estimators = {EstimatorMethod::kDisjoint, EstimatorMethod::kSliding,
                                             EstimatorMethod::kRuns, EstimatorMethod::kSlidingRandomU};
  std::vector<std::string> functionals = {"block_max", "first_exceed"};
  std::string dominance_functional = "block_max";
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  EstimatorOptions options;
  Tolerances tolerances;
  std::vector<std::string> hard_gates = all_gates();
};

// Concrete sequence choices for one experiment.
struct Design {
  double v = 0.0;       // P{X > u}, the target exceedance rate
  double u = 0.0;       // deterministic level (unit Frechet quantile)
  std::size_t k = 0;    // rank for the random-threshold estimator
  std::size_t s = 0;
  std::size_t r = 0;
};

// s = ceil(sqrt(n/k)); r = s max(2, round(sqrt(n v)/s)).
inline Design resolve_design(const ExperimentConfig& cfg) {
  if (cfg.n < 2) throw Error(ErrorCode::kConfig, "n must be >= 2");
  Design d;
  if (cfg.rank_k) {
    if (*cfg.rank_k < 1 || *cfg.rank_k >= cfg.n) throw Error(ErrorCode::kConfig, "rank_k must lie in [1, n)");
    d.k = *cfg.rank_k;
    d.v = static_cast<double>(d.k) / static_cast<double>(cfg.n);
  } else if (cfg.quantile) {
    d.v = 1.0 - *cfg.quantile;
    d.k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(d.v * static_cast<double>(cfg.n))), 1,
                                  cfg.n - 1);
  } else {
    throw Error(ErrorCode::kConfig, "threshold needs rank_k or quantile");
  }
  d.u = frechet_quantile(1.0 - d.v);
  d.s = cfg.s.value_or(default_block_length(cfg.n, d.k));
  if (cfg.r) {
    d.r = *cfg.r;
  } else {
    const double blocks = std::round(std::sqrt(static_cast<double>(cfg.n) * d.v) / static_cast<double>(d.s));
    d.r = d.s * std::max<std::size_t>(2, static_cast<std::size_t>(blocks));
  }
  return d;
}

enum class AdvisoryLevel { kGreen, kYellow, kRed };

inline const char* to_string(AdvisoryLevel level) {
  switch (level) {
    case AdvisoryLevel::kGreen: return "green";
    case AdvisoryLevel::kYellow: return "yellow";
    case AdvisoryLevel::kRed: return "red";
  }
  return "unknown";
}

struct Advisory {
  std::string name;
  double value = 0.0;
  AdvisoryLevel level = AdvisoryLevel::kGreen;
  std::string message;
};

// Finite-sample proxies for the asymptotic order conditions on n, v, s, r.
// Advisory only; nothing here aborts.
inline std::vector<Advisory> sequence_advisories(std::size_t n, double v, std::size_t s, std::size_t r) {
  auto grade = [](double x, double green, double yellow) {
    return x <= green ? AdvisoryLevel::kGreen : x <= yellow ? AdvisoryLevel::kYellow : AdvisoryLevel::kRed;
  };
  const double nv = static_cast<double>(n) * v;
  std::vector<Advisory> out;
  out.push_back({"n_v", nv,
                 nv >= 100.0  ? AdvisoryLevel::kGreen
                 : nv >= 20.0 ? AdvisoryLevel::kYellow
                              : AdvisoryLevel::kRed,
                 "expected number of exceedances n*v should be large"});
  const double sv = static_cast<double>(s) * v;
  out.push_back({"s_v", sv, grade(sv, 0.25, 0.5), "s*v should be small (s v -> 0)"});
  const double rv = static_cast<double>(r) * v;
  out.push_back({"r_v", rv, grade(rv, 1.0, 2.0), "r*v should be small (r v -> 0)"});
  const double ratio = nv > 0.0 ? static_cast<double>(r) / std::sqrt(nv) : INFINITY;
  out.push_back({"r_over_sqrt_nv", ratio, grade(ratio, 1.5, 3.0), "r should not exceed sqrt(n v) (r = o(sqrt(n v)))"});
  out.push_back({"r_mod_s", static_cast<double>(s == 0 ? 0 : r % s),
                 s != 0 && r % s == 0 ? AdvisoryLevel::kGreen : AdvisoryLevel::kYellow,
                 "sliding vs disjoint variance comparison requires r/s to be an integer"});
  out.push_back({"s_below_r", static_cast<double>(s) / static_cast<double>(std::max<std::size_t>(r, 1)),
                 s < r ? AdvisoryLevel::kGreen : AdvisoryLevel::kRed,
                 "block ordering s <= l = o(r): s must be smaller than r"});
  return out;
}

struct ReplicateRow {
  std::size_t replicate = 0;
  EstimatorMethod method = EstimatorMethod::kSliding;
  std::optional<double> theta_hat;
  std::optional<double> u_used;
  double v_hat = 0.0;
  std::size_t n_exceed = 0;
  std::optional<double> z;
  std::string status = "ok";
};

// Per-replicate block statistics for the functional set, scaled by sqrt(n v):
// sqrt(n v) T^s(g), sqrt(n v) T^d(g) and the ratio versions.
struct ReplicateBlockStats {
  bool ok = false;
  std::vector<double> t_s, t_d, ratio_s, ratio_d;
  std::optional<VarianceReport> variance;
};

enum class VerdictStatus { kPass, kFail, kSkipped, kInsufficient };

inline const char* to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::kPass: return "pass";
    case VerdictStatus::kFail: return "fail";
    case VerdictStatus::kSkipped: return "skipped";
    case VerdictStatus::kInsufficient: return "insufficient";
  }
  return "unknown";
}

struct Verdict {
  std::string name;
  VerdictStatus status = VerdictStatus::kSkipped;
  std::string detail;
  std::vector<std::pair<std::string, double>> values;

  std::optional<double> value(const std::string& key) const {
    for (const auto& [k, v] : values) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

struct MethodSummary {
  EstimatorMethod method = EstimatorMethod::kSliding;
  std::size_t ok = 0;
  std::size_t failed = 0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double scaled_variance = 0.0;  // Var of sqrt(n v_hat) (theta_hat - theta)
  std::optional<stats::NormalityDiagnostic> normality;
  std::string normality_status;  // ok | degenerate_law | insufficient_sample
};

struct ExperimentResult {
  ExperimentConfig config;
  Design design;
  double theta_true = 0.0;
  double c_true = 0.0;
  PluginVariance plugin;
  std::vector<ReplicateRow> rows;  // replicate-major, estimator order within
  std::vector<ReplicateBlockStats> block_stats;
  std::vector<MethodSummary> summaries;
  std::vector<Verdict> verdicts;
  std::vector<Advisory> advisories;

  const MethodSummary* summary(EstimatorMethod m) const {
    for (const auto& s : summaries) {
      if (s.method == m) return &s;
    }
    return nullptr;
  }

  const Verdict* verdict(const std::string& name) const {
    for (const auto& v : verdicts) {
      if (v.name == name) return &v;
    }
    return nullptr;
  }

  // True iff no configured hard gate failed.
  bool gates_pass() const {
    for (const auto& gate : config.hard_gates) {
      const Verdict* v = verdict(gate);
      if (v && v->status == VerdictStatus::kFail) return false;
    }
    return true;
  }

  std::vector<double> scaled_errors(EstimatorMethod m) const {
    std::vector<double> out;
    for (const auto& row : rows) {
      if (row.method == m && row.theta_hat) {
        out.push_back(std::sqrt(static_cast<double>(config.n) * row.v_hat) * (*row.theta_hat - theta_true));
      }
    }
    return out;
  }
};

namespace detail {

inline std::vector<BlockFunctional> functional_set(const std::vector<std::string>& names) {
  if (names.empty()) throw Error(ErrorCode::kConfig, "functional set must not be empty");
  if (names.size() > kMaxFunctionals) {
    throw Error(ErrorCode::kInvalidParameter, "functional set size " + std::to_string(names.size()) +
                                                  " exceeds the cap of " + std::to_string(kMaxFunctionals));
  }
  std::vector<BlockFunctional> out;
  for (const auto& n : names) out.push_back(functional_by_name(n));
  return out;
}

struct ReplicateOutcome {
  std::vector<ReplicateRow> rows;
  ReplicateBlockStats stats;
};

inline ReplicateOutcome run_replicate(const ExperimentConfig& cfg, const Design& design,
                                      const std::vector<BlockFunctional>& functionals, std::size_t index,
                                      const PluginVariance& plugin, double theta_true) {
  ReplicateOutcome out;
  const Series path = simulate(cfg.model, cfg.n, derive_seed(cfg.seed, index, StreamTag::kPath));
  const double n = static_cast<double>(cfg.n);
  const std::size_t det_exceed = count_exceedances(path.values(), design.u);
  const double det_v_hat = static_cast<double>(det_exceed) / n;

  for (const auto method : cfg.estimators) {
    ReplicateRow row;
    row.replicate = index;
    row.method = method;
    try {
      ThetaEstimate est = method == EstimatorMethod::kSlidingRandomU
                              ? theta_sliding_random_u(path, design.k, design.s, cfg.options, design.u)
                              : estimate_theta(method, path, design.u, design.s, cfg.options);
      row.theta_hat = est.theta_hat;
      row.u_used = est.u_used;
      row.n_exceed = est.n_exceed;
      row.v_hat = method == EstimatorMethod::kSlidingRandomU
                      ? static_cast<double>(count_exceedances(path.values(), est.u_used)) / n
                      : det_v_hat;
      if (!plugin.degenerate && !plugin.negative) {
        row.z = std::sqrt(n * row.v_hat) * (est.theta_hat - theta_true) / std::sqrt(plugin.value);
      }
    } catch (const NoExceedanceError&) {
      row.status = "no_exceedance";
      row.v_hat = det_v_hat;
    } catch (const Error& e) {
      row.status = std::string("error:") + to_string(e.code());
      row.v_hat = det_v_hat;
    }
    out.rows.push_back(std::move(row));
  }

  // block statistics at the deterministic level
  const std::size_t s = design.s;
  if (s <= cfg.n && count_exceedances(path.values(), design.u, 0, cfg.n - s + 1) > 0) {
    const auto ns = normalize(path, design.u);
    const double denom = static_cast<double>(count_exceedances(path.values(), design.u, 0, cfg.n - s + 1));
    const double root_nv = std::sqrt(n * design.v);
    for (const auto& g : functionals) {
      const double sliding = sliding_block_sum(g, ns, s);
      const double disjoint = disjoint_block_sum(g, ns, s);
      const double sa = static_cast<double>(s) * g.scale;
      out.stats.t_s.push_back(root_nv * sliding / (n * design.v * sa));
      out.stats.t_d.push_back(root_nv * disjoint / (n * design.v * g.scale));
      out.stats.ratio_s.push_back(root_nv * (sliding / sa) / denom);
      out.stats.ratio_d.push_back(root_nv * (disjoint / g.scale) / denom);
    }
    out.stats.ok = true;
    try {
      const BlockScheme scheme(cfg.n, s, design.r);
      if (scheme.divisible() && scheme.m() >= 2) {
        out.stats.variance = variance_report(functional_by_name(cfg.dominance_functional), path, design.u, scheme);
      }
    } catch (const Error&) {
      out.stats.variance.reset();
    }
  }
  return out;
}

inline double variance_ratio(double a, double b) { return b > 0.0 ? a / b : INFINITY; }

}  // namespace detail

// Pairwise variance ratios of sqrt(n v_hat)(theta_hat - theta) across the
// block and runs estimators of one experiment (all share s).
inline Verdict equal_law_verdict(const ExperimentResult& res) {
  Verdict v{"equal_law", VerdictStatus::kSkipped, "", {}};
  if (res.plugin.degenerate) {
    v.detail = "degenerate_law";
    return v;
  }
  const EstimatorMethod methods[] = {EstimatorMethod::kDisjoint, EstimatorMethod::kSliding, EstimatorMethod::kRuns};
  std::vector<std::pair<EstimatorMethod, double>> variances;
  for (auto m : methods) {
    const auto* s = res.summary(m);
    if (s && s->ok >= 2) variances.emplace_back(m, s->scaled_variance);
  }
  if (variances.size() < 2) {
    v.status = VerdictStatus::kInsufficient;
    v.detail = "fewer than two estimators available";
    return v;
  }
  const double rho = res.config.tolerances.equal_law_rho;
  bool pass = true;
  for (std::size_t i = 0; i < variances.size(); ++i) {
    for (std::size_t j = i + 1; j < variances.size(); ++j) {
      const double ratio = detail::variance_ratio(variances[i].second, variances[j].second);
      v.values.emplace_back(std::string("ratio_") + to_string(variances[i].first) + "_" + to_string(variances[j].first),
                            ratio);
      if (!(ratio >= 1.0 / rho && ratio <= rho)) pass = false;
    }
  }
  for (const auto& [m, var] : variances) v.values.emplace_back(std::string("var_") + to_string(m), var);
  v.status = pass ? VerdictStatus::kPass : VerdictStatus::kFail;
  return v;
}

// Same check for explicit estimate sets. Sets using different block lengths
// are flagged as a misconfiguration in `detail`, not as a violation of the
// common limit law.
inline Verdict equal_law_verdict(const std::vector<std::vector<ThetaEstimate>>& estimates, double theta, double rho) {
  Verdict v{"equal_law", VerdictStatus::kSkipped, "", {}};
  if (estimates.size() < 2) {
    v.status = VerdictStatus::kInsufficient;
    return v;
  }
  std::vector<double> variances;
  std::optional<std::size_t> block;
  for (const auto& set : estimates) {
    if (set.size() < 2) {
      v.status = VerdictStatus::kInsufficient;
      return v;
    }
    std::vector<double> scaled;
    for (const auto& e : set) {
      if (block && *block != e.s) v.detail = "misconfiguration: estimators use different block lengths";
      block = e.s;
      const double v_hat = static_cast<double>(e.n_exceed) / static_cast<double>(e.n);
      scaled.push_back(std::sqrt(static_cast<double>(e.n) * v_hat) * (e.theta_hat - theta));
    }
    variances.push_back(stats::sample_variance(scaled));
  }
  bool pass = true;
  for (std::size_t i = 0; i < variances.size(); ++i) {
    for (std::size_t j = i + 1; j < variances.size(); ++j) {
      const double ratio = detail::variance_ratio(variances[i], variances[j]);
      v.values.emplace_back("ratio_" + std::to_string(i) + "_" + std::to_string(j), ratio);
      if (!(ratio >= 1.0 / rho && ratio <= rho)) pass = false;
    }
  }
  v.status = pass ? VerdictStatus::kPass : VerdictStatus::kFail;
  return v;
}

// Var_s <= Var_d + c * SE_jackknife(Var_d - Var_s) for T and for the ratio
// versions, functional `index` of the configured set.
inline Verdict dominance_verdict(const ExperimentResult& res, std::size_t index) {
  Verdict v{"dominance", VerdictStatus::kSkipped, "", {}};
  if (index >= res.config.functionals.size()) throw Error(ErrorCode::kInvalidParameter, "functional index out of range");
  v.detail = res.config.functionals[index];
  if (res.design.s == 0 || res.design.r % res.design.s != 0) {
    v.detail += ": r is not a multiple of s";
    return v;
  }
  std::vector<double> ts, td, rs, rd;
  for (const auto& st : res.block_stats) {
    if (!st.ok) continue;
    ts.push_back(st.t_s[index]);
    td.push_back(st.t_d[index]);
    rs.push_back(st.ratio_s[index]);
    rd.push_back(st.ratio_d[index]);
  }
  if (ts.size() < 3) {
    v.status = VerdictStatus::kInsufficient;
    v.detail += ": fewer than three usable replicates";
    return v;
  }
  const double k = res.config.tolerances.dominance_se;
  bool pass = true;
  auto check = [&](const std::string& tag, const std::vector<double>& s, const std::vector<double>& d) {
    const double var_s = stats::sample_variance(s);
    const double var_d = stats::sample_variance(d);
    const double se = stats::jackknife_se(s.size(), [&](std::size_t i) {
      return stats::sample_variance(stats::without(d, i)) - stats::sample_variance(stats::without(s, i));
    });
    v.values.emplace_back("var_s" + tag, var_s);
    v.values.emplace_back("var_d" + tag, var_d);
    v.values.emplace_back("se_diff" + tag, se);
    if (var_s > var_d + k * se) pass = false;
  };
  check("", ts, td);
  check("_ratio", rs, rd);
  v.values.emplace_back("replicates_used", static_cast<double>(ts.size()));
  v.status = pass ? VerdictStatus::kPass : VerdictStatus::kFail;
  return v;
}

// Across-replicate covariance matrices of (sqrt(n v) T^#(g))_{g in G}.
inline CovMatrixPair empirical_cov_matrices(const std::vector<const ReplicateBlockStats*>& used, std::size_t dim,
                                            std::optional<std::size_t> excluded = std::nullopt) {
  CovMatrixPair pair{SymMatrix(dim), SymMatrix(dim)};
  std::vector<std::vector<double>> s(dim), d(dim);
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (excluded && *excluded == i) continue;
    for (std::size_t g = 0; g < dim; ++g) {
      s[g].push_back(used[i]->t_s[g]);
      d[g].push_back(used[i]->t_d[g]);
    }
  }
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      pair.c_s(a, b) = pair.c_s(b, a) = stats::sample_covariance(s[a], s[b]);
      pair.c_d(a, b) = pair.c_d(b, a) = stats::sample_covariance(d[a], d[b]);
    }
  }
  return pair;
}

inline Verdict loewner_verdict(const ExperimentResult& res) {
  Verdict v{"loewner", VerdictStatus::kSkipped, "", {}};
  const std::size_t dim = res.config.functionals.size();
  if (dim > kMaxFunctionals) throw Error(ErrorCode::kInvalidParameter, "functional set exceeds the cap of 16");
  if (res.design.s == 0 || res.design.r % res.design.s != 0) {
    v.detail = "r is not a multiple of s";
    return v;
  }
  std::vector<const ReplicateBlockStats*> used;
  for (const auto& st : res.block_stats) {
    if (st.ok) used.push_back(&st);
  }
  if (used.size() < 3) {
    v.status = VerdictStatus::kInsufficient;
    return v;
  }
  const LoewnerVerdict full = loewner_compare(empirical_cov_matrices(used, dim), 0.0);
  const double se = stats::jackknife_se(used.size(), [&](std::size_t i) {
    return loewner_compare(empirical_cov_matrices(used, dim, i), 0.0).lambda_min;
  });
  const double tol = res.config.tolerances.loewner_se * se;
  v.values = {{"lambda_min", full.lambda_min}, {"se", se}, {"tolerance", tol},
              {"dimension", static_cast<double>(dim)}, {"replicates_used", static_cast<double>(used.size())}};
  v.status = full.lambda_min >= -tol ? VerdictStatus::kPass : VerdictStatus::kFail;
  return v;
}

namespace detail {

inline MethodSummary summarize(const ExperimentResult& res, EstimatorMethod method) {
  MethodSummary sum;
  sum.method = method;
  std::vector<double> theta, z;
  for (const auto& row : res.rows) {
    if (row.method != method) continue;
    if (row.theta_hat) {
      ++sum.ok;
      theta.push_back(*row.theta_hat);
      if (row.z) z.push_back(*row.z);
    } else {
      ++sum.failed;
    }
  }
  if (!theta.empty()) {
    sum.mean = stats::mean(theta);
    sum.bias = sum.mean - res.theta_true;
  }
  if (theta.size() >= 2) {
    sum.variance = stats::sample_variance(theta);
    sum.scaled_variance = stats::sample_variance(res.scaled_errors(method));
  }
  if (res.plugin.degenerate || res.plugin.negative) {
    sum.normality_status = "degenerate_law";
  } else if (z.size() < 50) {
    sum.normality_status = "insufficient_sample";
  } else {
    sum.normality = stats::normality_diagnostic(z);
    sum.normality_status = "ok";
  }
  return sum;
}

inline bool has_method(const ExperimentConfig& cfg, EstimatorMethod m) {
  return std::find(cfg.estimators.begin(), cfg.estimators.end(), m) != cfg.estimators.end();
}

inline std::vector<Verdict> compute_verdicts(const ExperimentResult& res) {
  const auto& tol = res.config.tolerances;
  std::vector<Verdict> out;

  Verdict consistency{"consistency", VerdictStatus::kPass, "", {}};
  for (const auto& s : res.summaries) {
    consistency.values.emplace_back(std::string("mean_") + to_string(s.method), s.mean);
    if (s.ok == 0 || std::abs(s.mean - res.theta_true) > tol.mean_band) consistency.status = VerdictStatus::kFail;
  }
  out.push_back(consistency);

  out.push_back(equal_law_verdict(res));

  Verdict random{"random_threshold", VerdictStatus::kSkipped, "", {}};
  const auto* det = res.summary(EstimatorMethod::kSliding);
  const auto* rnd = res.summary(EstimatorMethod::kSlidingRandomU);
  if (res.plugin.degenerate) {
    random.detail = "degenerate_law";
  } else if (det && rnd && det->ok >= 2 && rnd->ok >= 2) {
    const double ratio = variance_ratio(rnd->scaled_variance, det->scaled_variance);
    random.values = {{"ratio", ratio}, {"var_random", rnd->scaled_variance}, {"var_sliding", det->scaled_variance}};
    random.status = ratio >= 1.0 / tol.equal_law_rho && ratio <= tol.equal_law_rho ? VerdictStatus::kPass
                                                                                    : VerdictStatus::kFail;
  } else {
    random.status = VerdictStatus::kInsufficient;
  }
  out.push_back(random);

  Verdict normality{"normality", VerdictStatus::kSkipped, "", {}};
  const MethodSummary* target = det;
  for (auto m : {EstimatorMethod::kSliding, EstimatorMethod::kDisjoint, EstimatorMethod::kRuns}) {
    if (!target) target = res.summary(m);
  }
  if (res.plugin.degenerate || res.plugin.negative) {
    normality.detail = "degenerate_law";
  } else if (!target || !target->normality) {
    normality.status = VerdictStatus::kInsufficient;
    normality.detail = "insufficient_sample";
  } else {
    const auto& d = *target->normality;
    normality.detail = to_string(target->method);
    normality.values = {{"mean_z", d.mean}, {"sd_z", d.sd}, {"max_cdf_dev", d.max_cdf_dev}};
    const bool ok = d.sd >= tol.sd_low && d.sd <= tol.sd_high && d.max_cdf_dev < tol.normality_max_dev;
    normality.status = ok ? VerdictStatus::kPass : VerdictStatus::kFail;
  }
  out.push_back(normality);

  Verdict degenerate{"degenerate_routing", VerdictStatus::kSkipped, "", {}};
  if (res.plugin.degenerate) {
    const MethodSummary* s = det;
    if (!s || s->ok < 2) {
      degenerate.status = VerdictStatus::kInsufficient;
    } else {
      degenerate.detail = "diagnostics skipped: degenerate limit law";
      degenerate.values = {{"scaled_variance_sliding", s->scaled_variance}};
      degenerate.status = s->scaled_variance < tol.degenerate_var_max ? VerdictStatus::kPass : VerdictStatus::kFail;
    }
  }
  out.push_back(degenerate);

  const auto& names = res.config.functionals;
  const auto it = std::find(names.begin(), names.end(), res.config.dominance_functional);
  if (it == names.end()) {
    out.push_back({"dominance", VerdictStatus::kSkipped, "dominance functional not in the functional set", {}});
  } else {
    out.push_back(dominance_verdict(res, static_cast<std::size_t>(it - names.begin())));
  }

  if (names.size() >= 2) {
    out.push_back(loewner_verdict(res));
  } else {
    Verdict l = dominance_verdict(res, 0);
    l.name = "loewner";
    l.detail = "singleton functional set: " + l.detail;
    out.push_back(l);
  }
  return out;
}

}  // namespace detail

// R independent replicates, deterministic given the master seed for any
// worker count: replicate i draws from its own derived stream and results are
// reduced in index order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates < 2) throw Error(ErrorCode::kConfig, "replicates must be >= 2");
  if (cfg.estimators.empty()) throw Error(ErrorCode::kConfig, "estimator set must not be empty");
  cfg.model.validate();
  ExperimentResult res;
  res.config = cfg;
  res.design = resolve_design(cfg);
  detail::check_window(cfg.n, res.design.s);
  if (res.design.r < res.design.s || res.design.r > cfg.n) {
    throw Error(ErrorCode::kConfig, "r must lie in [s, n]");
  }
  const auto functionals = detail::functional_set(cfg.functionals);
  res.theta_true = cfg.model.theta_true();
  res.c_true = tail_process_c_analytic(cfg.model);
  res.plugin = plugin_asymptotic_variance(res.theta_true, res.c_true);
  res.advisories = sequence_advisories(cfg.n, res.design.v, res.design.s, res.design.r);

  std::vector<detail::ReplicateOutcome> outcomes(cfg.replicates);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.replicates; i = next++) {
      try {
        outcomes[i] = detail::run_replicate(cfg, res.design, functionals, i, res.plugin, res.theta_true);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, cfg.replicates);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (auto& o : outcomes) {
    for (auto& row : o.rows) res.rows.push_back(std::move(row));
    res.block_stats.push_back(std::move(o.stats));
  }
  for (auto m : cfg.estimators) res.summaries.push_back(detail::summarize(res, m));

  for (const auto& s : res.summaries) {
    if (s.failed * 10 > cfg.replicates) {
      throw Error(ErrorCode::kNoExceedance,
                  std::string("estimator ") + to_string(s.method) + " failed in " + std::to_string(s.failed) + " of " +
                      std::to_string(cfg.replicates) + " replicates (more than 10%); raise the threshold rank or n");
    }
  }
  res.verdicts = detail::compute_verdicts(res);
  return res;
}

inline Verdict variance_dominance_check(ExperimentConfig cfg, const std::string& functional) {
  if (std::find(cfg.functionals.begin(), cfg.functionals.end(), functional) == cfg.functionals.end()) {
    cfg.functionals.push_back(functional);
  }
  cfg.dominance_functional = functional;
  return *run_experiment(cfg).verdict("dominance");
}

inline Verdict loewner_check(ExperimentConfig cfg, const std::vector<std::string>& functionals) {
  if (functionals.size() > kMaxFunctionals) {
    throw Error(ErrorCode::kInvalidParameter, "functional set size " + std::to_string(functionals.size()) +
                                                  " exceeds the cap of " + std::to_string(kMaxFunctionals));
  }
  if (functionals.empty()) throw Error(ErrorCode::kInvalidParameter, "functional set must not be empty");
  cfg.functionals = functionals;
  cfg.dominance_functional = functionals.front();
  return *run_experiment(cfg).verdict("loewner");
}

inline Verdict equal_limit_law_check(const ExperimentConfig& cfg) { return *run_experiment(cfg).verdict("equal_law"); }

}  // namespace extremal
