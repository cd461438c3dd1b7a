#pragma once

// Config parsing and CSV/JSON serialization for experiments. Depends on
// nlohmann/json (vendor/json.hpp).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/experiment.hpp"
#include "json.hpp"

namespace extremal {

using Json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : Error(ErrorCode::kConfig, join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid config:";
    for (const auto& i : issues) out += "\n  - " + i;
    return out;
  }

  std::vector<std::string> issues_;
};

// 17 significant digits, '.' decimal separator.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::vector<std::string>& issues) : issues_(issues) {}

  void allow_only(const Json& obj, const std::string& where, const std::set<std::string>& keys) {
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      if (!keys.count(key)) issues_.push_back(where + ": unknown key '" + key + "'");
    }
  }

  template <typename T>
  std::optional<T> get(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
          issues_.push_back(where + "." + key + ": expected a nonnegative integer");
          return std::nullopt;
        }
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) {
          issues_.push_back(where + "." + key + ": expected a number");
          return std::nullopt;
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
          issues_.push_back(where + "." + key + ": expected a boolean");
          return std::nullopt;
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {
          issues_.push_back(where + "." + key + ": expected a string");
          return std::nullopt;
        }
      }
      return v.get<T>();
    } catch (const std::exception& e) {
      issues_.push_back(where + "." + key + ": " + e.what());
      return std::nullopt;
    }
  }

  std::optional<std::vector<std::string>> strings(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const Json& v = obj.at(key);
    if (!v.is_array()) {
      issues_.push_back(where + "." + key + ": expected an array of strings");
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) {
        issues_.push_back(where + "." + key + ": expected an array of strings");
        return std::nullopt;
      }
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void issue(std::string msg) { issues_.push_back(std::move(msg)); }

 private:
  std::vector<std::string>& issues_;
};

}  // namespace detail

inline ModelSpec parse_model(const Json& j, std::vector<std::string>& issues) {
  detail::ConfigReader rd(issues);
  ModelSpec spec;
  if (!j.is_object()) {
    issues.push_back("model: expected an object");
    return spec;
  }
  rd.allow_only(j, "model", {"family", "alpha", "q", "weights", "burn_in"});
  const auto family = rd.get<std::string>(j, "family", "model");
  if (!family) {
    issues.push_back("model.family: required (iid | armax | moving_max)");
  } else if (*family == "iid" || *family == "iid_frechet") {
    spec = ModelSpec::iid();
  } else if (*family == "armax") {
    spec = ModelSpec::armax(rd.get<double>(j, "alpha", "model").value_or(0.5));
  } else if (*family == "moving_max" || *family == "mm") {
    spec = ModelSpec::moving_max(rd.get<std::size_t>(j, "q", "model").value_or(1));
    if (j.contains("weights")) {
      if (!j.at("weights").is_array()) {
        issues.push_back("model.weights: expected an array of numbers");
      } else {
        for (const auto& w : j.at("weights")) {
          if (w.is_number()) {
            spec.weights.push_back(w.get<double>());
          } else {
            issues.push_back("model.weights: expected an array of numbers");
          }
        }
      }
    }
  } else {
    issues.push_back("model.family: unknown family '" + *family + "'");
  }
  spec.burn_in = rd.get<std::size_t>(j, "burn_in", "model");
  try {
    spec.validate();
  } catch (const Error& e) {
    issues.push_back(std::string("model: ") + e.what());
  }
  return spec;
}

// Strict schema-1 parser; every violation is collected before throwing.
inline ExperimentConfig parse_experiment_config(const Json& j) {
  std::vector<std::string> issues;
  detail::ConfigReader rd(issues);
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
  rd.allow_only(j, "config",
                {"schema", "model", "n", "threshold", "s", "r", "estimators", "functionals", "dominance_functional",
                 "replicates", "seed", "workers", "denominator", "clip_unit", "tolerances", "hard_gates",
                 "output_dir"});
  const auto schema = rd.get<std::size_t>(j, "schema", "config");
  if (!schema) {
    if (!j.contains("schema")) issues.push_back("config.schema: required (must be 1)");
  } else if (*schema != 1) {
    issues.push_back("config.schema: unsupported version " + std::to_string(*schema));
  }
  if (j.contains("model")) {
    cfg.model = parse_model(j.at("model"), issues);
  } else {
    issues.push_back("config.model: required");
  }
  if (auto n = rd.get<std::size_t>(j, "n", "config")) cfg.n = *n;
  if (cfg.n < 2) issues.push_back("config.n: must be >= 2");

  if (j.contains("threshold")) {
    const Json& t = j.at("threshold");
    if (!t.is_object()) {
      issues.push_back("threshold: expected an object");
    } else {
      rd.allow_only(t, "threshold", {"rank_k", "quantile"});
      cfg.rank_k = rd.get<std::size_t>(t, "rank_k", "threshold");
      cfg.quantile = rd.get<double>(t, "quantile", "threshold");
      if (cfg.rank_k.has_value() == cfg.quantile.has_value()) {
        issues.push_back("threshold: exactly one of rank_k or quantile is required");
      }
      if (cfg.rank_k && (*cfg.rank_k < 1 || *cfg.rank_k >= cfg.n)) issues.push_back("threshold.rank_k: must lie in [1, n)");
      if (cfg.quantile && !(*cfg.quantile > 0.0 && *cfg.quantile < 1.0)) {
        issues.push_back("threshold.quantile: must lie in (0, 1)");
      }
    }
  }
  cfg.s = rd.get<std::size_t>(j, "s", "config");
  cfg.r = rd.get<std::size_t>(j, "r", "config");
  if (cfg.s && (*cfg.s < 1 || *cfg.s > cfg.n)) issues.push_back("config.s: must lie in [1, n]");
  if (cfg.s && cfg.r && *cfg.r < *cfg.s) issues.push_back("config.r: must be >= s");
  if (cfg.r && *cfg.r > cfg.n) issues.push_back("config.r: must be <= n");

  if (auto names = rd.strings(j, "estimators", "config")) {
    cfg.estimators.clear();
    for (const auto& name : *names) {
      try {
        cfg.estimators.push_back(method_from_string(name));
      } catch (const Error& e) {
        issues.push_back(std::string("config.estimators: ") + e.what());
      }
    }
    if (names->empty()) issues.push_back("config.estimators: must not be empty");
  }
  if (auto names = rd.strings(j, "functionals", "config")) {
    cfg.functionals = *names;
    if (names->empty()) issues.push_back("config.functionals: must not be empty");
    if (names->size() > kMaxFunctionals) issues.push_back("config.functionals: at most 16 functionals");
    for (const auto& name : *names) {
      try {
        functional_by_name(name);
      } catch (const Error& e) {
        issues.push_back(std::string("config.functionals: ") + e.what());
      }
    }
  }
  if (auto d = rd.get<std::string>(j, "dominance_functional", "config")) cfg.dominance_functional = *d;
  if (auto r = rd.get<std::size_t>(j, "replicates", "config")) cfg.replicates = *r;
  if (cfg.replicates < 2) issues.push_back("config.replicates: must be >= 2");
  if (auto s = rd.get<std::uint64_t>(j, "seed", "config")) cfg.seed = *s;
  if (auto w = rd.get<std::size_t>(j, "workers", "config")) cfg.workers = *w;
  if (cfg.workers < 1) issues.push_back("config.workers: must be >= 1");
  if (auto d = rd.get<std::string>(j, "denominator", "config")) {
    if (*d == "trimmed") {
      cfg.options.denominator = Denominator::kTrimmed;
    } else if (*d == "full") {
      cfg.options.denominator = Denominator::kFull;
    } else if (*d != "default") {
      issues.push_back("config.denominator: expected 'default', 'trimmed' or 'full'");
    }
  }
  if (auto c = rd.get<bool>(j, "clip_unit", "config")) cfg.options.clip_unit = *c;
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    if (!t.is_object()) {
      issues.push_back("tolerances: expected an object");
    } else {
      rd.allow_only(t, "tolerances",
                    {"mean_band", "equal_law_rho", "sd_low", "sd_high", "normality_max_dev", "dominance_se",
                     "loewner_se", "degenerate_var_max"});
      auto& tol = cfg.tolerances;
      tol.mean_band = rd.get<double>(t, "mean_band", "tolerances").value_or(tol.mean_band);
      tol.equal_law_rho = rd.get<double>(t, "equal_law_rho", "tolerances").value_or(tol.equal_law_rho);
      tol.sd_low = rd.get<double>(t, "sd_low", "tolerances").value_or(tol.sd_low);
      tol.sd_high = rd.get<double>(t, "sd_high", "tolerances").value_or(tol.sd_high);
      tol.normality_max_dev = rd.get<double>(t, "normality_max_dev", "tolerances").value_or(tol.normality_max_dev);
      tol.dominance_se = rd.get<double>(t, "dominance_se", "tolerances").value_or(tol.dominance_se);
      tol.loewner_se = rd.get<double>(t, "loewner_se", "tolerances").value_or(tol.loewner_se);
      tol.degenerate_var_max = rd.get<double>(t, "degenerate_var_max", "tolerances").value_or(tol.degenerate_var_max);
      if (!(tol.equal_law_rho >= 1.0)) issues.push_back("tolerances.equal_law_rho: must be >= 1");
    }
  }
  if (auto gates = rd.strings(j, "hard_gates", "config")) {
    for (const auto& g : *gates) {
      if (std::find(all_gates().begin(), all_gates().end(), g) == all_gates().end()) {
        issues.push_back("config.hard_gates: unknown gate '" + g + "'");
      }
    }
    cfg.hard_gates = *gates;
  }
  rd.get<std::string>(j, "output_dir", "config");
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

inline Json model_to_json(const ModelSpec& spec) {
  Json j;
  j["family"] = spec.name();
  if (spec.family == ModelFamily::kArmax) j["alpha"] = spec.alpha;
  if (spec.family == ModelFamily::kMovingMax) {
    j["q"] = spec.q;
    if (!spec.weights.empty()) j["weights"] = spec.weights;
  }
  j["burn_in"] = spec.burn_in_length();
  return j;
}

// Fully resolved config, including the derived s and r.
inline Json config_to_json(const ExperimentConfig& cfg) {
  const Design d = resolve_design(cfg);
  Json j;
  j["schema"] = 1;
  j["model"] = model_to_json(cfg.model);
  j["n"] = cfg.n;
  j["threshold"] = cfg.rank_k ? Json{{"rank_k", *cfg.rank_k}} : Json{{"quantile", *cfg.quantile}};
  j["s"] = d.s;
  j["r"] = d.r;
  Json est = Json::array();
  for (auto m : cfg.estimators) est.push_back(to_string(m));
  j["estimators"] = est;
  j["functionals"] = cfg.functionals;
  j["dominance_functional"] = cfg.dominance_functional;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["denominator"] = to_string(cfg.options.denominator);
  j["clip_unit"] = cfg.options.clip_unit;
  const auto& t = cfg.tolerances;
  j["tolerances"] = {{"mean_band", t.mean_band},
                     {"equal_law_rho", t.equal_law_rho},
                     {"sd_low", t.sd_low},
                     {"sd_high", t.sd_high},
                     {"normality_max_dev", t.normality_max_dev},
                     {"dominance_se", t.dominance_se},
                     {"loewner_se", t.loewner_se},
                     {"degenerate_var_max", t.degenerate_var_max}};
  j["hard_gates"] = cfg.hard_gates;
  return j;
}

inline void write_rows_csv(std::ostream& out, const std::vector<ReplicateRow>& rows) {
  out << "replicate,method,theta_hat,u_used,v_hat,n_exceed,z,status\n";
  for (const auto& row : rows) {
    out << row.replicate << ',' << to_string(row.method) << ','
        << (row.theta_hat ? format_real(*row.theta_hat) : "") << ','
        << (row.u_used ? format_real(*row.u_used) : "") << ',' << format_real(row.v_hat) << ',' << row.n_exceed << ','
        << (row.z ? format_real(*row.z) : "") << ',' << row.status << '\n';
  }
}

inline Json verdict_to_json(const Verdict& v) {
  Json j;
  j["status"] = to_string(v.status);
  if (!v.detail.empty()) j["detail"] = v.detail;
  Json values = Json::object();
  for (const auto& [k, x] : v.values) values[k] = x;
  j["values"] = values;
  return j;
}

inline Json summary_to_json(const ExperimentResult& res) {
  Json j;
  j["schema"] = 1;
  j["model"] = model_to_json(res.config.model);
  j["theta_true"] = res.theta_true;
  j["c_true"] = res.c_true;
  j["plugin_variance"] = {{"value", res.plugin.value},
                          {"degenerate", res.plugin.degenerate},
                          {"negative", res.plugin.negative}};
  j["design"] = {{"n", res.config.n}, {"v", res.design.v}, {"u", res.design.u},
                 {"k", res.design.k}, {"s", res.design.s}, {"r", res.design.r}};
  j["replicates"] = res.config.replicates;
  std::size_t ok = 0, failed = 0;
  for (const auto& row : res.rows) (row.theta_hat ? ok : failed)++;
  j["rows"] = {{"success", ok}, {"failed", failed}, {"total", res.rows.size()}};

  Json methods = Json::object();
  for (const auto& s : res.summaries) {
    Json m;
    m["success"] = s.ok;
    m["failed"] = s.failed;
    m["mean"] = s.mean;
    m["bias"] = s.bias;
    m["variance"] = s.variance;
    m["scaled_variance"] = s.scaled_variance;
    m["normality_status"] = s.normality_status;
    if (s.normality) {
      m["normality"] = {{"mean_z", s.normality->mean},
                        {"sd_z", s.normality->sd},
                        {"max_cdf_dev", s.normality->max_cdf_dev},
                        {"count", s.normality->count}};
    }
    methods[to_string(s.method)] = m;
  }
  j["estimators"] = methods;

  // means of the per-replicate big-block variance plug-ins
  std::vector<double> cs, cd, cv, csv, cdv;
  for (const auto& st : res.block_stats) {
    if (!st.variance) continue;
    cs.push_back(st.variance->c_s);
    cd.push_back(st.variance->c_d);
    cv.push_back(st.variance->c_v);
    csv.push_back(st.variance->c_sv);
    cdv.push_back(st.variance->c_dv);
  }
  if (!cs.empty()) {
    j["variance_lab"] = {{"functional", res.config.dominance_functional},
                         {"replicates", cs.size()},
                         {"mean_c_s", stats::mean(cs)},
                         {"mean_c_d", stats::mean(cd)},
                         {"mean_c_v", stats::mean(cv)},
                         {"mean_c_sv", stats::mean(csv)},
                         {"mean_c_dv", stats::mean(cdv)}};
  }

  Json verdicts = Json::object();
  for (const auto& v : res.verdicts) verdicts[v.name] = verdict_to_json(v);
  j["verdicts"] = verdicts;
  Json adv = Json::array();
  for (const auto& a : res.advisories) {
    adv.push_back({{"name", a.name}, {"value", a.value}, {"level", to_string(a.level)}, {"message", a.message}});
  }
  j["advisories"] = adv;
  j["hard_gates"] = res.config.hard_gates;
  j["gates_pass"] = res.gates_pass();
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

struct ExperimentFiles {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path effective_config;
};

inline ExperimentFiles write_experiment(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
  ExperimentFiles files{dir / "replicates.csv", dir / "summary.json", dir / "effective_config.json"};
  std::ostringstream csv;
  write_rows_csv(csv, res.rows);
  write_text_file(files.csv, csv.str());
  write_text_file(files.summary, summary_to_json(res).dump(2) + "\n");
  write_text_file(files.effective_config, config_to_json(res.config).dump(2) + "\n");
  return files;
}

}  // namespace extremal
