// Command-line front end: simulate, estimate, experiment, check.
//
// Exit codes: 0 success, 1 experiment hard gate failed, 2 usage/config,
// 3 degenerate data (no exceedances), 4 internal error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "extremal/extremal.hpp"
#include "extremal/report.hpp"

namespace fs = std::filesystem;
using namespace extremal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGateFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitInternal = 4;

struct Options {
  std::optional<std::string> config;
  std::optional<std::string> model;
  std::optional<double> alpha;
  std::optional<std::size_t> q;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<double> u;
  std::optional<std::size_t> rank_k;
  std::optional<std::size_t> s;
  std::optional<std::size_t> r;
  std::optional<std::string> method;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> replicates;
  std::optional<std::string> out;
  std::optional<std::string> denominator;
  std::string input;
  bool clip_unit = false;
  bool stderr_requested = false;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError({"config file '" + path + "' is not valid JSON: " + e.what()});
  }
}

// Flags override values from the config file.
Json apply_overrides(Json j, const Options& o) {
  if (!j.is_object()) j = Json::object();
  if (!j.contains("schema")) j["schema"] = 1;
  if (o.model) {
    j["model"] = Json{{"family", *o.model}};
  }
  if (o.alpha) j["model"]["alpha"] = *o.alpha;
  if (o.q) j["model"]["q"] = *o.q;
  if (o.n) j["n"] = *o.n;
  if (o.seed) j["seed"] = *o.seed;
  if (o.rank_k) j["threshold"] = Json{{"rank_k", *o.rank_k}};
  if (o.s) j["s"] = *o.s;
  if (o.r) j["r"] = *o.r;
  if (o.workers) j["workers"] = *o.workers;
  if (o.replicates) j["replicates"] = *o.replicates;
  if (o.denominator) j["denominator"] = *o.denominator;
  if (o.clip_unit) j["clip_unit"] = true;
  return j;
}

Json load_config(const Options& o) {
  Json base = o.config ? read_json_file(*o.config) : Json::object();
  return apply_overrides(std::move(base), o);
}

void print_error_json(const std::string& code, const std::string& message, const Json& extra = Json::object()) {
  Json j{{"error", code}, {"message", message}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::cout << j.dump() << "\n";
}

Series read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open input file '" + path + "'"});
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.find(',') != std::string::npos) {
      throw ConfigError({"input line " + std::to_string(line_no) + ": expected a single column"});
    }
    char* end = nullptr;
    const double x = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0') {
      if (values.empty() && line_no == 1) continue;  // header
      throw ConfigError({"input line " + std::to_string(line_no) + ": not a number: '" + line + "'"});
    }
    values.push_back(x);
  }
  if (values.empty()) throw ConfigError({"input file '" + path + "' contains no values"});
  return Series(std::move(values));
}

fs::path sibling_config_path(const fs::path& out) {
  return out.parent_path() / (out.stem().string() + ".effective_config.json");
}

int cmd_simulate(const Options& o) {
  const Json j = load_config(o);
  std::vector<std::string> issues;
  ModelSpec model = j.contains("model") ? parse_model(j.at("model"), issues) : ModelSpec::iid();
  if (!j.contains("model")) issues.push_back("--model is required");
  if (!j.contains("n")) issues.push_back("--n is required");
  const std::size_t n = j.value("n", std::size_t{0});
  if (j.contains("n") && n < 1) issues.push_back("--n must be >= 1");
  if (!issues.empty()) throw ConfigError(issues);
  const std::uint64_t seed = j.value("seed", std::uint64_t{0});

  const Series path = simulate(model, n, seed);
  std::ostringstream csv;
  csv << "x\n";
  for (double x : path.values()) csv << format_real(x) << '\n';
  if (o.out) {
    write_text_file(*o.out, csv.str());
    Json eff{{"command", "simulate"}, {"model", model_to_json(model)}, {"n", n}, {"seed", seed}};
    write_text_file(sibling_config_path(*o.out), eff.dump(2) + "\n");
  } else {
    std::cout << csv.str();
  }
  return kExitOk;
}

Json estimate_to_json(const ThetaEstimate& e) {
  Json j;
  j["method"] = to_string(e.method);
  j["theta_hat"] = e.theta_hat;
  j["u_used"] = e.u_used;
  j["s"] = e.s;
  j["n"] = e.n;
  j["n_exceed"] = e.n_exceed;
  if (e.k) j["k"] = *e.k;
  if (e.d_ratio) j["d_ratio"] = *e.d_ratio;
  if (e.stderr_hat) j["stderr"] = *e.stderr_hat;
  return j;
}

int cmd_estimate(const Options& o) {
  std::vector<std::string> issues;
  if (o.u.has_value() == o.rank_k.has_value()) issues.push_back("exactly one of --u or --rank-k is required");
  EstimatorOptions opts;
  opts.clip_unit = o.clip_unit;
  if (o.denominator) {
    if (*o.denominator == "full") {
      opts.denominator = Denominator::kFull;
    } else if (*o.denominator == "trimmed") {
      opts.denominator = Denominator::kTrimmed;
    } else if (*o.denominator != "default") {
      issues.push_back("--denominator must be 'default', 'trimmed' or 'full'");
    }
  }
  std::vector<EstimatorMethod> methods;
  const std::string method = o.method.value_or("sliding");
  if (method == "all") {
    methods = {EstimatorMethod::kDisjoint, EstimatorMethod::kSliding, EstimatorMethod::kRuns};
  } else {
    try {
      methods.push_back(method_from_string(method));
    } catch (const Error& e) {
      issues.push_back(e.what());
    }
  }
  if (!issues.empty()) throw ConfigError(issues);

  const Series x = read_series_csv(o.input);
  if (o.rank_k && (*o.rank_k < 1 || *o.rank_k >= x.size())) {
    throw ConfigError({"--rank-k must lie in [1, n) for n=" + std::to_string(x.size())});
  }
  if (o.s && (*o.s < 1 || *o.s > x.size())) throw ConfigError({"--s must lie in [1, n]"});

  const double u = o.rank_k ? kth_largest(x.values(), *o.rank_k) : *o.u;
  std::size_t s = 0;
  if (o.s) {
    s = *o.s;
  } else {
    const std::size_t k = o.rank_k ? *o.rank_k : std::max<std::size_t>(1, count_exceedances(x.values(), u));
    s = default_block_length(x.size(), k);
  }

  Json eff{{"command", "estimate"}, {"input", o.input}, {"method", method}, {"s", s},
           {"clip_unit", opts.clip_unit},
           {"denominator", to_string(opts.denominator)}};
  if (o.rank_k) eff["rank_k"] = *o.rank_k;
  if (o.u) eff["u"] = *o.u;

  Json results = Json::array();
  for (auto m : methods) {
    ThetaEstimate est;
    if (o.rank_k && (m == EstimatorMethod::kSliding || m == EstimatorMethod::kSlidingRandomU)) {
      est = theta_sliding_random_u(x, *o.rank_k, s, opts);
    } else if (m == EstimatorMethod::kSlidingRandomU) {
      throw ConfigError({"--method sliding_random_u requires --rank-k"});
    } else {
      est = estimate_theta(m, x, u, s, opts);
    }
    if (o.stderr_requested) {
      const double v_hat = static_cast<double>(count_exceedances(x.values(), est.u_used)) / static_cast<double>(x.size());
      std::size_t r = o.r.value_or(0);
      if (r == 0) {
        const double blocks = std::round(std::sqrt(static_cast<double>(x.size()) * v_hat) / static_cast<double>(s));
        r = s * std::max<std::size_t>(2, static_cast<std::size_t>(blocks));
      }
      eff["r"] = r;
      const BlockScheme scheme(x.size(), s, std::min(r, x.size()));
      est.stderr_hat = plugin_stderr(est.theta_hat, estimate_c_v(x, est.u_used, scheme), x.size(), v_hat);
    }
    results.push_back(estimate_to_json(est));
  }
  const Json out = results.size() == 1 ? results[0] : Json{{"estimates", results}};
  if (o.out) {
    write_text_file(*o.out, out.dump(2) + "\n");
    write_text_file(sibling_config_path(*o.out), eff.dump(2) + "\n");
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_experiment(const Options& o) {
  Json j = load_config(o);
  ExperimentConfig cfg = parse_experiment_config(j);
  const fs::path dir = o.out ? fs::path(*o.out) : fs::path(j.value("output_dir", std::string("experiment_out")));
  const ExperimentResult res = run_experiment(cfg);
  const ExperimentFiles files = write_experiment(res, dir);
  std::cout << "wrote " << files.csv.string() << " and " << files.summary.string() << "\n";
  for (const auto& v : res.verdicts) {
    std::cout << "  " << v.name << ": " << to_string(v.status);
    if (!v.detail.empty()) std::cout << " (" << v.detail << ")";
    std::cout << "\n";
  }
  return res.gates_pass() ? kExitOk : kExitGateFailed;
}

std::string short_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

int cmd_check(const Options& o) {
  Json j = load_config(o);
  if (!j.contains("model")) j["model"] = Json{{"family", "iid"}};
  ExperimentConfig cfg = parse_experiment_config(j);
  const Design d = resolve_design(cfg);
  std::cout << "sequence check: n=" << cfg.n << " k=" << d.k << " v=" << format_real(d.v) << " s=" << d.s
            << " r=" << d.r << "\n";
  for (const auto& a : sequence_advisories(cfg.n, d.v, d.s, d.r)) {
    std::cout << "  [" << to_string(a.level) << "] " << a.name << " = " << short_real(a.value) << "  " << a.message
              << "\n";
  }
  if (o.out) {
    fs::create_directories(*o.out);
    write_text_file(fs::path(*o.out) / "effective_config.json", config_to_json(cfg).dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremal index estimation and Monte Carlo verification"};
  app.require_subcommand(1);
  Options o;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "Model family: iid | armax | moving_max");
    sub->add_option("--alpha", o.alpha, "ARMAX coefficient in (0,1)");
    sub->add_option("--q", o.q, "Moving maximum order");
  };

  auto* sim = app.add_subcommand("simulate", "Simulate a path and write it as a one-column CSV");
  add_model(sim);
  sim->add_option("--config", o.config, "JSON config file");
  sim->add_option("--n", o.n, "Path length")->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed, "Seed");
  sim->add_option("--out", o.out, "Output CSV path (stdout if omitted)");

  auto* est = app.add_subcommand("estimate", "Estimate the extremal index of a one-column CSV");
  est->add_option("input", o.input, "Input CSV")->required();
  est->add_option("--u", o.u, "Deterministic threshold");
  est->add_option("--rank-k", o.rank_k, "Random threshold: k-th largest observation");
  est->add_option("--s", o.s, "Block length");
  est->add_option("--r", o.r, "Big-block length for --stderr");
  est->add_option("--method", o.method, "disjoint | sliding | runs | sliding_random_u | all");
  est->add_option("--denominator", o.denominator, "default | trimmed (1..n-s+1) | full (1..n)");
  est->add_flag("--clip-unit", o.clip_unit, "Clip estimates to [0,1]");
  est->add_flag("--stderr", o.stderr_requested, "Report a plug-in standard error");
  est->add_option("--out", o.out, "Output JSON path (stdout if omitted)");

  auto* exp = app.add_subcommand("experiment", "Run a replicated Monte Carlo experiment");
  exp->add_option("config", o.config, "JSON config file")->required();
  add_model(exp);
  exp->add_option("--n", o.n, "Path length")->check(CLI::PositiveNumber);
  exp->add_option("--seed", o.seed, "Master seed");
  exp->add_option("--rank-k", o.rank_k, "Threshold rank k");
  exp->add_option("--s", o.s, "Block length");
  exp->add_option("--r", o.r, "Big-block length");
  exp->add_option("--replicates", o.replicates, "Replicate count R");
  exp->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  exp->add_option("--denominator", o.denominator, "default | trimmed | full");
  exp->add_flag("--clip-unit", o.clip_unit, "Clip estimates to [0,1]");
  exp->add_option("--out", o.out, "Output directory");

  auto* chk = app.add_subcommand("check", "Report sequence-validity advisories for n, k, s, r");
  chk->add_option("config", o.config, "JSON config file");
  chk->add_option("--n", o.n, "Sample size")->check(CLI::PositiveNumber);
  chk->add_option("--rank-k", o.rank_k, "Threshold rank k");
  chk->add_option("--s", o.s, "Block length");
  chk->add_option("--r", o.r, "Big-block length");
  chk->add_option("--out", o.out, "Directory for the effective config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*est) return cmd_estimate(o);
    if (*exp) return cmd_experiment(o);
    if (*chk) return cmd_check(o);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const NoExceedanceError& e) {
    print_error_json("no_exceedance", e.what(), Json{{"n", e.n()}, {"u", e.u()}});
    std::cerr << e.what() << "\n";
    return kExitDegenerate;
  } catch (const Error& e) {
    print_error_json(to_string(e.code()), e.what());
    std::cerr << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kNoExceedance:
      case ErrorCode::kInsufficientData:
      case ErrorCode::kInsufficientEvents:
      case ErrorCode::kInsufficientSample:
        return kExitDegenerate;
      case ErrorCode::kIo:
      case ErrorCode::kConfig:
      case ErrorCode::kInvalidParameter:
      case ErrorCode::kInvalidThreshold:
      case ErrorCode::kWindow:
      case ErrorCode::kScheme:
        return kExitUsage;
      default:
        return kExitInternal;
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
