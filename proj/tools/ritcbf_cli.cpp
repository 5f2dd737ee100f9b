// Command-line front end: run, verify, max-horizon and sweep over scenario files.
//
// Exit codes
//   0  success (safe run / verified)
//   1  configuration or usage error
//   2  safety-infeasible event ended the run
//   3  true constraint violation detected
//   4  not verified at the sampling resolution
//   5  max-horizon bracket error

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ritcbf/sim.hpp"

namespace fs = std::filesystem;
using namespace ritcbf;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kInfeasible = 2, kViolation = 3, kNotVerified = 4, kBracketError = 5 };

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::kConfig, "cannot create output directory " + dir);
  return p;
}

int status_exit(RunStatus s) {
  switch (s) {
    case RunStatus::Safe: return kOk;
    case RunStatus::SafetyInfeasible: return kInfeasible;
    case RunStatus::Violation: return kViolation;
  }
  return kConfigError;
}

// Sets a dotted path ("timing.T_M") in the serialized config; the path must already exist.
ScenarioConfig set_param(const ScenarioConfig& c, const std::string& path, double value) {
  if (path == "timing.T_M") return with_T_M(c, value);
  json j = to_json(c);
  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part))
      throw Error(ErrorKind::kConfig, "unknown parameter path '" + path + "'");
    node = &(*node)[part];
  }
  if (!node->is_number()) throw Error(ErrorKind::kConfig, "parameter '" + path + "' is not numeric");
  *node = value;
  return scenario_from_json(j);
}

struct RunArgs {
  std::string config, out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

int cmd_run(const RunArgs& a) {
  const ScenarioConfig c = load_scenario(a.config);
  const fs::path out = prepare_out(a.out);
  RunOptions opt;
  opt.keep_log = true;
  opt.duration = a.duration;
  const RunResult r = run_scenario(c, a.seed.value_or(c.seed), opt);
  {
    std::ofstream csv(out / "run.csv");
    if (!csv) throw Error(ErrorKind::kConfig, "cannot write run.csv");
    write_csv(csv, r.log);
  }
  json m = metrics_json(r.metrics);
  m["scenario"] = c.name;
  write_json(out / "metrics.json", m);
  std::cout << c.name << ": " << to_string(r.metrics.status) << ", max h " << r.metrics.max_h_all
            << ", impulses " << r.metrics.impulses << "\n";
  if (!r.metrics.abort_reason.empty()) std::cout << "  " << r.metrics.abort_reason << "\n";
  return status_exit(r.metrics.status);
}

struct VerifyArgs {
  std::string config, out = ".";
  double tm = 0.0;
  std::optional<int> samples;
};

int cmd_verify(const VerifyArgs& a) {
  const ScenarioConfig c = with_T_M(load_scenario(a.config), a.tm);
  const VerifyReport r = verify_scenario(c, a.samples);
  const std::string kind = c.mode == ActuationMode::Impulsive ? "rit_cbf" : "rt_cbf";
  write_json(prepare_out(a.out) / "report.json", verify_report_json(r, kind));
  std::cout << kind << " at T_M = " << a.tm << " s: " << (r.verified ? "verified" : "not verified")
            << " (worst margin " << r.worst_margin << ", " << r.samples_in_domain << "/" << r.samples_total
            << " samples in domain)\n";
  return r.verified ? kOk : kNotVerified;
}

struct HorizonArgs {
  std::string config, out = ".";
  double lo = 0.0, hi = 0.0, tol = 1.0;
  std::optional<int> samples;
};

int cmd_max_horizon(const HorizonArgs& a) {
  const ScenarioConfig c = load_scenario(a.config);
  const HorizonResult h = max_horizon(c, a.lo, a.hi, a.tol, a.samples);
  // Report at the returned horizon so the sampler metadata and witness travel with it.
  const UncertaintyBound cap = verifier_bound(with_T_M(c, a.hi));
  json j = verify_report_json(verify_scenario(with_T_M(c, h.T_M), a.samples, cap),
                              c.mode == ActuationMode::Impulsive ? "rit_cbf" : "rt_cbf");
  j["max_horizon"] = {{"T_M", h.T_M}, {"lo", a.lo}, {"hi", a.hi}, {"tol", a.tol}, {"monotone", h.monotone}};
  json probes = json::array();
  for (const auto& p : h.probes) {
    json e = {{"T_M", p.T_M}, {"verified", p.verified}, {"worst_margin", p.worst_margin}};
    if (!std::isfinite(p.worst_margin)) e["worst_margin"] = nullptr;
    probes.push_back(e);
  }
  j["max_horizon"]["probes"] = probes;
  write_json(prepare_out(a.out) / "report.json", j);
  std::cout << "max T_M = " << h.T_M << " s (" << h.probes.size() << " probes"
            << (h.monotone ? "" : ", NON-MONOTONE") << ")\n";
  return kOk;
}

struct SweepArgs {
  std::string config, out = ".", param;
  std::vector<std::string> values;
  std::optional<std::uint64_t> seed;
};

std::vector<double> parse_values(const std::vector<std::string>& text) {
  std::vector<double> v;
  for (const auto& s : text) {
    if (s.empty()) continue;
    std::size_t used = 0;
    try {
      v.push_back(std::stod(s, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw Error(ErrorKind::kConfig, "sweep value '" + s + "' is not a number");
  }
  if (v.empty()) throw Error(ErrorKind::kConfig, "sweep needs at least one value");
  return v;
}

int cmd_sweep(const SweepArgs& a) {
  const std::vector<double> values = parse_values(a.values);
  const ScenarioConfig base = load_scenario(a.config);
  std::vector<ScenarioConfig> cfgs;
  for (double v : values) cfgs.push_back(set_param(base, a.param, v));
  std::vector<RunMetrics> metrics(cfgs.size());
  const std::uint64_t seed = a.seed.value_or(base.seed);
  parallel_for(static_cast<int>(cfgs.size()),
               [&](int i) { metrics[i] = run_scenario(cfgs[i], seed, {false, std::nullopt}).metrics; });
  json runs = json::object();
  int code = kOk;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    std::ostringstream key;
    key << values[i];
    runs[key.str()] = metrics_json(metrics[i]);
    code = std::max(code, status_exit(metrics[i].status));
    std::cout << a.param << " = " << key.str() << ": " << to_string(metrics[i].status) << "\n";
  }
  write_json(prepare_out(a.out) / "sweep.json",
             {{"scenario", base.name}, {"param", a.param}, {"seed", seed}, {"values", values}, {"runs", runs}});
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust timed CBF toolkit"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "simulate one seeded scenario");
  run_cmd->add_option("--config", run.config, "scenario JSON")->required();
  run_cmd->add_option("--seed", run.seed, "random seed (default: config seed)");
  run_cmd->add_option("--out", run.out, "output directory");
  run_cmd->add_option("--duration", run.duration, "simulated seconds");

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "sample-based CBF certification at one T_M");
  ver_cmd->add_option("--config", ver.config, "scenario JSON")->required();
  ver_cmd->add_option("--tm", ver.tm, "measurement interval T_M (s)")->required();
  ver_cmd->add_option("--samples", ver.samples, "sample count");
  ver_cmd->add_option("--out", ver.out, "output directory");

  HorizonArgs hor;
  auto* hor_cmd = app.add_subcommand("max-horizon", "bisection for the largest certified T_M");
  hor_cmd->add_option("--config", hor.config, "scenario JSON")->required();
  hor_cmd->add_option("--lo", hor.lo, "lower bracket (s)")->required();
  hor_cmd->add_option("--hi", hor.hi, "upper bracket (s)")->required();
  hor_cmd->add_option("--tol", hor.tol, "bisection tolerance (s)");
  hor_cmd->add_option("--samples", hor.samples, "sample count");
  hor_cmd->add_option("--out", hor.out, "output directory");

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "one run per parameter value");
  sw_cmd->add_option("--config", sw.config, "scenario JSON")->required();
  sw_cmd->add_option("--param", sw.param, "dotted parameter path, e.g. timing.T_M")->required();
  sw_cmd->add_option("--values", sw.values, "comma-separated values")->required()->delimiter(',');
  sw_cmd->add_option("--seed", sw.seed, "random seed (default: config seed)");
  sw_cmd->add_option("--out", sw.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*ver_cmd) return cmd_verify(ver);
    if (*hor_cmd) return cmd_max_horizon(hor);
    if (*sw_cmd) return cmd_sweep(sw);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kBracket ? kBracketError : kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
