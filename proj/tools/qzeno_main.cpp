// Copyright 2026 The qzeno Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qzeno command line: sweeps, single trajectories, oracle checks and the
// post-processing of result tables.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qzeno/ensemble.hpp"
#include "qzeno/sweep.hpp"
#include "qzeno/verify.hpp"

namespace {

using namespace qzeno;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalError = 2;

SweepConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  SweepConfig cfg = SweepConfig::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int cmd_sweep(const std::string& path, const std::vector<std::string>& overrides, bool no_resume, bool quiet) {
  const SweepConfig cfg = load_config(path, overrides);
  SweepRunOptions run;
  run.resume = !no_resume;
  if (!quiet) {
    run.progress = [](std::size_t done, std::size_t total) {
      std::fprintf(stderr, "\rpoint %zu/%zu", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  }
  const auto rows = run_sweep(cfg, run);
  if (!quiet) std::fprintf(stderr, "%zu rows written to %s.csv\n", rows.size(), cfg.output.c_str());
  return kOk;
}

int cmd_trajectory(const std::string& path, const std::vector<std::string>& overrides, const std::string& out_path) {
  const SweepConfig cfg = load_config(path, overrides);
  const auto points = expand_grid(cfg);
  const SweepPoint& p = points.front();
  std::vector<Observable> observables;
  for (const auto& o : cfg.observables) observables.push_back(Observable::parse(o));
  const auto rec = run_trajectory(p.params, p.options, cfg.protocol, derive_seed(p.seed, 0),
                                  make_initial_state(cfg.initial, p.L), observables);

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::trunc);
    if (!file) throw ConfigError("cannot write '" + out_path + "'");
  }
  std::ostream& os = out_path.empty() ? std::cout : file;
  os << "# Gamma=" << format_double(p.gamma) << " lambda=" << format_double(p.lambda)
     << " eta=" << format_double(p.eta) << " L=" << p.L << " seed=" << rec.seed
     << " incidents=" << rec.positivity_incidents << "\n";
  os << "t";
  for (const auto& n : rec.observable_names) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    os << format_double(rec.times[k]);
    for (const auto& v : rec.values) os << ',' << format_double(v[k]);
    os << '\n';
  }
  if (rec.aborted) {
    std::cerr << "trajectory aborted: " << rec.diagnostic << "\n";
    return kNumericalError;
  }
  return kOk;
}

int cmd_verify(std::uint64_t seed) {
  const auto results = run_verification_suite(seed);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%s %-30s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.passed;
  }
  return all ? kOk : kNumericalError;
}

int cmd_critical(const std::string& path, const std::string& obs, double gamma, double eta, double threshold) {
  const auto rows = load_rows(path);
  CriticalEstimate e;
  try {
    e = estimate_critical_lambda(rows, Observable::parse(obs).name(), gamma, eta, threshold);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  std::printf("observable   %s\n", e.observable.c_str());
  std::printf("Gamma        %s\neta          %s\n", format_double(e.Gamma).c_str(), format_double(e.eta).c_str());
  std::printf("sizes        %d..%d\n", e.L_min, e.L_max);
  for (const auto& [l, d] : e.D) std::printf("  lambda %-10g D %+.3f\n", l, d);
  std::printf("lambda_crit  %g +- %g\n", e.lambda_crit, e.uncertainty);
  std::printf("at_boundary  %s\n", to_string(e.at_boundary).c_str());
  std::printf("method       %s\n", e.method.c_str());
  return kOk;
}

int cmd_extremum(const std::string& path, const std::string& obs, double lambda, double eta, int L,
                 const std::string& kind) {
  const auto rows = load_rows(path);
  const auto curve = curve_along_gamma(rows, Observable::parse(obs).name(), lambda, eta, L);
  std::optional<Extremum> ex;
  try {
    ex = detect_nonmonotonicity(curve, parse_extremum_kind(kind));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (const auto& c : curve) std::printf("  Gamma %-10g %.6f +- %.6f\n", c.x, c.mean, c.stderr_);
  if (!ex) {
    std::printf("no significant interior extremum\n");
    return kOk;
  }
  std::printf("%s at Gamma = %g +- %g (value %.6f, significance %.2f)\n", to_string(ex->kind).c_str(), ex->location,
              ex->resolution, ex->value, ex->significance);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monitored noisy XX chain: trajectory sweeps and analysis"};
  app.require_subcommand(1);

  std::string config_path, rows_path, out_path, obs = "concurrence", kind = "either";
  std::vector<std::string> overrides;
  bool no_resume = false, quiet = false;
  double gamma = 0.0, eta = 1.0, lambda = 0.0, threshold = 2.0;
  int L = 2;
  std::uint64_t seed = 20260101;

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--set", overrides, "Override a config key (key=value)");
  sweep->add_flag("--no-resume", no_resume, "Recompute every point");
  sweep->add_flag("--quiet", quiet, "No progress output");

  auto* traj = app.add_subcommand("trajectory", "Dump one trajectory of the first grid point");
  traj->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  traj->add_option("--set", overrides, "Override a config key (key=value)");
  traj->add_option("-o,--output", out_path, "Write to file instead of stdout");

  auto* verify = app.add_subcommand("verify", "Check the integrators against the oracles");
  verify->add_option("--seed", seed, "RNG seed");

  auto* crit = app.add_subcommand("critical", "Estimate the critical measurement strength");
  crit->add_option("rows", rows_path, "Result table (.csv or .json)")->required()->check(CLI::ExistingFile);
  crit->add_option("--observable", obs, "e (negativity) or P (parity)")->required();
  crit->add_option("--gamma", gamma, "Noise strength")->required();
  crit->add_option("--eta", eta, "Efficiency")->required();
  crit->add_option("--threshold", threshold, "|D| threshold");

  auto* ext = app.add_subcommand("extremum", "Find an interior extremum along Gamma");
  ext->add_option("rows", rows_path, "Result table (.csv or .json)")->required()->check(CLI::ExistingFile);
  ext->add_option("--lambda", lambda, "Measurement strength")->required();
  ext->add_option("--eta", eta, "Efficiency")->required();
  ext->add_option("--observable", obs, "Observable label");
  ext->add_option("--L", L, "Chain length");
  ext->add_option("--kind", kind, "max, min or either");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sweep) return cmd_sweep(config_path, overrides, no_resume, quiet);
    if (*traj) return cmd_trajectory(config_path, overrides, out_path);
    if (*verify) return cmd_verify(seed);
    if (*crit) return cmd_critical(rows_path, obs, gamma, eta, threshold);
    if (*ext) return cmd_extremum(rows_path, obs, lambda, eta, L, kind);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
