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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "qzeno/sweep.hpp"

using namespace qzeno;
namespace fs = std::filesystem;

namespace {

// Scratch directory removed at scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qzeno_sweep_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string prefix(const std::string& name) const { return (path / name).string(); }
  static inline int counter = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SweepConfig toy(const std::string& output) {
  SweepConfig c = SweepConfig::parse(R"(
# small grid
gamma = 0.5, 1, 2
lambda = 0.3
eta = 1, 0.5
L = 2
t_burn = 2
t_window = 4
n_traj = 6
observables = concurrence, parity
)");
  c.output = output;
  return c;
}

std::vector<CurvePoint> curve(const std::vector<double>& x, const std::vector<double>& y, double se) {
  std::vector<CurvePoint> c;
  for (std::size_t i = 0; i < x.size(); ++i) c.push_back({x[i], y[i], se});
  return c;
}

// Synthetic size scan: O = base + slope * L below lambda_c, flat above.
std::vector<ResultRow> synthetic_rows(double lambda_c, const std::vector<double>& lambdas, double se) {
  std::vector<ResultRow> rows;
  for (double l : lambdas) {
    for (int L : {4, 6, 8}) {
      ResultRow r;
      r.Gamma = 0.1;
      r.lambda = l;
      r.eta = 1.0;
      r.L = L;
      r.observable = "negativity";
      r.mean = l <= lambda_c ? 0.2 + 0.05 * L : 0.2;
      r.stderr_ = se;
      r.n_traj = 100;
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace

TEST_CASE("parse_grid") {
  CHECK(parse_grid("0.5, 1,2") == std::vector<double>{0.5, 1, 2});
  const auto lin = parse_grid("0:1:5");
  REQUIRE(lin.size() == 5);
  CHECK(lin[1] == doctest::Approx(0.25));
  CHECK(lin.back() == 1.0);
  const auto geo = parse_grid("0.1:10:5:log");
  REQUIRE(geo.size() == 5);
  CHECK(geo[2] == doctest::Approx(1.0));
  CHECK(geo.back() == 10.0);
  CHECK_THROWS_AS(parse_grid(""), ConfigError);
  CHECK_THROWS_AS(parse_grid("1:2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:1:3:log"), ConfigError);
  CHECK_THROWS_AS(parse_grid("a,b"), ConfigError);
}

TEST_CASE("SweepConfig: parsing and validation") {
  const auto c = toy("x");
  CHECK(c.gamma.size() == 3);
  CHECK(c.eta == std::vector<double>{1, 0.5});
  CHECK(c.protocol.n_traj == 6);
  CHECK(c.observables == std::vector<std::string>{"concurrence", "parity"});
  CHECK_NOTHROW(c.validate());

  CHECK_THROWS_AS(SweepConfig::parse("colour = red"), ConfigError);
  CHECK_THROWS_AS(SweepConfig::parse("gamma 1"), ConfigError);
  CHECK_THROWS_AS(SweepConfig::parse("n_traj = many"), ConfigError);
  CHECK_THROWS_AS(SweepConfig::parse("observables = entropy"), ConfigError);
  CHECK_THROWS_AS(SweepConfig::load("/nonexistent/config"), ConfigError);

  auto bad = c;
  bad.lambda.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.L = {3};  // concurrence needs two sites, parity an even L
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.set("L", "4");
  bad.set("observables", "negativity,parity");
  CHECK_NOTHROW(bad.validate());
  bad.set("L", "5");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.set("eta", "1.5");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.set("sample_interval", "0.001");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.set("L", "14");
  bad.set("observables", "parity");
  CHECK_THROWS_AS(bad.validate(), ConfigError);  // too large for density matrices at eta < 1
  bad.set("eta", "1");
  CHECK_NOTHROW(bad.validate());
  bad = c;
  bad.set("unraveling", "jump");
  bad.set("gamma_jump", "50");
  CHECK_NOTHROW(bad.validate());  // the automatic step keeps gamma_jump dt small
  bad.set("dt", "0.01");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.set("dt", "0.001");
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("expand_grid: order, seeds and jump settings") {
  auto c = toy("x");
  const auto pts = expand_grid(c);
  REQUIRE(pts.size() == 6);
  CHECK(pts[0].eta == 1.0);
  CHECK(pts[0].gamma == 0.5);
  CHECK(pts[1].gamma == 1.0);
  CHECK(pts[3].eta == 0.5);
  CHECK(pts[2].params.dt == doctest::Approx(0.025));
  CHECK(pts[0].seed == point_seed(c.master_seed, 0.5, 0.3, 1.0, 2));
  CHECK(pts[0].seed != pts[1].seed);

  // Seeds do not depend on the surrounding grid.
  auto d = c;
  d.set("gamma", "2");
  CHECK(expand_grid(d)[0].seed == pts[2].seed);

  c.set("unraveling", "jump");
  c.set("eta", "0.57");
  const auto j = expand_grid(c);
  CHECK(j[0].options.jump.gamma_jump == doctest::Approx(1.2));
  CHECK(std::pow(2 * j[0].options.jump.Delta - 1, 2) == doctest::Approx(0.57));
  CHECK(j[0].options.jump.epsilon(j[0].params.dt) <= 0.05 + 1e-12);
}

TEST_CASE("run_sweep: one point equals steady_state_average") {
  TempDir dir;
  auto c = toy(dir.prefix("one"));
  c.set("gamma", "1");
  c.set("eta", "1");
  const auto rows = run_sweep(c);
  REQUIRE(rows.size() == 2);
  const auto p = expand_grid(c)[0];
  const auto stats = steady_state_average(p.params, p.options, c.protocol, p.seed, parse_observables("concurrence,parity"),
                                          make_initial_state("neel", 2));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(rows[i].observable == stats[i].observable);
    CHECK(rows[i].mean == stats[i].mean);
    CHECK(rows[i].stderr_ == stats[i].std_error);
    CHECK(rows[i].n_traj == 6);
    CHECK(rows[i].seed == p.seed);
  }
  CHECK(fs::exists(c.output + ".csv"));
  CHECK(fs::exists(c.output + ".json"));
}

TEST_CASE("run_sweep: deterministic and resumable") {
  TempDir dir;
  const auto a = toy(dir.prefix("a"));
  const auto b = toy(dir.prefix("b"));
  const auto rows_a = run_sweep(a);
  run_sweep(b);
  CHECK(slurp(a.output + ".csv") == slurp(b.output + ".csv"));
  CHECK(rows_a.size() == 12);

  // Simulate an interrupt: keep the header, two complete points and a torn line.
  const std::string full = slurp(a.output + ".csv");
  std::istringstream lines(full);
  std::string line, partial;
  for (int i = 0; i < 5 && std::getline(lines, line); ++i) partial += line + "\n";
  std::getline(lines, line);
  partial += line.substr(0, line.size() / 2);
  {
    std::ofstream out(b.output + ".csv", std::ios::trunc);
    out << partial;
  }
  int computed = 0;
  SweepRunOptions run;
  run.progress = [&](std::size_t, std::size_t) { ++computed; };
  const auto resumed = run_sweep(b, run);
  CHECK(computed == 4);  // two points were complete
  CHECK(resumed == rows_a);
  CHECK(slurp(b.output + ".csv") == full);
  CHECK(slurp(b.output + ".json") == slurp(a.output + ".json").replace(slurp(a.output + ".json").find(a.output),
                                                                        a.output.size(), b.output));

  // A table from another seed is refused rather than mixed in.
  auto other = b;
  other.master_seed = 99;
  CHECK_THROWS_AS(run_sweep(other), ConfigError);
  SweepRunOptions fresh;
  fresh.resume = false;
  CHECK_NOTHROW(run_sweep(other, fresh));
}

TEST_CASE("run_sweep: noise-only grid sits at one half") {
  TempDir dir;
  auto c = SweepConfig::parse("gamma = 0.5,1,2\nlambda = 0\neta = 1\nL = 2\nt_burn = 20\nt_window = 80\nn_traj = 300\n");
  c.output = dir.prefix("noise");
  const auto rows = run_sweep(c);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(std::abs(r.mean - 0.5) < 0.02);
}

TEST_CASE("CSV: golden header, 17 digits, round trip") {
  CHECK(std::string(kCsvHeader) == "Gamma,lambda,eta,L,observable,mean,stderr,n_traj,seed,dt,incidents");
  ResultRow r{0.1, 1.0 / 3.0, 0.8, 4, "negativity", 0.123456789012345678, 1e-3, 250, 18446744073709551615ULL, 0.0125, 2};
  const std::string line = csv_line(r);
  CHECK(line.find("0.33333333333333331") != std::string::npos);
  const auto back = parse_csv(to_csv({r, r}));
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  ResultRow n = r;
  n.mean = std::nan("");
  const auto nb = parse_csv(to_csv({n}));
  CHECK(std::isnan(nb[0].mean));
  CHECK_THROWS(parse_csv("a,b,c\n1,2,3\n"));
  CHECK(parse_csv(to_csv({})).empty());
}

TEST_CASE("JSON: config echo, empty estimates, estimate round trip") {
  TempDir dir;
  const auto c = toy(dir.prefix("j"));
  const ResultRow r{1.0, 0.3, 1.0, 2, "concurrence", 0.25, 0.01, 6, 42, 0.05, 0};
  emit_report(c.output, &c, {r}, {});
  const auto rep = parse_json(slurp(c.output + ".json"));
  CHECK(rep.estimates.empty());
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0] == r);
  bool saw_seed = false;
  for (const auto& [k, v] : rep.config)
    if (k == "master_seed") saw_seed = v == "1";
  CHECK(saw_seed);
  CHECK(load_rows(c.output + ".csv") == load_rows(c.output + ".json"));

  const auto lambdas = std::vector<double>{1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5};
  const auto est = estimate_critical_lambda(synthetic_rows(3.0, lambdas, 0.01), "negativity", 0.1, 1.0);
  const auto text = to_json(&c, {r}, {est});
  const auto back = parse_json(text);
  REQUIRE(back.estimates.size() == 1);
  CHECK(back.estimates[0] == est);
  CHECK(to_json(&c, {r}, {est}) == text);
  CHECK_THROWS(parse_json("{\"rows\": 3}"));
}

TEST_CASE("detect_nonmonotonicity: synthetic curves") {
  const std::vector<double> x{0.5, 1, 1.5, 2, 2.5, 3, 3.5};
  std::vector<double> falling, parab;
  for (double v : x) {
    falling.push_back(1.0 / v);
    parab.push_back(1.0 - 0.1 * (v - 2.0) * (v - 2.0));
  }
  CHECK_FALSE(detect_nonmonotonicity(curve(x, falling, 0.001)).has_value());

  const auto ex = detect_nonmonotonicity(curve(x, parab, 1e-4));
  REQUIRE(ex.has_value());
  CHECK(ex->kind == ExtremumKind::Maximum);
  CHECK(std::abs(ex->location - 2.0) <= ex->resolution);
  CHECK(ex->location == doctest::Approx(2.0));
  CHECK(ex->resolution == doctest::Approx(0.25));

  // Same shape, error bars too large: not significant.
  CHECK_FALSE(detect_nonmonotonicity(curve(x, parab, 0.2)).has_value());

  std::vector<double> dip;
  for (double v : parab) dip.push_back(-v);
  CHECK_FALSE(detect_nonmonotonicity(curve(x, dip, 1e-4), ExtremumKind::Maximum).has_value());
  const auto mn = detect_nonmonotonicity(curve(x, dip, 1e-4), ExtremumKind::Either);
  REQUIRE(mn.has_value());
  CHECK(mn->kind == ExtremumKind::Minimum);

  CHECK_THROWS(detect_nonmonotonicity(curve({1, 2, 3}, {1, 2, 1}, 0.1)));
  CHECK_THROWS(detect_nonmonotonicity(curve({1, 3, 2, 4}, {1, 2, 1, 0}, 0.1)));
  CHECK(parse_extremum_kind("min") == ExtremumKind::Minimum);
}

TEST_CASE("detect_nonmonotonicity: invariant under common rescaling") {
  const std::vector<double> x{0.1, 0.3, 1, 3, 10};
  const std::vector<double> y{0.30, 0.34, 0.36, 0.33, 0.31};
  const std::vector<double> se{0.005, 0.01, 0.008, 0.006, 0.01};
  auto build = [&](double s) {
    std::vector<CurvePoint> c;
    for (std::size_t i = 0; i < x.size(); ++i) c.push_back({x[i], s * y[i], s * se[i]});
    return c;
  };
  const auto base = detect_nonmonotonicity(build(1.0));
  REQUIRE(base.has_value());
  for (double s : {1e-3, 0.5, 7.0, 1e4}) {
    const auto r = detect_nonmonotonicity(build(s));
    REQUIRE(r.has_value());
    CHECK(r->index == base->index);
    CHECK(r->location == doctest::Approx(base->location));
    CHECK(r->significance == doctest::Approx(base->significance));
  }
}

TEST_CASE("curve_along_gamma selects and sorts") {
  std::vector<ResultRow> rows;
  for (double g : {2.0, 0.5, 1.0}) rows.push_back({g, 0.4, 1.0, 2, "concurrence", g, 0.1, 10, 1, 0.05, 0});
  rows.push_back({3.0, 0.4, 0.5, 2, "concurrence", 9, 0.1, 10, 1, 0.05, 0});
  rows.push_back({3.0, 0.4, 1.0, 2, "parity", 9, 0.1, 10, 1, 0.05, 0});
  const auto c = curve_along_gamma(rows, "concurrence", 0.4, 1.0, 2);
  REQUIRE(c.size() == 3);
  CHECK(c[0].x == 0.5);
  CHECK(c[2].x == 2.0);
}

TEST_CASE("estimate_critical_lambda: synthetic crossings and boundaries") {
  const std::vector<double> lambdas{1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5};
  const auto e = estimate_critical_lambda(synthetic_rows(3.0, lambdas, 0.01), "negativity", 0.1, 1.0);
  CHECK(e.at_boundary == BoundaryFlag::None);
  CHECK(std::abs(e.lambda_crit - 3.0) <= 0.5 + 1e-12);
  CHECK(e.uncertainty == doctest::Approx(0.25));
  CHECK(e.L_min == 4);
  CHECK(e.L_max == 8);
  CHECK(e.method == "size-threshold");
  CHECK(e.D.size() == lambdas.size());

  // Interpolation through |D| = 2 between neighbours.
  auto rows = synthetic_rows(3.0, lambdas, 0.01);
  for (auto& r : rows)
    if (r.lambda == 3.5) r.mean = 0.2 + (r.L == 8 ? 0.01 * std::sqrt(2.0) : 0.0);  // D = 1 at lambda 3.5
  const auto f = estimate_critical_lambda(rows, "negativity", 0.1, 1.0);
  CHECK(f.lambda_crit > 3.0);
  CHECK(f.lambda_crit < 3.5);

  const auto never = estimate_critical_lambda(synthetic_rows(0.0, lambdas, 0.01), "negativity", 0.1, 1.0);
  CHECK(never.at_boundary == BoundaryFlag::Lower);
  CHECK(never.lambda_crit == 1.0);
  const auto always = estimate_critical_lambda(synthetic_rows(10.0, lambdas, 0.01), "negativity", 0.1, 1.0);
  CHECK(always.at_boundary == BoundaryFlag::Upper);
  CHECK(always.lambda_crit == 5.0);

  CHECK_THROWS(estimate_critical_lambda(synthetic_rows(3.0, {1, 2, 3, 4}, 0.01), "negativity", 0.1, 1.0));
  auto two_sizes = synthetic_rows(3.0, lambdas, 0.01);
  std::erase_if(two_sizes, [](const ResultRow& r) { return r.L == 6; });
  CHECK_THROWS(estimate_critical_lambda(two_sizes, "negativity", 0.1, 1.0));
  auto holes = synthetic_rows(3.0, lambdas, 0.01);
  holes.pop_back();
  CHECK_THROWS(estimate_critical_lambda(holes, "negativity", 0.1, 1.0));
}
