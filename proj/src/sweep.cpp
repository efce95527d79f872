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

#include "qzeno/sweep.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace qzeno {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ConfigError("'" + std::string(key) + "': not a number: '" + std::string(v) + "'");
  }
  return x;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  Int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "': not an integer: '" + std::string(v) + "'");
  }
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "': expected true or false");
}

template <class F>
auto rethrow_as_config(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + std::string(key) + "': " + e.what());
  }
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finaliser applied to the running hash
  std::uint64_t z = h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool same(double a, double b) { return a == b || std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

using PointKey = std::tuple<int, double, double, double>;  // L, eta, lambda, Gamma

}  // namespace

std::vector<double> parse_grid(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw ConfigError("empty grid");
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3 && parts.size() != 4) throw ConfigError("range grids read lo:hi:n or lo:hi:n:log");
    const double lo = to_double("grid", parts[0]);
    const double hi = to_double("grid", parts[1]);
    const int n = to_int<int>("grid", parts[2]);
    const bool geometric = parts.size() == 4;
    if (geometric && parts[3] != "log") throw ConfigError("range grids read lo:hi:n or lo:hi:n:log");
    if (n < 1) throw ConfigError("range grid needs n >= 1");
    if (geometric && !(lo > 0.0 && hi > 0.0)) throw ConfigError("geometric range needs positive end points");
    for (int k = 0; k < n; ++k) {
      const double f = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
      out.push_back(geometric ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
    }
    if (n > 1) out.back() = hi;
    return out;
  }
  for (auto v : split(text, ',')) out.push_back(to_double("grid", v));
  return out;
}

// SweepConfig ---------------------------------------------------------------

void SweepConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "gamma" || key == "Gamma") {
    gamma = parse_grid(value);
  } else if (key == "lambda") {
    lambda = parse_grid(value);
  } else if (key == "eta") {
    eta = parse_grid(value);
  } else if (key == "L") {
    L.clear();
    for (auto v : split(value, ',')) L.push_back(to_int<int>(key, v));
  } else if (key == "unraveling") {
    unraveling = rethrow_as_config(key, [&] { return parse_unraveling(value); });
  } else if (key == "t_burn") {
    protocol.t_burn = to_double(key, value);
  } else if (key == "t_window") {
    protocol.t_window = to_double(key, value);
  } else if (key == "sample_interval") {
    protocol.sample_interval = to_double(key, value);
  } else if (key == "n_traj") {
    protocol.n_traj = to_int<int>(key, value);
  } else if (key == "time_average") {
    protocol.time_average = to_bool(key, value);
  } else if (key == "master_seed" || key == "seed") {
    master_seed = to_int<std::uint64_t>(key, value);
  } else if (key == "observables") {
    observables.clear();
    for (auto v : split(value, ',')) {
      rethrow_as_config(key, [&] { return Observable::parse(v); });
      observables.emplace_back(v);
    }
  } else if (key == "output") {
    if (value.empty()) throw ConfigError("'output' must not be empty");
    output = value;
  } else if (key == "initial") {
    initial = value;
  } else if (key == "boundary") {
    boundary = rethrow_as_config(key, [&] { return parse_boundary(value); });
  } else if (key == "dt") {
    dt = value == "auto" ? 0.0 : to_double(key, value);
    if (value != "auto" && !(dt > 0.0)) throw ConfigError("'dt' must be positive or auto");
  } else if (key == "gamma_jump") {
    gamma_jump = value == "auto" ? -1.0 : to_double(key, value);
    if (value != "auto" && !(gamma_jump >= 0.0)) throw ConfigError("'gamma_jump' must be >= 0 or auto");
  } else if (key == "negativity_base") {
    if (value == "e" || value == "natural") {
      negativity_base = LogBase::Natural;
    } else if (value == "2") {
      negativity_base = LogBase::Two;
    } else {
      throw ConfigError("'negativity_base' must be e or 2");
    }
  } else if (key == "scheme") {
    scheme = rethrow_as_config(key, [&] { return parse_step_scheme(value); });
  } else if (key == "threads") {
    threads = to_int<int>(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

SweepConfig SweepConfig::parse(std::string_view text) {
  SweepConfig c;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

SweepConfig SweepConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void SweepConfig::validate() const {
  if (gamma.empty() || lambda.empty() || eta.empty() || L.empty()) {
    throw ConfigError("grids for gamma, lambda, eta and L must be non-empty");
  }
  if (observables.empty()) throw ConfigError("no observables requested");
  try {
    for (double g : gamma) {
      if (!(g >= 0.0)) throw ConfigError("gamma values must be >= 0");
    }
    for (double l : lambda) {
      if (!(l >= 0.0)) throw ConfigError("lambda values must be >= 0");
    }
    for (double e : eta) {
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eta values must lie in [0, 1]");
    }
    const auto obs = parse_observables(join(observables));
    for (int l : L) {
      if (l < 2) throw ConfigError("L must be >= 2");
      const bool density = unraveling == Unraveling::Jump || initial == "mixed" ||
                           std::any_of(eta.begin(), eta.end(), [](double e) { return e != 1.0; });
      if (density && l > kMaxDensitySites) {
        throw ConfigError("L = " + std::to_string(l) + " exceeds the density-matrix limit");
      }
      if (l > kMaxPureSites) throw ConfigError("L = " + std::to_string(l) + " exceeds the state-vector limit");
      for (const auto& o : obs) o.check_applicable(l);
      make_initial_state(initial, l);
    }
    if (threads < 0) throw ConfigError("threads must be >= 0");
    for (const auto& p : expand_grid(*this)) {
      p.params.validate();
      protocol.validate(p.params.dt);
      if (unraveling == Unraveling::Jump) p.options.jump.validate(p.params.dt);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::pair<std::string, std::string>> SweepConfig::entries() const {
  std::vector<std::string> ls;
  for (int l : L) ls.push_back(std::to_string(l));
  return {
      {"gamma", join_doubles(gamma)},
      {"lambda", join_doubles(lambda)},
      {"eta", join_doubles(eta)},
      {"L", join(ls)},
      {"unraveling", to_string(unraveling)},
      {"t_burn", format_double(protocol.t_burn)},
      {"t_window", format_double(protocol.t_window)},
      {"sample_interval", format_double(protocol.sample_interval)},
      {"n_traj", std::to_string(protocol.n_traj)},
      {"time_average", protocol.time_average ? "true" : "false"},
      {"master_seed", std::to_string(master_seed)},
      {"observables", join(observables)},
      {"output", output},
      {"initial", initial},
      {"boundary", to_string(boundary)},
      {"dt", dt > 0.0 ? format_double(dt) : "auto"},
      {"gamma_jump", gamma_jump >= 0.0 ? format_double(gamma_jump) : "auto"},
      {"negativity_base", negativity_base == LogBase::Natural ? "e" : "2"},
      {"scheme", to_string(scheme)},
  };
}

std::uint64_t point_seed(std::uint64_t master_seed, double gamma, double lambda, double eta, int L) {
  std::uint64_t h = mix(0x51ED27A1C0FFEE00ULL, std::bit_cast<std::uint64_t>(gamma));
  h = mix(h, std::bit_cast<std::uint64_t>(lambda));
  h = mix(h, std::bit_cast<std::uint64_t>(eta));
  h = mix(h, static_cast<std::uint64_t>(L));
  return derive_seed(master_seed, h);
}

std::vector<SweepPoint> expand_grid(const SweepConfig& c) {
  std::vector<SweepPoint> out;
  for (int L : c.L) {
    for (double eta : c.eta) {
      for (double lambda : c.lambda) {
        for (double gamma : c.gamma) {
          SweepPoint p;
          p.gamma = gamma;
          p.lambda = lambda;
          p.eta = eta;
          p.L = L;
          p.params = ModelParams::make(L, gamma, lambda, eta);
          p.params.boundary = c.boundary;
          p.params.scheme = c.scheme;
          p.options.unraveling = c.unraveling;
          p.options.negativity_base = c.negativity_base;
          p.options.threads = c.threads;
          if (c.unraveling == Unraveling::Jump) {
            p.options.jump.gamma_jump = c.gamma_jump >= 0.0 ? c.gamma_jump : 4.0 * lambda;
            p.options.jump.Delta = JumpParams::delta_for_efficiency(eta);
            p.params.dt = default_jump_dt(gamma, p.options.jump.gamma_jump);
          }
          if (c.dt > 0.0) p.params.dt = c.dt;
          p.seed = point_seed(c.master_seed, gamma, lambda, eta, L);
          out.push_back(std::move(p));
        }
      }
    }
  }
  return out;
}

std::vector<ResultRow> run_sweep(const SweepConfig& config, const SweepRunOptions& run) {
  config.validate();
  const auto points = expand_grid(config);
  const auto observables = parse_observables(join(config.observables));
  const std::string csv_path = config.output + ".csv";

  std::map<PointKey, std::vector<ResultRow>> done;
  if (run.write_files && run.resume && std::filesystem::exists(csv_path)) {
    std::ifstream in(csv_path);
    std::stringstream ss;
    ss << in.rdbuf();
    for (auto& r : parse_csv(ss.str())) done[{r.L, r.eta, r.lambda, r.Gamma}].push_back(std::move(r));
  }

  std::ofstream out;
  auto open_fresh = [&](const std::vector<ResultRow>& keep) {
    out.open(csv_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + csv_path + "'");
    out << kCsvHeader << '\n';
    for (const auto& r : keep) out << csv_line(r) << '\n';
    out.flush();
  };

  std::vector<std::vector<ResultRow>> results(points.size());
  std::vector<ResultRow> carried;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const auto it = done.find({p.L, p.eta, p.lambda, p.gamma});
    bool complete = it != done.end();
    if (complete) {
      std::vector<ResultRow> rows;
      for (const auto& o : observables) {
        const auto r = std::find_if(it->second.begin(), it->second.end(),
                                    [&](const ResultRow& x) { return x.observable == o.name(); });
        if (r == it->second.end()) {
          complete = false;
          break;
        }
        if (r->seed != p.seed || r->n_traj > config.protocol.n_traj || r->dt != p.params.dt) {
          throw ConfigError("'" + csv_path + "' holds results from a different configuration; remove it or disable resume");
        }
        rows.push_back(*r);
      }
      if (complete) {
        results[i] = rows;
        carried.insert(carried.end(), rows.begin(), rows.end());
      }
    }
    if (!complete) todo.push_back(i);
  }
  if (run.write_files) open_fresh(carried);

  std::size_t n_done = points.size() - todo.size();
  for (std::size_t i : todo) {
    const auto& p = points[i];
    const TrajectoryState initial = make_initial_state(config.initial, p.L);
    const auto stats = steady_state_average(p.params, p.options, config.protocol, p.seed, observables, initial);
    for (const auto& s : stats) {
      ResultRow r;
      r.Gamma = p.gamma;
      r.lambda = p.lambda;
      r.eta = p.eta;
      r.L = p.L;
      r.observable = s.observable;
      r.mean = s.mean;
      r.stderr_ = s.std_error;
      r.n_traj = s.n_traj;
      r.seed = p.seed;
      r.dt = p.params.dt;
      r.incidents = s.positivity_incidents;
      results[i].push_back(r);
      if (run.write_files) out << csv_line(r) << '\n';
    }
    if (run.write_files) out.flush();
    ++n_done;
    if (run.progress) run.progress(n_done, points.size());
  }

  std::vector<ResultRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  if (run.write_files) {
    out.close();
    emit_report(config.output, &config, rows, {}, true);
  }
  return rows;
}

// Analysis ------------------------------------------------------------------

ExtremumKind parse_extremum_kind(std::string_view label) {
  if (label == "max" || label == "maximum") return ExtremumKind::Maximum;
  if (label == "min" || label == "minimum") return ExtremumKind::Minimum;
  if (label == "either" || label == "any") return ExtremumKind::Either;
  throw std::invalid_argument("unknown extremum kind '" + std::string(label) + "'");
}

std::string to_string(ExtremumKind k) {
  switch (k) {
    case ExtremumKind::Maximum: return "maximum";
    case ExtremumKind::Minimum: return "minimum";
    case ExtremumKind::Either: return "either";
  }
  return "either";
}

namespace {

std::optional<Extremum> find_extremum(const std::vector<CurvePoint>& c, bool maximum) {
  const double sign = maximum ? 1.0 : -1.0;
  const std::size_t n = c.size();
  std::size_t k = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (sign * c[i].mean > sign * c[k].mean) k = i;
  }
  if (k == 0 || k == n - 1) return std::nullopt;
  auto excess = [&](std::size_t e) {
    const double se = std::hypot(c[k].stderr_, c[e].stderr_);
    const double diff = sign * (c[k].mean - c[e].mean);
    if (se == 0.0) return diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return diff / se;
  };
  const double sig = std::min(excess(0), excess(n - 1));
  if (!(sig > 2.0)) return std::nullopt;

  Extremum ex;
  ex.kind = maximum ? ExtremumKind::Maximum : ExtremumKind::Minimum;
  ex.index = k;
  ex.value = c[k].mean;
  ex.significance = sig;
  const double x0 = c[k - 1].x, x1 = c[k].x, x2 = c[k + 1].x;
  const double y0 = c[k - 1].mean, y1 = c[k].mean, y2 = c[k + 1].mean;
  ex.resolution = 0.5 * std::max(x1 - x0, x2 - x1);
  // Vertex of the interpolating parabola (divided differences).
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  ex.location = x1;
  if (a != 0.0 && std::isfinite(a)) {
    const double b = d01 - a * (x0 + x1);
    ex.location = std::clamp(-b / (2.0 * a), x0, x2);
  }
  return ex;
}

}  // namespace

std::optional<Extremum> detect_nonmonotonicity(const std::vector<CurvePoint>& curve, ExtremumKind kind) {
  if (curve.size() < 4) throw std::invalid_argument("detect_nonmonotonicity needs at least 4 points");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (!(curve[i].x > curve[i - 1].x)) throw std::invalid_argument("curve must be strictly sorted by Gamma");
  }
  for (const auto& p : curve) {
    if (!std::isfinite(p.mean) || !(p.stderr_ >= 0.0)) throw std::invalid_argument("curve has invalid values");
  }
  if (kind != ExtremumKind::Minimum) {
    if (auto m = find_extremum(curve, true)) return m;
    if (kind == ExtremumKind::Maximum) return std::nullopt;
  }
  return find_extremum(curve, false);
}

std::vector<CurvePoint> curve_along_gamma(const std::vector<ResultRow>& rows, const std::string& observable,
                                          double lambda, double eta, int L) {
  std::vector<CurvePoint> c;
  for (const auto& r : rows) {
    if (r.observable == observable && same(r.lambda, lambda) && same(r.eta, eta) && r.L == L) {
      c.push_back({r.Gamma, r.mean, r.stderr_});
    }
  }
  std::sort(c.begin(), c.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
  return c;
}

std::string to_string(BoundaryFlag f) {
  switch (f) {
    case BoundaryFlag::None: return "none";
    case BoundaryFlag::Lower: return "lower";
    case BoundaryFlag::Upper: return "upper";
  }
  return "none";
}

CriticalEstimate estimate_critical_lambda(const std::vector<ResultRow>& rows, const std::string& observable,
                                          double Gamma, double eta, double threshold) {
  // lambda -> L -> row
  std::map<double, std::map<int, const ResultRow*>> table;
  std::set<int> sizes;
  for (const auto& r : rows) {
    if (r.observable != observable || !same(r.Gamma, Gamma) || !same(r.eta, eta)) continue;
    table[r.lambda][r.L] = &r;
    sizes.insert(r.L);
  }
  if (sizes.size() < 3) throw std::invalid_argument("critical estimate needs at least 3 system sizes");
  if (table.size() < 5) throw std::invalid_argument("critical estimate needs at least 5 lambda values");
  const int lmin = *sizes.begin();
  const int lmax = *sizes.rbegin();

  CriticalEstimate est;
  est.observable = observable;
  est.Gamma = Gamma;
  est.eta = eta;
  est.L_min = lmin;
  est.L_max = lmax;
  for (const auto& [lambda, by_size] : table) {
    if (by_size.size() != sizes.size()) {
      throw std::invalid_argument("lambda = " + format_double(lambda) + " is missing some system sizes");
    }
    const ResultRow* lo = by_size.at(lmin);
    const ResultRow* hi = by_size.at(lmax);
    const double se = std::hypot(lo->stderr_, hi->stderr_);
    const double diff = hi->mean - lo->mean;
    double D = 0.0;
    if (se > 0.0) {
      D = diff / se;
    } else if (diff != 0.0) {
      D = std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    est.D.emplace_back(lambda, D);
  }

  const auto& D = est.D;
  const std::size_t n = D.size();
  for (std::size_t i = n - 1; i-- > 0;) {
    const double a = std::abs(D[i].second);
    const double b = std::abs(D[i + 1].second);
    if (a > threshold && b <= threshold) {
      const double l0 = D[i].first, l1 = D[i + 1].first;
      const double f = std::isfinite(a) ? (a - threshold) / (a - b) : 1.0;
      est.lambda_crit = l0 + f * (l1 - l0);
      est.uncertainty = 0.5 * (l1 - l0);
      return est;
    }
  }
  if (std::abs(D.back().second) > threshold) {
    est.at_boundary = BoundaryFlag::Upper;
    est.lambda_crit = D.back().first;
    est.uncertainty = 0.5 * (D[n - 1].first - D[n - 2].first);
  } else {
    est.at_boundary = BoundaryFlag::Lower;
    est.lambda_crit = D.front().first;
    est.uncertainty = 0.5 * (D[1].first - D[0].first);
  }
  return est;
}

}  // namespace qzeno
