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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <type_traits>
#include <sstream>

#include <json.hpp>

#include "qzeno/sweep.hpp"

namespace qzeno {

namespace {

using nlohmann::json;

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s == "nan") {
    if constexpr (std::is_floating_point_v<T>) {
      out = std::numeric_limits<T>::quiet_NaN();
      return true;
    }
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// JSON has no NaN/inf; those travel as strings.
json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

json row_json(const ResultRow& r) {
  return json{{"Gamma", r.Gamma}, {"lambda", r.lambda}, {"eta", r.eta},     {"L", r.L},
              {"observable", r.observable}, {"mean", num(r.mean)}, {"stderr", num(r.stderr_)}, {"n_traj", r.n_traj},
              {"seed", r.seed}, {"dt", r.dt}, {"incidents", r.incidents}};
}

double from_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

json estimate_json(const CriticalEstimate& e) {
  json d = json::array();
  for (const auto& [l, v] : e.D) d.push_back(json::array({l, num(v)}));
  return json{{"lambda_crit", e.lambda_crit}, {"uncertainty", e.uncertainty},
              {"observable", e.observable},   {"Gamma", e.Gamma},
              {"eta", e.eta},                 {"method", e.method},
              {"at_boundary", to_string(e.at_boundary)},
              {"L_min", e.L_min},             {"L_max", e.L_max},
              {"D", d}};
}

BoundaryFlag parse_boundary_flag(const std::string& s) {
  if (s == "lower") return BoundaryFlag::Lower;
  if (s == "upper") return BoundaryFlag::Upper;
  return BoundaryFlag::None;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_line(const ResultRow& r) {
  std::string s;
  s += format_double(r.Gamma) + ',' + format_double(r.lambda) + ',' + format_double(r.eta) + ',';
  s += std::to_string(r.L) + ',' + r.observable + ',';
  s += format_double(r.mean) + ',' + format_double(r.stderr_) + ',';
  s += std::to_string(r.n_traj) + ',' + std::to_string(r.seed) + ',' + format_double(r.dt) + ',';
  s += std::to_string(r.incidents);
  return s;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string s(kCsvHeader);
  s += '\n';
  for (const auto& r : rows) s += csv_line(r) + '\n';
  return s;
}

std::vector<ResultRow> parse_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  bool header = true;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kCsvHeader) throw std::runtime_error("unexpected CSV header: " + std::string(line));
      header = false;
      continue;
    }
    const auto f = fields(line);
    if (f.size() != 11) continue;
    ResultRow r;
    r.observable = std::string(f[4]);
    const bool ok = parse_number(f[0], r.Gamma) && parse_number(f[1], r.lambda) && parse_number(f[2], r.eta) &&
                    parse_number(f[3], r.L) && parse_number(f[5], r.mean) && parse_number(f[6], r.stderr_) &&
                    parse_number(f[7], r.n_traj) && parse_number(f[8], r.seed) && parse_number(f[9], r.dt) &&
                    parse_number(f[10], r.incidents);
    if (ok && !r.observable.empty()) rows.push_back(std::move(r));
  }
  if (header) throw std::runtime_error("CSV has no header");
  return rows;
}

std::string to_json(const SweepConfig* config, const std::vector<ResultRow>& rows,
                    const std::vector<CriticalEstimate>& estimates) {
  json j;
  json cfg = json::object();
  if (config) {
    for (const auto& [k, v] : config->entries()) cfg[k] = v;
  }
  j["config"] = cfg;
  j["columns"] = std::string(kCsvHeader);
  j["rows"] = json::array();
  for (const auto& r : rows) j["rows"].push_back(row_json(r));
  j["estimates"] = json::array();
  for (const auto& e : estimates) j["estimates"].push_back(estimate_json(e));
  return j.dump(2) + "\n";
}

Report parse_json(std::string_view text) {
  Report rep;
  json j;
  try {
    j = json::parse(text);
    for (const auto& [k, v] : j.at("config").items()) rep.config.emplace_back(k, v.get<std::string>());
    for (const auto& x : j.at("rows")) {
      ResultRow r;
      r.Gamma = x.at("Gamma").get<double>();
      r.lambda = x.at("lambda").get<double>();
      r.eta = x.at("eta").get<double>();
      r.L = x.at("L").get<int>();
      r.observable = x.at("observable").get<std::string>();
      r.mean = from_num(x.at("mean"));
      r.stderr_ = from_num(x.at("stderr"));
      r.n_traj = x.at("n_traj").get<std::int64_t>();
      r.seed = x.at("seed").get<std::uint64_t>();
      r.dt = x.at("dt").get<double>();
      r.incidents = x.at("incidents").get<std::int64_t>();
      rep.rows.push_back(std::move(r));
    }
    for (const auto& x : j.at("estimates")) {
      CriticalEstimate e;
      e.lambda_crit = x.at("lambda_crit").get<double>();
      e.uncertainty = x.at("uncertainty").get<double>();
      e.observable = x.at("observable").get<std::string>();
      e.Gamma = x.at("Gamma").get<double>();
      e.eta = x.at("eta").get<double>();
      e.method = x.at("method").get<std::string>();
      e.at_boundary = parse_boundary_flag(x.at("at_boundary").get<std::string>());
      e.L_min = x.at("L_min").get<int>();
      e.L_max = x.at("L_max").get<int>();
      for (const auto& d : x.at("D")) e.D.emplace_back(d.at(0).get<double>(), from_num(d.at(1)));
      rep.estimates.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed report JSON: ") + e.what());
  }
  return rep;
}

void emit_report(const std::string& prefix, const SweepConfig* config, const std::vector<ResultRow>& rows,
                 const std::vector<CriticalEstimate>& estimates, bool json_out) {
  write_file(prefix + ".csv", to_csv(rows));
  if (json_out) write_file(prefix + ".json", to_json(config, rows, estimates));
}

std::vector<ResultRow> load_rows(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return parse_json(text).rows;
  return parse_csv(text);
}

}  // namespace qzeno
