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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qzeno/ensemble.hpp"

namespace qzeno {

// Bad user input (config keys, values, grids). The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" configuration. Lines starting with '#' are comments.
// Grid values are comma lists or ranges "lo:hi:n" (linear) and
// "lo:hi:n:log" (geometric). Keys:
//
//   gamma, lambda, eta, L        grids (required)
//   unraveling                   qsd | jump
//   t_burn, t_window, sample_interval, n_traj, time_average
//   master_seed                  unsigned 64-bit integer
//   observables                  comma list, e.g. concurrence,parity
//   output                       path prefix; writes <output>.csv and <output>.json
//   initial                      neel | bits:<b1..bL> | bell | bell_i | mixed
//   boundary                     open | periodic
//   dt                           auto | positive number
//   gamma_jump                   auto (= 4 lambda) | non-negative number
//   negativity_base              e | 2
//   scheme                       splitting | euler
//   threads                      0 = all cores
struct SweepConfig {
  std::vector<double> gamma;
  std::vector<double> lambda;
  std::vector<double> eta;
  std::vector<int> L;
  Unraveling unraveling = Unraveling::Qsd;
  SamplingProtocol protocol{};
  std::uint64_t master_seed = 1;
  std::vector<std::string> observables{"concurrence"};
  std::string output = "qzeno_sweep";
  std::string initial = "neel";
  Boundary boundary = Boundary::Open;
  double dt = 0.0;          // 0 selects the default step rule
  double gamma_jump = -1.0;  // negative selects 4 lambda
  LogBase negativity_base = LogBase::Natural;
  StepScheme scheme = StepScheme::Splitting;
  int threads = 0;

  // Applies one key/value pair; throws ConfigError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  static SweepConfig parse(std::string_view text);
  static SweepConfig load(const std::string& path);

  // Throws ConfigError when grids are empty, observables do not apply to
  // some L, or protocol fields are out of range.
  void validate() const;

  // Resolved settings in a fixed order, as written to the JSON echo.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

std::vector<double> parse_grid(std::string_view text);

// One grid point with everything needed to run it.
struct SweepPoint {
  double gamma = 0.0;
  double lambda = 0.0;
  double eta = 1.0;
  int L = 2;
  ModelParams params;
  SimulationOptions options;
  std::uint64_t seed = 0;
};

// Grid points in output order: L, eta, lambda outermost to innermost, Gamma fastest.
std::vector<SweepPoint> expand_grid(const SweepConfig& config);

// Seed of a grid point: derived from the master seed and the bit patterns of
// (Gamma, lambda, eta, L), so it does not depend on the grid it sits in.
std::uint64_t point_seed(std::uint64_t master_seed, double gamma, double lambda, double eta, int L);

struct ResultRow {
  double Gamma = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  int L = 0;
  std::string observable;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_traj = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::int64_t incidents = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct SweepRunOptions {
  bool resume = true;
  bool write_files = true;
  // Called after each completed point with (points done, points total).
  std::function<void(std::size_t, std::size_t)> progress;
};

// Runs every grid point. Rows are appended to <output>.csv as points finish;
// with resume, points already present there (same seed and n_traj) are
// skipped. On completion the CSV is rewritten in grid order and the JSON
// report written. Throws NumericalError when a point fails.
std::vector<ResultRow> run_sweep(const SweepConfig& config, const SweepRunOptions& run = {});

// --- analysis ---------------------------------------------------------------

struct CurvePoint {
  double x = 0.0;  // Gamma
  double mean = 0.0;
  double stderr_ = 0.0;
};

enum class ExtremumKind { Maximum, Minimum, Either };
ExtremumKind parse_extremum_kind(std::string_view label);
std::string to_string(ExtremumKind k);

struct Extremum {
  ExtremumKind kind = ExtremumKind::Maximum;
  std::size_t index = 0;   // grid index of the extreme sample
  double location = 0.0;   // vertex of the parabola through the three points around it
  double resolution = 0.0; // half the larger neighbouring spacing
  double value = 0.0;
  // Smaller of the two endpoint excesses in units of the combined standard error.
  double significance = 0.0;
};

// Reports an interior maximum (minimum) when the extreme sample exceeds
// (falls below) both end points by more than 2 combined standard errors.
// For Either, a significant maximum takes precedence. Throws
// std::invalid_argument for fewer than 4 points or unsorted x.
std::optional<Extremum> detect_nonmonotonicity(const std::vector<CurvePoint>& curve,
                                               ExtremumKind kind = ExtremumKind::Either);

// Curve of one observable along Gamma at fixed (lambda, eta, L).
std::vector<CurvePoint> curve_along_gamma(const std::vector<ResultRow>& rows, const std::string& observable,
                                          double lambda, double eta, int L);

enum class BoundaryFlag { None, Lower, Upper };
std::string to_string(BoundaryFlag f);

struct CriticalEstimate {
  double lambda_crit = 0.0;
  double uncertainty = 0.0;
  std::string observable;
  double Gamma = 0.0;
  double eta = 0.0;
  std::string method = "size-threshold";
  BoundaryFlag at_boundary = BoundaryFlag::None;
  int L_min = 0;
  int L_max = 0;
  std::vector<std::pair<double, double>> D;  // (lambda, D(lambda))

  friend bool operator==(const CriticalEstimate&, const CriticalEstimate&) = default;
};

// Size-dependence statistic D(lambda) = (O(L_max) - O(L_min)) / combined
// stderr; lambda_crit is where |D| last drops through 2 (linear
// interpolation), with half the local spacing as uncertainty. Without such a
// crossing the estimate sits at the lower end (never size dependent) or the
// upper end (still size dependent) of the range, flagged accordingly. Needs
// >= 3 sizes at every lambda and >= 5 lambda values; throws
// std::invalid_argument otherwise.
CriticalEstimate estimate_critical_lambda(const std::vector<ResultRow>& rows, const std::string& observable,
                                          double Gamma, double eta, double threshold = 2.0);

// --- reports ----------------------------------------------------------------

inline constexpr std::string_view kCsvHeader = "Gamma,lambda,eta,L,observable,mean,stderr,n_traj,seed,dt,incidents";

// Floats use 17 significant digits.
std::string format_double(double x);
std::string csv_line(const ResultRow& r);
std::string to_csv(const std::vector<ResultRow>& rows);
// Parses a CSV written by to_csv. Lines with the wrong field count are
// skipped (a torn final line after an interrupt); a bad header throws.
std::vector<ResultRow> parse_csv(std::string_view text);

std::string to_json(const SweepConfig* config, const std::vector<ResultRow>& rows,
                    const std::vector<CriticalEstimate>& estimates);
struct Report {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<ResultRow> rows;
  std::vector<CriticalEstimate> estimates;
};
Report parse_json(std::string_view text);

// Writes <prefix>.csv and, when json is set, <prefix>.json. Throws
// std::runtime_error on I/O failure.
void emit_report(const std::string& prefix, const SweepConfig* config, const std::vector<ResultRow>& rows,
                 const std::vector<CriticalEstimate>& estimates, bool json = true);

// Loads rows from a .csv or .json file (by extension).
std::vector<ResultRow> load_rows(const std::string& path);

}  // namespace qzeno
