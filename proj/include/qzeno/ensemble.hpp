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
#include <string>
#include <string_view>
#include <vector>

#include "qzeno/dynamics.hpp"
#include "qzeno/observables.hpp"

namespace qzeno {

enum class Unraveling { Qsd, Jump };
Unraveling parse_unraveling(std::string_view label);
std::string to_string(Unraveling u);

// Steady-state sampling window: observables are recorded at
// t_burn, t_burn + sample_interval, ... up to t_burn + t_window.
struct SamplingProtocol {
  double t_burn = 50.0;
  double t_window = 200.0;
  double sample_interval = 1.0;
  int n_traj = 500;
  // false: only the last sample of the window enters the average.
  bool time_average = true;

  void validate(double dt) const;
};

struct SimulationOptions {
  Unraveling unraveling = Unraveling::Qsd;
  JumpParams jump{};
  LogBase negativity_base = LogBase::Natural;
  // 0 selects std::thread::hardware_concurrency().
  int threads = 0;
  // The eigenvalue positivity check runs after every step for L up to this
  // value and only at sample times above it.
  int positivity_every_step_max_L = 4;
  // Use the state-vector integrator when eta == 1, qsd unraveling and a pure
  // initial state.
  bool prefer_pure = true;
};

// Named initial states: "neel" (|0101...>), "bits:<b1...bL>", "bell"
// ((|01> + |10>)/sqrt 2), "bell_i" ((|01> + i|10>)/sqrt 2), "mixed" (I/2^L).
TrajectoryState make_initial_state(std::string_view label, int L);

struct TrajectoryRecord {
  std::int64_t trajectory_id = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> observable_names;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [observable][sample]
  std::int64_t positivity_incidents = 0;
  bool used_pure_path = false;
  bool aborted = false;
  std::string diagnostic;

  // Flattened, time-ordered view of the recorded values.
  std::vector<ObservableSample> samples() const;
};

struct EnsembleStats {
  std::string observable;
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation of trajectory means / sqrt(n_traj)
  std::int64_t n_traj = 0;
  std::int64_t n_aborted = 0;
  std::int64_t positivity_incidents = 0;
  std::uint64_t master_seed = 0;
  ModelParams params;
  SamplingProtocol protocol;
};

// Counter-based seed derivation (splitmix64 finaliser over
// master + (index + 1) * golden gamma). Injective in `index` for a fixed
// master seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trajectory_index);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Dt suitable for the jump unraveling (keeps gamma_jump * dt <= 0.05).
double default_jump_dt(double gamma, double gamma_jump);

TrajectoryRecord run_trajectory(const ModelParams& params, const SimulationOptions& options,
                                const SamplingProtocol& protocol, std::uint64_t seed, const TrajectoryState& initial,
                                const std::vector<Observable>& observables, std::int64_t trajectory_id = 0);

// Evolves one trajectory for round(t_final / dt) steps and returns the state.
TrajectoryState evolve_trajectory(const ModelParams& params, const SimulationOptions& options, double t_final,
                                  std::uint64_t seed, const TrajectoryState& initial,
                                  std::int64_t* positivity_incidents = nullptr);

// Time-and-trajectory averages over the sampling window; trajectory k uses
// derive_seed(master_seed, k). Throws NumericalError when more than 1% of
// the trajectories abort.
std::vector<EnsembleStats> steady_state_average(const ModelParams& params, const SimulationOptions& options,
                                                const SamplingProtocol& protocol, std::uint64_t master_seed,
                                                const std::vector<Observable>& observables,
                                                const TrajectoryState& initial);

// Arithmetic mean of the trajectory density matrices at t_final.
DensityMatrix mean_density_matrix(const ModelParams& params, const SimulationOptions& options, int n_traj,
                                  double t_final, std::uint64_t master_seed, const TrajectoryState& initial);

// Reruns the ensemble with a doubled burn-in and reports, per observable, the
// shift of the mean in units of the combined standard error.
struct BurnInCheck {
  std::string observable;
  double shift = 0.0;
  double combined_error = 0.0;
  bool passed = false;  // |shift| < combined_error
};
std::vector<BurnInCheck> burn_in_self_check(const ModelParams& params, const SimulationOptions& options,
                                            const SamplingProtocol& protocol, std::uint64_t master_seed,
                                            const std::vector<Observable>& observables,
                                            const TrajectoryState& initial);

// Runs fn(0..n-1) on a worker pool; fn must only touch index-owned state.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace qzeno
