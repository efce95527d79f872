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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qzeno/quantum_core.hpp"

namespace qzeno {

struct ConcurrenceResult {
  double value = 0.0;
  // Eigenvalues of rho * rho_tilde, descending, clipped at zero.
  std::array<double, 4> spectrum{};
};

enum class LogBase { Natural, Two };

// Wootters concurrence of a two-qubit state, rho_tilde = (Y x Y) rho^* (Y x Y).
// The spectrum of rho rho_tilde is obtained from the Hermitian matrix
// sqrt(rho) rho_tilde sqrt(rho), which has the same eigenvalues.
ConcurrenceResult concurrence(const DensityMatrix& rho);
// Pure two-qubit state: C = 2 |psi_00 psi_11 - psi_01 psi_10|.
double concurrence(const PureState& psi);
double concurrence_squared(const DensityMatrix& rho);

// log || rho^{T_A} ||_1 ; zero for PPT states.
double log_negativity(const DensityMatrix& rho, const SiteSet& region, LogBase base = LogBase::Natural);
// Pure states: || rho^{T_A} ||_1 = (sum_k s_k)^2 over Schmidt coefficients.
double log_negativity(const PureState& psi, const SiteSet& region, LogBase base = LogBase::Natural);

// (Tr[rho prod_{j in sites} Z_j])^2
double subsystem_parity_variance(const DensityMatrix& rho, const SiteSet& sites);
double subsystem_parity_variance(const PureState& psi, const SiteSet& sites);

// Tr[rho_A^2] of the reduced state on `sites`.
double subsystem_purity(const DensityMatrix& rho, const SiteSet& sites);
double subsystem_purity(const PureState& psi, const SiteSet& sites);

// <Z_j>
double sigma_z_expectation(const DensityMatrix& rho, int j);
double sigma_z_expectation(const PureState& psi, int j);

// Singular values of psi reshaped as (region) x (complement).
Eigen::VectorXd schmidt_coefficients(const PureState& psi, const SiteSet& region);

// Observable selection used by trajectories and sweeps. Half-system
// quantities use the region {1, ..., L/2}; on two sites that is {1}.
struct Observable {
  enum class Kind { Concurrence, ConcurrenceSquared, LogNegativity, ParityVariance, SubsystemPurity, SigmaZ };
  Kind kind = Kind::Concurrence;
  int site = 0;  // SigmaZ only

  // Labels: concurrence, concurrence2, negativity, parity, purity, sz<j>.
  static Observable parse(std::string_view label);
  std::string name() const;
  // Throws std::invalid_argument if the observable is undefined for L.
  void check_applicable(int L) const;

  friend bool operator==(const Observable&, const Observable&) = default;
};

std::vector<Observable> parse_observables(std::string_view comma_list);

using TrajectoryState = std::variant<PureState, DensityMatrix>;

double evaluate(const Observable& obs, const TrajectoryState& state, LogBase base = LogBase::Natural);

int num_sites(const TrajectoryState& state);

// One recorded value of an observable along a trajectory.
struct ObservableSample {
  std::string name;
  double value = 0.0;
  double time = 0.0;
  std::int64_t trajectory_id = 0;
};

}  // namespace qzeno
