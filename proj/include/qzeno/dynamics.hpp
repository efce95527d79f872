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
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qzeno/quantum_core.hpp"

namespace qzeno {

using Rng = std::mt19937_64;

// Default step: min(0.05, 0.05/lambda, 0.05/gamma), ignoring vanishing rates.
double default_dt(double gamma, double lambda);

// Time discretisation.
//
// Splitting: symmetric product of exactly solved sub-steps,
//   noise(first half) hop(dt/2) readout(dt) hop(dt/2) noise(second half),
// with
//   noise     rho -> U rho U^+, U = prod_j exp(-i Y_j dxi_j);
//   hop       exp(-i H tau) as a symmetric sweep of exact bond rotations;
//   readout   rho -> K rho K / Tr, K = exp(sum_j Z_j dy_j), followed by exact
//             dephasing at rate (1 - eta) lambda for the unread fraction.
//             The record is drawn from its exact law: a basis branch a with
//             weight rho_aa, then dy_j = sqrt(eta) dW_j + 2 eta lambda s_j(a) dt.
// Every sub-step is completely positive, so no clipping is needed. The
// Lindblad step uses the exact increment averages of the same sub-steps.
//
// Euler: a single explicit Euler-Maruyama step of all terms.
enum class StepScheme { Splitting, Euler };
StepScheme parse_step_scheme(std::string_view label);
std::string to_string(StepScheme s);

// One physical point of the monitored noisy XX chain.
struct ModelParams {
  int L = 2;
  double gamma = 0.0;   // white-noise strength
  double lambda = 0.0;  // measurement strength
  double eta = 1.0;     // measurement efficiency
  double dt = 0.05;
  bool hamiltonian_on = true;
  Boundary boundary = Boundary::Open;
  double positivity_tol = 1e-8;
  StepScheme scheme = StepScheme::Splitting;

  // Builds a parameter set with the default step rule applied.
  static ModelParams make(int L, double gamma, double lambda, double eta);

  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
  bool satisfies_step_rule() const;
};

// Per-site Ito increments for one step: dxi_j ~ N(0, gamma dt),
// dW_j ~ N(0, lambda dt).
// Extra randomness used only by the splitting scheme:
//   bridge  standard normals zeta_j splitting dxi_j into the independent halves
//           dxi_j / 2 +- sqrt(gamma dt) zeta_j / 2; empty applies dxi at once;
//   branch  uniform in [0, 1) drawing the readout record exactly; negative
//           selects the record sqrt(eta) dW_j + 2 eta lambda <Z_j> dt.
struct NoiseIncrements {
  std::vector<double> dxi;
  std::vector<double> dW;
  std::vector<double> bridge;
  double branch = -1.0;

  static NoiseIncrements zero(int L) { return {std::vector<double>(L, 0.0), std::vector<double>(L, 0.0), {}, -1.0}; }
};

// Quantum-jump measurement with faulty readout. The per-step jump
// probability scale is epsilon = gamma_jump * dt.
struct JumpParams {
  double gamma_jump = 0.0;
  double Delta = 1.0;  // probability that the detector reports the true outcome

  // Readout fidelity reproducing efficiency eta via eta = |2 Delta - 1|^2.
  static double delta_for_efficiency(double eta);
  double epsilon(double dt) const { return gamma_jump * dt; }
  void validate(double dt) const;
};

// Positivity repairs observed while stepping.
struct StepDiagnostics {
  std::int64_t positivity_incidents = 0;
  double worst_eigenvalue = 0.0;

  void record(const PositivityReport& r);
};

// Always consumes 3L standard normals (dxi, dW, bridge) and then one uniform
// from `rng`, so the stream position does not depend on the rates.
NoiseIncrements sample_increments(Rng& rng, const ModelParams& params);

// Raw change d(rho) of one step of the inefficient state-diffusion equation,
// without any normalisation:
//
//   d rho = -i dt [H, rho]
//           - i sum_j [Y_j, rho] dxi_j - (gamma/2) dt sum_j [Y_j, [Y_j, rho]]
//           + sqrt(eta) sum_j {Z_j - <Z_j>, rho} dW_j
//           - (lambda/2) dt sum_j [Z_j, [Z_j, rho]].
//
// With StepScheme::Euler this is the plain Euler-Maruyama increment; with
// Splitting it is the normalised split step minus rho. The trace of the
// returned matrix vanishes up to rounding.
Eigen::MatrixXcd qsd_increment(const DensityMatrix& rho, const ModelParams& params, const NoiseIncrements& inc);

// rho + qsd_increment, passed through hermitize_normalize.
DensityMatrix qsd_step(const DensityMatrix& rho, const ModelParams& params, const NoiseIncrements& inc,
                       StepDiagnostics* diag = nullptr);

// State-vector counterpart of qsd_step, valid for eta == 1 only. Step of
//   d psi = [-i H dt - i sum_j Y_j dxi_j - (gamma L / 2) dt
//            + sum_j (Z_j - <Z_j>) dW_j - (lambda/2) dt sum_j (Z_j - <Z_j>)^2] psi
// (discretised per params.scheme) followed by renormalisation. Real
// amplitudes stay real. With Splitting, |psi'><psi'| equals qsd_step on
// |psi><psi| with the same increments.
PureState pure_qsd_step(const PureState& psi, const ModelParams& params, const NoiseIncrements& inc);

// Deterministic step of the averaged (Lindblad) equation, discretised per
// params.scheme. At eta = 0 it is the exact increment-average of qsd_step.
DensityMatrix lindblad_step(const DensityMatrix& rho_bar, const ModelParams& params);

// Inefficient detector represented as a perfect sub-detector (lambda1) plus a
// sub-detector whose readout is discarded (lambda2). inc.dW must carry
// variance lambda1 dt; params.lambda and params.eta are ignored, the
// Hamiltonian and noise terms of params are kept.
DensityMatrix split_detector_step(const DensityMatrix& rho, double lambda1, double lambda2, const ModelParams& params,
                                  const NoiseIncrements& inc, StepDiagnostics* diag = nullptr);

// Jump unraveling with faulty readout: Hamiltonian and noise sub-steps as in
// qsd_step, then for every site a readout r in {u, d} is drawn with probability
// Tr[Delta K_r rho K_r^+ + (1 - Delta) K_r' rho K_r'^+] and the Delta-mixed
// update applied, K_u = sqrt(eps)|1><1|, K_d = sqrt(1 - eps)|1><1| + |0><0|.
// params.lambda and params.eta are ignored.
DensityMatrix jump_step(const DensityMatrix& rho, const JumpParams& jp, const ModelParams& params, Rng& rng,
                        StepDiagnostics* diag = nullptr);

// Reusable stepping engine with cached tables and scratch space. The free
// functions above are thin wrappers; trajectories use this directly to avoid
// per-step allocations.
class Integrator {
 public:
  explicit Integrator(const ModelParams& params);

  const ModelParams& params() const { return params_; }

  void qsd(Eigen::MatrixXcd& rho, const NoiseIncrements& inc, bool check_positivity, StepDiagnostics* diag);
  void split_detector(Eigen::MatrixXcd& rho, double lambda1, double lambda2, const NoiseIncrements& inc,
                      bool check_positivity, StepDiagnostics* diag);
  void lindblad(Eigen::MatrixXcd& rho);
  void jump(Eigen::MatrixXcd& rho, const JumpParams& jp, const NoiseIncrements& inc, std::span<const double> uniforms,
            bool check_positivity, StepDiagnostics* diag);
  void pure_qsd(Eigen::VectorXcd& psi, const NoiseIncrements& inc);

  // Sub-steps of the splitting scheme.
  void rotate_noise(Eigen::MatrixXcd& rho, std::span<const double> dxi) const;
  void rotate_noise(Eigen::VectorXcd& psi, std::span<const double> dxi) const;
  void average_noise(Eigen::MatrixXcd& rho, double tau) const;  // E of rotate_noise over dxi ~ N(0, gamma tau)
  // exp(-i H tau) as a symmetric sweep of exact bond rotations.
  void hop(Eigen::MatrixXcd& rho, double tau) const;
  void hop(Eigen::VectorXcd& psi, double tau) const;
  // K rho K with K = exp(sum_j Z_j dy_j) times the dephasing factor
  // exp(-2 unread dt |a ^ b|), trace-normalised (the vector form is not).
  void readout(Eigen::MatrixXcd& rho, std::span<const double> dy, double unread) const;
  void readout(Eigen::VectorXcd& psi, std::span<const double> dy) const;

  // Writes the raw Euler change for the given term weights into `out`.
  struct Terms {
    double gamma = 0.0;
    double dephasing = 0.0;         // total coefficient of the double commutator with Z
    double innovation_scale = 0.0;  // prefactor of {Z - <Z>, rho} dW
  };
  void euler_increment(const Eigen::MatrixXcd& rho, const Terms& terms, const NoiseIncrements& inc,
                       Eigen::MatrixXcd& out);

 private:
  void build_flip_coefficients(std::span<const double> dxi, double gamma_weight);
  std::vector<double> z_expectations(const Eigen::MatrixXcd& rho) const;
  std::vector<double> z_expectations(const Eigen::VectorXcd& psi) const;
  // dy_j = scale dW_j + 2 rate z_j dt, z_j = s_j(branch) or <Z_j>.
  template <class State>
  std::vector<double> record(const State& state, const NoiseIncrements& inc, double scale, double rate) const;
  Eigen::Index pick_branch(const Eigen::MatrixXcd& rho, double u) const;
  Eigen::Index pick_branch(const Eigen::VectorXcd& psi, double u) const;
  void euler_pure(Eigen::VectorXcd& psi, const NoiseIncrements& inc);
  // The two halves of the noise kick (the second empty when none).
  std::pair<std::vector<double>, std::vector<double>> noise_halves(const NoiseIncrements& inc) const;
  template <class State>
  void split_step(State& state, const NoiseIncrements& inc, double scale, double rate, double unread);
  void jump_readout(Eigen::MatrixXcd& rho, const JumpParams& jp, std::span<const double> uniforms) const;
  bool splitting() const { return params_.scheme == StepScheme::Splitting; }
  void finish(Eigen::MatrixXcd& rho, bool check_positivity, StepDiagnostics* diag) const;

  ModelParams params_;
  Eigen::Index dim_;
  std::vector<std::uint64_t> site_masks_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bond_masks_;

  // Row/column flip operators active in the current step: flip_masks_[k]
  // with coefficient flip_coef_[k * dim + a].
  std::vector<std::uint64_t> flip_masks_;
  std::vector<double> flip_coef_;
  std::vector<double> diag_coef_;
  Eigen::MatrixXcd scratch_;
  Eigen::VectorXcd scratch_vec_;
};

}  // namespace qzeno
