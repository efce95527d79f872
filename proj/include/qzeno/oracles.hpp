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

// Brute-force reference implementations. Nothing here uses the bit-indexed
// kernels or the Euler discretisation of the main integrators: operators are
// embedded densely, channels are applied exactly and the averaged dynamics is
// exponentiated.

#include <stdexcept>

#include "qzeno/dynamics.hpp"
#include "qzeno/quantum_core.hpp"

namespace qzeno::oracle {

class DegenerateSteadyState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Single-site two-outcome measurement with faulty readout.
struct KrausPair {
  Eigen::Matrix2cd K_u;
  Eigen::Matrix2cd K_d;
  double epsilon = 0.0;
  double Delta = 1.0;

  // K_{u/d} = (sqrt(1 +- eps)|1><1| + sqrt(1 -+ eps)|0><0|) / sqrt 2
  static KrausPair diffusive(double epsilon, double Delta);
  // K_u = sqrt(eps)|1><1|, K_d = sqrt(1 - eps)|1><1| + |0><0|
  static KrausPair jump(double epsilon, double Delta);

  // Largest entry of |K_u^+ K_u + K_d^+ K_d - I|.
  double completeness_defect() const;
  // Throws std::invalid_argument when the pair is not complete within 1e-12
  // or Delta lies outside (0, 1].
  void validate() const;
};

// Embeds a single-site 2x2 operator at site j of an L-site chain.
Operator embed_site_operator(const Eigen::Matrix2cd& op, int j, int L);

// Reported readout r is drawn with p(r) = Tr[Delta K_r rho K_r^+ + (1 - Delta) K_r' rho K_r'^+]
// and the state replaced by the matching normalised mixture.
DensityMatrix kraus_weak_measurement_oracle(const DensityMatrix& rho, const KrausPair& kraus, int site, Rng& rng);

// Readout-averaged channel sum_r K_r rho K_r^+.
DensityMatrix kraus_average_channel(const DensityMatrix& rho, const KrausPair& kraus, int site);

// Exact local noise kick exp(-i Y_j dxi) rho exp(+i Y_j dxi).
DensityMatrix exact_noise_rotation(const DensityMatrix& rho, int site, double dxi);

// Returns +eps or -eps with p(+-eps) = (1 +- (2 Delta - 1) eps <Z>) / 2.
double binomial_increment_oracle(double Delta, double epsilon, double mean_sz, Rng& rng);

struct HypersphereEstimate {
  double mean_abs_det = 0.0;       // E |alpha delta - beta gamma|
  double mean_concurrence = 0.0;   // E 2|alpha delta - beta gamma|
  double std_error_abs_det = 0.0;
  long n_samples = 0;
};

// Monte Carlo over the uniform real unit 3-sphere (normalised Gaussians).
// Needs n_samples >= 10^4.
HypersphereEstimate hypersphere_concurrence(long n_samples, Rng& rng);

// Column-major vectorised generator of the averaged dynamics, dimension 4^L.
Eigen::MatrixXcd lindblad_superoperator(const ModelParams& params);

// Null vector of the superoperator (L <= 4), trace-normalised.
DensityMatrix lindblad_steady_state(const ModelParams& params);

// exp(t * superoperator) applied to rho.
DensityMatrix lindblad_exact_evolution(const DensityMatrix& rho, const ModelParams& params, double t);

}  // namespace qzeno::oracle
