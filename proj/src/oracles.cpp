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

#include "qzeno/oracles.hpp"

#include <cmath>
#include <random>

#include <Eigen/LU>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qzeno::oracle {

namespace {

Eigen::Matrix2cd projector(int bit) {
  Eigen::Matrix2cd p = Eigen::Matrix2cd::Zero();
  p(bit, bit) = 1.0;
  return p;
}

}  // namespace

KrausPair KrausPair::diffusive(double epsilon, double Delta) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("diffusive Kraus pair needs 0 <= eps < 1");
  const double s = 1.0 / std::sqrt(2.0);
  KrausPair k;
  k.K_u = s * (std::sqrt(1.0 + epsilon) * projector(1) + std::sqrt(1.0 - epsilon) * projector(0));
  k.K_d = s * (std::sqrt(1.0 - epsilon) * projector(1) + std::sqrt(1.0 + epsilon) * projector(0));
  k.epsilon = epsilon;
  k.Delta = Delta;
  k.validate();
  return k;
}

KrausPair KrausPair::jump(double epsilon, double Delta) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("jump Kraus pair needs 0 <= eps <= 1");
  KrausPair k;
  k.K_u = std::sqrt(epsilon) * projector(1);
  k.K_d = std::sqrt(1.0 - epsilon) * projector(1) + projector(0);
  k.epsilon = epsilon;
  k.Delta = Delta;
  k.validate();
  return k;
}

double KrausPair::completeness_defect() const {
  const Eigen::Matrix2cd sum = K_u.adjoint() * K_u + K_d.adjoint() * K_d;
  return (sum - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

void KrausPair::validate() const {
  if (completeness_defect() > 1e-12) throw std::invalid_argument("Kraus pair is not complete");
  if (!(Delta > 0.0 && Delta <= 1.0)) throw std::invalid_argument("readout fidelity Delta must lie in (0, 1]");
}

Operator embed_site_operator(const Eigen::Matrix2cd& op, int j, int L) {
  if (j < 1 || j > L) throw std::invalid_argument("site index out of range");
  Operator out = Operator::Identity(1, 1);
  for (int k = 1; k <= L; ++k) {
    const Operator factor = (k == j) ? Operator(op) : Operator(Operator::Identity(2, 2));
    out = Eigen::kroneckerProduct(out, factor).eval();
  }
  return out;
}

DensityMatrix kraus_weak_measurement_oracle(const DensityMatrix& rho, const KrausPair& kraus, int site, Rng& rng) {
  kraus.validate();
  const int L = rho.num_sites();
  const Operator ku = embed_site_operator(kraus.K_u, site, L);
  const Operator kd = embed_site_operator(kraus.K_d, site, L);
  const Operator branch_u = ku * rho.matrix() * ku.adjoint();
  const Operator branch_d = kd * rho.matrix() * kd.adjoint();
  const double D = kraus.Delta;
  const Operator reported_u = D * branch_u + (1.0 - D) * branch_d;
  const Operator reported_d = D * branch_d + (1.0 - D) * branch_u;
  const double p_u = reported_u.trace().real();
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (uni(rng) < p_u) return DensityMatrix(reported_u / p_u);
  return DensityMatrix(reported_d / (1.0 - p_u));
}

DensityMatrix kraus_average_channel(const DensityMatrix& rho, const KrausPair& kraus, int site) {
  const int L = rho.num_sites();
  const Operator ku = embed_site_operator(kraus.K_u, site, L);
  const Operator kd = embed_site_operator(kraus.K_d, site, L);
  return DensityMatrix(ku * rho.matrix() * ku.adjoint() + kd * rho.matrix() * kd.adjoint());
}

DensityMatrix exact_noise_rotation(const DensityMatrix& rho, int site, double dxi) {
  const int L = rho.num_sites();
  const Operator y = pauli_site(Axis::Y, site, L);
  const Eigen::Index d = rho.dim();
  // exp(-i Y t) = cos t - i sin t Y since Y^2 = 1.
  const Operator u = std::cos(dxi) * Operator::Identity(d, d) - cplx{0.0, std::sin(dxi)} * y;
  return DensityMatrix(u * rho.matrix() * u.adjoint());
}

double binomial_increment_oracle(double Delta, double epsilon, double mean_sz, Rng& rng) {
  if (std::abs(mean_sz) > 1.0 + 1e-12) throw std::invalid_argument("|<Z>| must not exceed 1");
  const double p_plus = 0.5 * (1.0 + (2.0 * Delta - 1.0) * epsilon * mean_sz);
  if (!(p_plus >= 0.0 && p_plus <= 1.0)) throw std::invalid_argument("binomial increment probability out of range");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  return uni(rng) < p_plus ? epsilon : -epsilon;
}

HypersphereEstimate hypersphere_concurrence(long n_samples, Rng& rng) {
  if (n_samples < 10000) throw std::invalid_argument("hypersphere_concurrence needs at least 10^4 samples");
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0, sum_sq = 0.0;
  for (long k = 0; k < n_samples; ++k) {
    double x[4];
    double norm2 = 0.0;
    for (double& v : x) {
      v = normal(rng);
      norm2 += v * v;
    }
    const double det = std::abs(x[0] * x[3] - x[1] * x[2]) / norm2;
    sum += det;
    sum_sq += det * det;
  }
  HypersphereEstimate est;
  est.n_samples = n_samples;
  est.mean_abs_det = sum / n_samples;
  est.mean_concurrence = 2.0 * est.mean_abs_det;
  const double var = (sum_sq / n_samples - est.mean_abs_det * est.mean_abs_det) * n_samples / (n_samples - 1.0);
  est.std_error_abs_det = std::sqrt(std::max(var, 0.0) / n_samples);
  return est;
}

Eigen::MatrixXcd lindblad_superoperator(const ModelParams& params) {
  const int L = params.L;
  if (L < 1 || L > 5) throw std::invalid_argument("dense superoperator limited to L <= 5");
  const Eigen::Index d = Eigen::Index{1} << L;
  const Operator id = Operator::Identity(d, d);
  const cplx i{0.0, 1.0};
  Eigen::MatrixXcd sup = Eigen::MatrixXcd::Zero(d * d, d * d);
  // vec(A X B) = (B^T kron A) vec(X)
  if (params.hamiltonian_on) {
    const Operator h = build_hamiltonian(L, params.boundary);
    sup += -i * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
  }
  const Operator id2 = Operator::Identity(d * d, d * d);
  for (int j = 1; j <= L; ++j) {
    const Operator y = pauli_site(Axis::Y, j, L);
    const Operator z = pauli_site(Axis::Z, j, L);
    // -(g/2)[A,[A,X]] = g (A X A - X) for A^2 = 1
    sup += params.gamma * (Eigen::kroneckerProduct(y.transpose(), y).eval() - id2);
    sup += params.lambda * (Eigen::kroneckerProduct(z.transpose(), z).eval() - id2);
  }
  return sup;
}

DensityMatrix lindblad_steady_state(const ModelParams& params) {
  if (params.L > 4) throw std::invalid_argument("steady-state solve limited to L <= 4");
  if (!(params.gamma > 0.0 || params.lambda > 0.0)) {
    throw std::invalid_argument("steady-state solve needs gamma > 0 or lambda > 0");
  }
  const Eigen::MatrixXcd sup = lindblad_superoperator(params);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(sup);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXcd ker = lu.kernel();
  if (ker.cols() != 1) {
    throw DegenerateSteadyState("steady-state space has dimension " + std::to_string(ker.cols()));
  }
  const Eigen::Index d = Eigen::Index{1} << params.L;
  Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(ker.data(), d, d);
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

DensityMatrix lindblad_exact_evolution(const DensityMatrix& rho, const ModelParams& params, double t) {
  const Eigen::MatrixXcd prop = (lindblad_superoperator(params) * t).exp();
  const Eigen::Index d = rho.dim();
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.matrix().data(), d * d);
  const Eigen::VectorXcd out = prop * v;
  return DensityMatrix(Eigen::Map<const Eigen::MatrixXcd>(out.data(), d, d));
}

}  // namespace qzeno::oracle
