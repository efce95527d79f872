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

#include "qzeno/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

namespace qzeno {

namespace {

constexpr double kProbabilitySlack = 1e-12;

void check_increments(const NoiseIncrements& inc, int L) {
  if (static_cast<int>(inc.dxi.size()) != L || static_cast<int>(inc.dW.size()) != L) {
    throw std::invalid_argument("noise increments are not dimensioned for L = " + std::to_string(L));
  }
}

void check_state(const Eigen::MatrixXcd& rho, const ModelParams& p) {
  if (rho.rows() != (Eigen::Index{1} << p.L) || rho.cols() != rho.rows()) {
    throw std::invalid_argument("density matrix dimension does not match L = " + std::to_string(p.L));
  }
}

NormalizeOptions normalize_options(const ModelParams& p, bool check) { return {p.positivity_tol, check}; }

// v[i] <- c v[i] + s v[k], v[k] <- c v[k] - s v[i]
inline void rotate_pair(cplx* v, Eigen::Index i, Eigen::Index k, double c, double s) {
  const cplx xi = v[i], xk = v[k];
  v[i] = c * xi + s * xk;
  v[k] = c * xk - s * xi;
}

// rho -> U rho U^T for a real U made of disjoint pair rotations; partner(i)
// returns the k that rotate_pair(., i, k) should pair with i, or -1.
template <class Partner>
void rotate_rows_cols(Eigen::MatrixXcd& rho, Partner partner, double c, double s) {
  const Eigen::Index d = rho.rows();
  for (Eigen::Index b = 0; b < d; ++b) {
    cplx* col = rho.col(b).data();
    for (Eigen::Index a = 0; a < d; ++a) {
      const Eigen::Index a0 = partner(a);
      if (a0 >= 0) rotate_pair(col, a, a0, c, s);
    }
  }
  for (Eigen::Index b1 = 0; b1 < d; ++b1) {
    const Eigen::Index b0 = partner(b1);
    if (b0 < 0) continue;
    cplx* c1 = rho.col(b1).data();
    cplx* c0 = rho.col(b0).data();
    for (Eigen::Index a = 0; a < d; ++a) {
      const cplx x1 = c1[a], x0 = c0[a];
      c1[a] = c * x1 + s * x0;
      c0[a] = c * x0 - s * x1;
    }
  }
}

}  // namespace

StepScheme parse_step_scheme(std::string_view label) {
  if (label == "splitting") return StepScheme::Splitting;
  if (label == "euler") return StepScheme::Euler;
  throw std::invalid_argument("unknown step scheme '" + std::string(label) + "'");
}

std::string to_string(StepScheme s) { return s == StepScheme::Splitting ? "splitting" : "euler"; }

double default_dt(double gamma, double lambda) {
  double dt = 0.05;
  if (lambda > 0.0) dt = std::min(dt, 0.05 / lambda);
  if (gamma > 0.0) dt = std::min(dt, 0.05 / gamma);
  return dt;
}

ModelParams ModelParams::make(int L, double gamma, double lambda, double eta) {
  ModelParams p;
  p.L = L;
  p.gamma = gamma;
  p.lambda = lambda;
  p.eta = eta;
  p.dt = default_dt(gamma, lambda);
  return p;
}

void ModelParams::validate() const {
  if (L < 1 || L > kMaxPureSites) throw std::invalid_argument("L out of range");
  if (hamiltonian_on && L < 2) throw std::invalid_argument("the hopping Hamiltonian needs L >= 2");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
  if (!(positivity_tol >= 0.0)) throw std::invalid_argument("positivity_tol must be >= 0");
}

bool ModelParams::satisfies_step_rule() const { return dt <= default_dt(gamma, lambda) * (1.0 + 1e-12); }

double JumpParams::delta_for_efficiency(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
  return 0.5 * (1.0 + std::sqrt(eta));
}

void JumpParams::validate(double dt) const {
  if (!(gamma_jump >= 0.0)) throw std::invalid_argument("gamma_jump must be >= 0");
  if (!(Delta > 0.0 && Delta <= 1.0)) throw std::invalid_argument("Delta must lie in (0, 1]");
  if (epsilon(dt) > 0.05 * (1.0 + 1e-12)) {
    throw std::invalid_argument("jump epsilon = gamma_jump * dt must be <= 0.05");
  }
}

void StepDiagnostics::record(const PositivityReport& r) {
  if (!r.violated) return;
  ++positivity_incidents;
  worst_eigenvalue = std::min(worst_eigenvalue, r.min_eigenvalue);
}

NoiseIncrements sample_increments(Rng& rng, const ModelParams& params) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sx = std::sqrt(params.gamma * params.dt);
  const double sw = std::sqrt(params.lambda * params.dt);
  NoiseIncrements inc;
  inc.dxi.resize(params.L);
  inc.dW.resize(params.L);
  for (int j = 0; j < params.L; ++j) inc.dxi[j] = sx * normal(rng);
  for (int j = 0; j < params.L; ++j) inc.dW[j] = sw * normal(rng);
  inc.bridge.resize(params.L);
  for (int j = 0; j < params.L; ++j) inc.bridge[j] = normal(rng);
  inc.branch = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return inc;
}

// Integrator ---------------------------------------------------------------

Integrator::Integrator(const ModelParams& params) : params_(params), dim_(Eigen::Index{1} << params.L) {
  params_.validate();
  if (params_.L > kMaxPureSites) throw std::invalid_argument("L too large");
  for (int j = 1; j <= params_.L; ++j) site_masks_.push_back(site_mask(j, params_.L));
  if (params_.hamiltonian_on) {
    for (auto [j, k] : chain_bonds(params_.L, params_.boundary)) {
      bond_masks_.emplace_back(site_mask(j, params_.L), site_mask(k, params_.L));
    }
  }
  diag_coef_.resize(static_cast<std::size_t>(dim_));
}

// Every off-diagonal term of the Euler step is a bit flip with a real
// coefficient that depends only on the index it lands on:
//   -i dt H psi:      (H psi)_a picks psi_{a ^ m} with coefficient dt * g(a),
//                     g = +1 for (bit_j, bit_k) = (1, 0), -1 for (0, 1);
//   -i Y_j dxi_j psi: coefficient -dxi_j * s_j(a).
// The column action (rho H, rho Y) uses the same coefficients evaluated at
// the column index.
void Integrator::build_flip_coefficients(std::span<const double> dxi, double gamma_weight) {
  const auto d = static_cast<std::size_t>(dim_);
  flip_masks_.clear();
  flip_coef_.clear();
  const double dt = params_.dt;
  for (auto [mj, mk] : bond_masks_) {
    flip_masks_.push_back(mj | mk);
    const std::size_t base = flip_coef_.size();
    flip_coef_.resize(base + d);
    for (std::size_t a = 0; a < d; ++a) {
      const bool bj = a & mj;
      const bool bk = a & mk;
      flip_coef_[base + a] = (bj && !bk) ? dt : ((!bj && bk) ? -dt : 0.0);
    }
  }
  if (gamma_weight > 0.0) {
    for (int j = 0; j < params_.L; ++j) {
      if (dxi[j] == 0.0) continue;
      const std::uint64_t m = site_masks_[j];
      flip_masks_.push_back(m);
      const std::size_t base = flip_coef_.size();
      flip_coef_.resize(base + d);
      for (std::size_t a = 0; a < d; ++a) flip_coef_[base + a] = -dxi[j] * spin_z(a, m);
    }
  }
}

std::vector<double> Integrator::z_expectations(const Eigen::MatrixXcd& rho) const {
  std::vector<double> m(params_.L, 0.0);
  for (Eigen::Index a = 0; a < dim_; ++a) {
    const double p = rho(a, a).real();
    for (int j = 0; j < params_.L; ++j) m[j] += p * spin_z(static_cast<std::uint64_t>(a), site_masks_[j]);
  }
  return m;
}

void Integrator::euler_increment(const Eigen::MatrixXcd& rho, const Terms& terms, const NoiseIncrements& inc,
                                 Eigen::MatrixXcd& out) {
  check_state(rho, params_);
  check_increments(inc, params_.L);
  const double dt = params_.dt;
  const int L = params_.L;
  const auto d = static_cast<std::size_t>(dim_);

  build_flip_coefficients(inc.dxi, terms.gamma);

  // Diagonal-in-basis factor c(a, b) = w(a) + w(b) - shift - 2 deph dt |a ^ b| - L gamma dt with
  // w(a) = kappa sum_j s_j(a) dW_j and shift = 2 kappa sum_j <Z_j> dW_j.
  double shift = 0.0;
  if (terms.innovation_scale != 0.0) {
    const auto m = z_expectations(rho);
    for (int j = 0; j < L; ++j) shift += 2.0 * terms.innovation_scale * m[j] * inc.dW[j];
  }
  for (std::size_t a = 0; a < d; ++a) {
    double w = 0.0;
    if (terms.innovation_scale != 0.0) {
      for (int j = 0; j < L; ++j) w += spin_z(a, site_masks_[j]) * inc.dW[j];
    }
    diag_coef_[a] = terms.innovation_scale * w;
  }
  const double deph = 2.0 * terms.dephasing * dt;
  const double noise_loss = L * terms.gamma * dt;
  const double noise_gain = terms.gamma * dt;
  const std::size_t nflip = flip_masks_.size();

  out.resize(dim_, dim_);
  const cplx* r = rho.data();
  for (std::size_t b = 0; b < d; ++b) {
    for (std::size_t a = b; a < d; ++a) {
      const double c = diag_coef_[a] + diag_coef_[b] - shift - deph * std::popcount(a ^ b) - noise_loss;
      cplx acc = c * r[a + b * d];
      for (std::size_t k = 0; k < nflip; ++k) {
        const std::uint64_t m = flip_masks_[k];
        const double* f = &flip_coef_[k * d];
        if (f[a] != 0.0) acc += f[a] * r[(a ^ m) + b * d];
        if (f[b] != 0.0) acc += f[b] * r[a + (b ^ m) * d];
      }
      if (noise_gain != 0.0) {
        for (int j = 0; j < L; ++j) {
          const std::uint64_t m = site_masks_[j];
          const double sign = ((a & m) != 0) == ((b & m) != 0) ? 1.0 : -1.0;
          acc += noise_gain * sign * r[(a ^ m) + (b ^ m) * d];
        }
      }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
      if (a != b) out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = std::conj(acc);
    }
  }
}

// exp(-i Y t) is real in this basis: (U psi)_a = cos t psi_a - sin t s(a) psi_{a ^ m}.
void Integrator::rotate_noise(Eigen::VectorXcd& psi, std::span<const double> dxi) const {
  for (int j = 0; j < params_.L; ++j) {
    if (dxi[j] == 0.0) continue;
    const double c = std::cos(dxi[j]);
    const double s = std::sin(dxi[j]);
    const auto m = static_cast<Eigen::Index>(site_masks_[j]);
    for (Eigen::Index a0 = 0; a0 < dim_; ++a0) {
      if (a0 & m) continue;
      rotate_pair(psi.data(), a0, a0 | m, c, s);
    }
  }
}

void Integrator::rotate_noise(Eigen::MatrixXcd& rho, std::span<const double> dxi) const {
  for (int j = 0; j < params_.L; ++j) {
    if (dxi[j] == 0.0) continue;
    const double c = std::cos(dxi[j]);
    const double s = std::sin(dxi[j]);
    const auto m = static_cast<Eigen::Index>(site_masks_[j]);
    rotate_rows_cols(rho, [m](Eigen::Index a) { return (a & m) ? -1 : (a | m); }, c, s);
  }
}

// E[U rho U^+] over dxi ~ N(0, gamma tau): p rho + q Y rho Y with
// p, q = (1 +- exp(-2 gamma dt)) / 2, applied site by site.
void Integrator::average_noise(Eigen::MatrixXcd& rho, double tau) const {
  if (!(params_.gamma > 0.0)) return;
  const double e = std::exp(-2.0 * params_.gamma * tau);
  const double p = 0.5 * (1.0 + e);
  const double q = 0.5 * (1.0 - e);
  for (int j = 0; j < params_.L; ++j) {
    const auto m = static_cast<Eigen::Index>(site_masks_[j]);
    for (Eigen::Index b = 0; b < dim_; ++b) {
      const double sign = (b & m) ? -1.0 : 1.0;  // (Y rho Y)_{ab} = +-rho_{a^m, b^m} for bit_j(a) = 0
      const Eigen::Index b1 = b ^ m;
      for (Eigen::Index a = 0; a < dim_; ++a) {
        if (a & m) continue;
        const Eigen::Index a1 = a | m;
        const cplx x = rho(a, b), y = rho(a1, b1);
        rho(a, b) = p * x + q * sign * y;
        rho(a1, b1) = p * y + q * sign * x;
      }
    }
  }
}

// exp(-i h t) on the bond pair: |10> -> c|10> - s|01>, |01> -> c|01> + s|10>,
// i.e. psi'_{10} = c psi_{10} + s psi_{01}, psi'_{01} = c psi_{01} - s psi_{10}.
// Forward then backward sweep at tau/2 each.
void Integrator::hop(Eigen::VectorXcd& psi, double tau) const {
  if (bond_masks_.empty()) return;
  const double c = std::cos(0.5 * tau);
  const double s = std::sin(0.5 * tau);
  const std::size_t nb = bond_masks_.size();
  for (std::size_t step = 0; step < 2 * nb; ++step) {
    const auto [mj, mk] = bond_masks_[step < nb ? step : 2 * nb - 1 - step];
    for (Eigen::Index a = 0; a < dim_; ++a) {
      const auto ua = static_cast<std::uint64_t>(a);
      if ((ua & mj) && !(ua & mk)) rotate_pair(psi.data(), a, static_cast<Eigen::Index>(ua ^ mj ^ mk), c, s);
    }
  }
}

void Integrator::hop(Eigen::MatrixXcd& rho, double tau) const {
  if (bond_masks_.empty()) return;
  const double c = std::cos(0.5 * tau);
  const double s = std::sin(0.5 * tau);
  const std::size_t nb = bond_masks_.size();
  for (std::size_t step = 0; step < 2 * nb; ++step) {
    const auto [mj, mk] = bond_masks_[step < nb ? step : 2 * nb - 1 - step];
    rotate_rows_cols(
        rho,
        [mj = mj, mk = mk](Eigen::Index a) -> Eigen::Index {
          const auto ua = static_cast<std::uint64_t>(a);
          return ((ua & mj) && !(ua & mk)) ? static_cast<Eigen::Index>(ua ^ mj ^ mk) : -1;
        },
        c, s);
  }
}

void Integrator::readout(Eigen::VectorXcd& psi, std::span<const double> dy) const {
  for (Eigen::Index a = 0; a < dim_; ++a) {
    double w = 0.0;
    for (int j = 0; j < params_.L; ++j) w += spin_z(static_cast<std::uint64_t>(a), site_masks_[j]) * dy[j];
    psi[a] *= std::exp(w);
  }
}

void Integrator::readout(Eigen::MatrixXcd& rho, std::span<const double> dy, double unread) const {
  std::vector<double> k(static_cast<std::size_t>(dim_));
  for (Eigen::Index a = 0; a < dim_; ++a) {
    double w = 0.0;
    for (int j = 0; j < params_.L; ++j) w += spin_z(static_cast<std::uint64_t>(a), site_masks_[j]) * dy[j];
    k[static_cast<std::size_t>(a)] = std::exp(w);
  }
  std::vector<double> deph(static_cast<std::size_t>(params_.L) + 1);
  for (int n = 0; n <= params_.L; ++n) deph[n] = std::exp(-2.0 * unread * params_.dt * n);
  for (Eigen::Index b = 0; b < dim_; ++b) {
    for (Eigen::Index a = 0; a < dim_; ++a) {
      rho(a, b) *= k[a] * k[b] * deph[std::popcount(static_cast<std::uint64_t>(a ^ b))];
    }
  }
  const double tr = rho.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw NumericalError("readout update produced a non-positive trace");
  rho /= tr;
}

namespace {

template <class Weight>
Eigen::Index pick_index(Eigen::Index dim, double u, Weight weight) {
  double total = 0.0;
  for (Eigen::Index a = 0; a < dim; ++a) total += weight(a);
  const double target = u * total;
  double acc = 0.0;
  Eigen::Index last = 0;
  for (Eigen::Index a = 0; a < dim; ++a) {
    const double w = weight(a);
    if (w <= 0.0) continue;
    acc += w;
    last = a;
    if (acc > target) return a;
  }
  return last;
}

}  // namespace

Eigen::Index Integrator::pick_branch(const Eigen::MatrixXcd& rho, double u) const {
  return pick_index(dim_, u, [&](Eigen::Index a) { return std::max(rho(a, a).real(), 0.0); });
}

Eigen::Index Integrator::pick_branch(const Eigen::VectorXcd& psi, double u) const {
  return pick_index(dim_, u, [&](Eigen::Index a) { return std::norm(psi[a]); });
}

template <class State>
std::vector<double> Integrator::record(const State& state, const NoiseIncrements& inc, double scale,
                                       double rate) const {
  std::vector<double> z;
  if (rate == 0.0) {
    z.assign(params_.L, 0.0);
  } else if (inc.branch >= 0.0) {
    const auto a = static_cast<std::uint64_t>(pick_branch(state, inc.branch));
    for (int j = 0; j < params_.L; ++j) z.push_back(spin_z(a, site_masks_[j]));
  } else {
    z = z_expectations(state);
  }
  std::vector<double> dy(params_.L);
  for (int j = 0; j < params_.L; ++j) dy[j] = scale * inc.dW[j] + 2.0 * rate * z[j] * params_.dt;
  return dy;
}

void Integrator::finish(Eigen::MatrixXcd& rho, bool check_positivity, StepDiagnostics* diag) const {
  PositivityReport rep;
  hermitize_normalize_inplace(rho, normalize_options(params_, check_positivity), &rep);
  if (diag) diag->record(rep);
}

std::pair<std::vector<double>, std::vector<double>> Integrator::noise_halves(const NoiseIncrements& inc) const {
  std::vector<double> first(inc.dxi.begin(), inc.dxi.end());
  std::vector<double> second;
  if (inc.bridge.empty()) return {first, second};
  if (static_cast<int>(inc.bridge.size()) != params_.L) throw std::invalid_argument("bridge needs one normal per site");
  const double half_sd = 0.5 * std::sqrt(params_.gamma * params_.dt);
  second.resize(params_.L);
  for (int j = 0; j < params_.L; ++j) {
    first[j] = 0.5 * inc.dxi[j] + half_sd * inc.bridge[j];
    second[j] = 0.5 * inc.dxi[j] - half_sd * inc.bridge[j];
  }
  return {first, second};
}

template <class State>
void Integrator::split_step(State& x, const NoiseIncrements& inc, double scale, double rate, double unread) {
  const auto [first, second] = noise_halves(inc);
  rotate_noise(x, first);
  hop(x, 0.5 * params_.dt);
  const auto dy = record(x, inc, scale, rate);
  if constexpr (std::is_same_v<State, Eigen::VectorXcd>) {
    readout(x, dy);
  } else {
    readout(x, dy, unread);
  }
  hop(x, 0.5 * params_.dt);
  if (!second.empty()) rotate_noise(x, second);
}

void Integrator::qsd(Eigen::MatrixXcd& rho, const NoiseIncrements& inc, bool check_positivity,
                     StepDiagnostics* diag) {
  check_state(rho, params_);
  check_increments(inc, params_.L);
  const double eta = params_.eta;
  if (splitting()) {
    split_step(rho, inc, std::sqrt(eta), eta * params_.lambda, (1.0 - eta) * params_.lambda);
  } else {
    euler_increment(rho, {params_.gamma, params_.lambda, std::sqrt(eta)}, inc, scratch_);
    rho += scratch_;
  }
  finish(rho, check_positivity, diag);
}

void Integrator::split_detector(Eigen::MatrixXcd& rho, double lambda1, double lambda2, const NoiseIncrements& inc,
                                bool check_positivity, StepDiagnostics* diag) {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw std::invalid_argument("sub-detector strengths must be >= 0");
  check_state(rho, params_);
  check_increments(inc, params_.L);
  if (splitting()) {
    split_step(rho, inc, 1.0, lambda1, lambda2);
  } else {
    euler_increment(rho, {params_.gamma, lambda1 + lambda2, 1.0}, inc, scratch_);
    rho += scratch_;
  }
  finish(rho, check_positivity, diag);
}

void Integrator::lindblad(Eigen::MatrixXcd& rho) {
  check_state(rho, params_);
  if (splitting()) {
    average_noise(rho, 0.5 * params_.dt);
    hop(rho, 0.5 * params_.dt);
    const std::vector<double> none(params_.L, 0.0);
    readout(rho, none, params_.lambda);
    hop(rho, 0.5 * params_.dt);
    average_noise(rho, 0.5 * params_.dt);
  } else {
    euler_increment(rho, {params_.gamma, params_.lambda, 0.0}, NoiseIncrements::zero(params_.L), scratch_);
    rho += scratch_;
  }
  finish(rho, false, nullptr);
}

void Integrator::jump(Eigen::MatrixXcd& rho, const JumpParams& jp, const NoiseIncrements& inc,
                      std::span<const double> uniforms, bool check_positivity, StepDiagnostics* diag) {
  jp.validate(params_.dt);
  if (static_cast<int>(uniforms.size()) != params_.L) throw std::invalid_argument("need one uniform per site");
  check_state(rho, params_);
  check_increments(inc, params_.L);

  if (splitting()) {
    const auto [first, second] = noise_halves(inc);
    rotate_noise(rho, first);
    hop(rho, 0.5 * params_.dt);
    finish(rho, check_positivity, diag);
    jump_readout(rho, jp, uniforms);
    hop(rho, 0.5 * params_.dt);
    if (!second.empty()) rotate_noise(rho, second);
    finish(rho, false, nullptr);
  } else {
    euler_increment(rho, {params_.gamma, 0.0, 0.0}, inc, scratch_);
    rho += scratch_;
    finish(rho, check_positivity, diag);
    jump_readout(rho, jp, uniforms);
  }
}

void Integrator::jump_readout(Eigen::MatrixXcd& rho, const JumpParams& jp, std::span<const double> uniforms) const {
  const double eps = jp.epsilon(params_.dt);
  const double up_u = std::sqrt(eps);        // K_u on |1>
  const double up_d = std::sqrt(1.0 - eps);  // K_d on |1>
  const double Delta = jp.Delta;
  for (int j = 0; j < params_.L; ++j) {
    const std::uint64_t m = site_masks_[j];
    double n_up = 0.0;
    for (Eigen::Index a = 0; a < dim_; ++a) {
      if (static_cast<std::uint64_t>(a) & m) n_up += rho(a, a).real();
    }
    // p(u) = Tr[Delta K_u rho K_u^+ + (1 - Delta) K_d rho K_d^+]
    const double p_true_u = eps * n_up;
    double p_u = Delta * p_true_u + (1.0 - Delta) * (1.0 - p_true_u);
    if (p_u < -kProbabilitySlack || p_u > 1.0 + kProbabilitySlack || !std::isfinite(p_u)) {
      throw NumericalError("readout probability out of range: " + std::to_string(p_u));
    }
    p_u = std::clamp(p_u, 0.0, 1.0);
    const bool reported_up = uniforms[j] < p_u;
    const double w_u = reported_up ? Delta : 1.0 - Delta;  // weight of K_u branch
    const double w_d = 1.0 - w_u;
    const double p = reported_up ? p_u : 1.0 - p_u;
    if (!(p > 0.0)) throw NumericalError("selected readout has vanishing probability");
    for (Eigen::Index b = 0; b < dim_; ++b) {
      const bool bb = static_cast<std::uint64_t>(b) & m;
      const double ku_b = bb ? up_u : 0.0;
      const double kd_b = bb ? up_d : 1.0;
      for (Eigen::Index a = 0; a < dim_; ++a) {
        const bool ba = static_cast<std::uint64_t>(a) & m;
        const double ku_a = ba ? up_u : 0.0;
        const double kd_a = ba ? up_d : 1.0;
        rho(a, b) *= (w_u * ku_a * ku_b + w_d * kd_a * kd_b) / p;
      }
    }
  }
}

void Integrator::pure_qsd(Eigen::VectorXcd& psi, const NoiseIncrements& inc) {
  if (params_.eta != 1.0) throw std::invalid_argument("pure_qsd_step requires eta == 1");
  if (psi.size() != dim_) throw std::invalid_argument("state vector dimension does not match L");
  check_increments(inc, params_.L);

  if (splitting()) {
    split_step(psi, inc, 1.0, params_.lambda, 0.0);
  } else {
    euler_pure(psi, inc);
  }
  const double n = psi.norm();
  if (!std::isfinite(n) || n == 0.0) throw NumericalError("state vector norm is not finite (step too large?)");
  psi /= n;
}

void Integrator::euler_pure(Eigen::VectorXcd& psi, const NoiseIncrements& inc) {
  const int L = params_.L;
  const double dt = params_.dt;
  const auto d = static_cast<std::size_t>(dim_);
  build_flip_coefficients(inc.dxi, params_.gamma);
  const auto m = z_expectations(psi);
  const double noise_loss = 0.5 * params_.gamma * L * dt;
  for (std::size_t a = 0; a < d; ++a) {
    double c = -noise_loss;
    for (int j = 0; j < L; ++j) {
      const double x = spin_z(a, site_masks_[j]) - m[j];
      c += x * inc.dW[j] - 0.5 * params_.lambda * dt * x * x;
    }
    diag_coef_[a] = c;
  }
  scratch_vec_.resize(dim_);
  const std::size_t nflip = flip_masks_.size();
  for (std::size_t a = 0; a < d; ++a) {
    cplx acc = (1.0 + diag_coef_[a]) * psi[static_cast<Eigen::Index>(a)];
    for (std::size_t k = 0; k < nflip; ++k) {
      const double f = flip_coef_[k * d + a];
      if (f != 0.0) acc += f * psi[static_cast<Eigen::Index>(a ^ flip_masks_[k])];
    }
    scratch_vec_[static_cast<Eigen::Index>(a)] = acc;
  }
  psi = scratch_vec_;
}

std::vector<double> Integrator::z_expectations(const Eigen::VectorXcd& psi) const {
  std::vector<double> m(params_.L, 0.0);
  double norm = 0.0;
  for (Eigen::Index a = 0; a < dim_; ++a) {
    const double p = std::norm(psi[a]);
    norm += p;
    for (int j = 0; j < params_.L; ++j) m[j] += p * spin_z(static_cast<std::uint64_t>(a), site_masks_[j]);
  }
  for (double& x : m) x /= norm;
  return m;
}

// Free functions -----------------------------------------------------------

Eigen::MatrixXcd qsd_increment(const DensityMatrix& rho, const ModelParams& params, const NoiseIncrements& inc) {
  Integrator integ(params);
  check_increments(inc, params.L);
  Eigen::MatrixXcd out;
  if (params.scheme == StepScheme::Euler) {
    integ.euler_increment(rho.matrix(), {params.gamma, params.lambda, std::sqrt(params.eta)}, inc, out);
    return out;
  }
  out = rho.matrix();
  integ.qsd(out, inc, false, nullptr);
  out -= rho.matrix();
  return out;
}

DensityMatrix qsd_step(const DensityMatrix& rho, const ModelParams& params, const NoiseIncrements& inc,
                       StepDiagnostics* diag) {
  Integrator integ(params);
  Eigen::MatrixXcd m = rho.matrix();
  integ.qsd(m, inc, true, diag);
  return DensityMatrix(std::move(m));
}

PureState pure_qsd_step(const PureState& psi, const ModelParams& params, const NoiseIncrements& inc) {
  Integrator integ(params);
  Eigen::VectorXcd v = psi.amplitudes();
  integ.pure_qsd(v, inc);
  return PureState(params.L, std::move(v));
}

DensityMatrix lindblad_step(const DensityMatrix& rho_bar, const ModelParams& params) {
  Integrator integ(params);
  Eigen::MatrixXcd m = rho_bar.matrix();
  integ.lindblad(m);
  return DensityMatrix(std::move(m));
}

DensityMatrix split_detector_step(const DensityMatrix& rho, double lambda1, double lambda2, const ModelParams& params,
                                  const NoiseIncrements& inc, StepDiagnostics* diag) {
  Integrator integ(params);
  Eigen::MatrixXcd m = rho.matrix();
  integ.split_detector(m, lambda1, lambda2, inc, true, diag);
  return DensityMatrix(std::move(m));
}

DensityMatrix jump_step(const DensityMatrix& rho, const JumpParams& jp, const ModelParams& params, Rng& rng,
                        StepDiagnostics* diag) {
  Integrator integ(params);
  const NoiseIncrements inc = sample_increments(rng, params);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> u(params.L);
  for (auto& x : u) x = uni(rng);
  Eigen::MatrixXcd m = rho.matrix();
  integ.jump(m, jp, inc, u, true, diag);
  return DensityMatrix(std::move(m));
}

}  // namespace qzeno
