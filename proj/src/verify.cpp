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

#include "qzeno/verify.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>

#include "qzeno/dynamics.hpp"
#include "qzeno/ensemble.hpp"
#include "qzeno/oracles.hpp"

namespace qzeno {

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

DensityMatrix random_density(int L, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Index d = Eigen::Index{1} << L;
  Eigen::MatrixXcd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k) g(i, k) = cplx(n(rng), n(rng));
  Eigen::MatrixXcd m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

VerifyResult check(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
  try {
    auto [ok, detail] = fn();
    return {name, ok, detail};
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

// Mean of qsd_step over every sign pattern of two-point increments of the
// right variance, with the record taken from <Z>.
Eigen::MatrixXcd two_point_mean(const DensityMatrix& rho, const ModelParams& p) {
  const int L = p.L;
  const int n = 3 * L;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rho.dim(), rho.dim());
  for (int bits = 0; bits < (1 << n); ++bits) {
    NoiseIncrements inc{std::vector<double>(L), std::vector<double>(L), std::vector<double>(L), -1.0};
    for (int j = 0; j < L; ++j) {
      const auto sgn = [&](int b) { return (bits >> b) & 1 ? 1.0 : -1.0; };
      inc.dxi[j] = sgn(j) * std::sqrt(p.gamma * p.dt);
      inc.dW[j] = sgn(L + j) * std::sqrt(p.lambda * p.dt);
      inc.bridge[j] = sgn(2 * L + j);
    }
    acc += qsd_step(rho, p, inc).matrix();
  }
  return acc / static_cast<double>(1 << n);
}

}  // namespace

std::vector<VerifyResult> run_verification_suite(std::uint64_t seed) {
  std::vector<VerifyResult> out;
  Rng rng(seed);

  out.push_back(check("kraus-completeness", [] {
    double worst = 0.0;
    for (double eps : {1e-4, 1e-3, 0.01, 0.05}) {
      worst = std::max(worst, oracle::KrausPair::diffusive(eps, 1.0).completeness_defect());
      worst = std::max(worst, oracle::KrausPair::jump(eps, 1.0).completeness_defect());
    }
    return std::pair{worst < 1e-12, fmt("max defect %.3g", worst)};
  }));

  out.push_back(check("hypersphere-factor", [&] {
    const auto est = oracle::hypersphere_concurrence(400000, rng);
    const bool ok = std::abs(est.mean_abs_det - 0.25) < 0.002 && std::abs(est.mean_concurrence - 0.5) < 0.004;
    return std::pair{ok, fmt("E|det| = %.5f, E[2|det|] = %.5f", est.mean_abs_det, est.mean_concurrence)};
  }));

  out.push_back(check("lindblad-steady-state", [] {
    auto p2 = ModelParams::make(2, 1.0, 1.0, 0.0);
    auto p3 = ModelParams::make(3, 0.5, 2.0, 0.0);
    const double e2 = (oracle::lindblad_steady_state(p2).matrix() - Eigen::MatrixXcd::Identity(4, 4) / 4.0).norm();
    const double e3 = (oracle::lindblad_steady_state(p3).matrix() - Eigen::MatrixXcd::Identity(8, 8) / 8.0).norm();
    return std::pair{e2 < 1e-10 && e3 < 1e-10, fmt("L=2 %.2g, L=3 %.2g", e2, e3)};
  }));

  out.push_back(check("steady-state-fixed-point", [] {
    auto p = ModelParams::make(2, 0.7, 1.3, 0.0);
    const auto ss = oracle::lindblad_steady_state(p);
    const double e = (lindblad_step(ss, p).matrix() - ss.matrix()).norm();
    return std::pair{e < 1e-10, fmt("one-step change %.2g", e)};
  }));

  out.push_back(check("lindblad-step-vs-exponential", [] {
    auto p = ModelParams::make(2, 0.5, 0.7, 0.0);
    const auto rho0 = DensityMatrix::from_pure(PureState::from_bits("01"));
    auto err = [&](double dt) {
      ModelParams q = p;
      q.dt = dt;
      DensityMatrix r = rho0;
      const int steps = static_cast<int>(std::lround(2.0 / dt));
      for (int k = 0; k < steps; ++k) r = lindblad_step(r, q);
      return (r.matrix() - oracle::lindblad_exact_evolution(rho0, q, 2.0).matrix()).norm();
    };
    const double e1 = err(0.05);
    const double e2 = err(0.025);
    return std::pair{e1 < 2e-3 && e1 / e2 > 3.0, fmt("error %.3g, refinement ratio %.2f", e1, e1 / e2)};
  }));

  out.push_back(check("noise-rotation", [&] {
    const auto rho = random_density(3, rng);
    auto p = ModelParams::make(3, 1.0, 0.0, 1.0);
    Integrator integ(p);
    const std::vector<double> dxi{0.3, -0.7, 1.1};
    Eigen::MatrixXcd m = rho.matrix();
    integ.rotate_noise(m, dxi);
    DensityMatrix ref = rho;
    for (int j = 1; j <= 3; ++j) ref = oracle::exact_noise_rotation(ref, j, dxi[j - 1]);
    const double e = (m - ref.matrix()).norm();
    return std::pair{e < 1e-12, fmt("max deviation %.2g", e)};
  }));

  out.push_back(check("pure-vs-density-step", [&] {
    auto p = ModelParams::make(3, 0.8, 0.6, 1.0);
    Eigen::VectorXcd v(8);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 8; ++i) v[i] = cplx(n(rng), n(rng));
    const PureState psi(3, v);
    const auto inc = sample_increments(rng, p);
    const auto a = pure_qsd_step(psi, p, inc);
    const auto b = qsd_step(DensityMatrix::from_pure(psi), p, inc);
    const Eigen::MatrixXcd pa = a.amplitudes() * a.amplitudes().adjoint();
    const double e = (pa - b.matrix()).norm();
    return std::pair{e < 1e-12, fmt("deviation %.2g", e)};
  }));

  out.push_back(check("mean-map-second-order", [&] {
    const auto rho = random_density(2, rng);
    auto defect = [&](double dt) {
      auto p = ModelParams::make(2, 0.9, 0.8, 0.5);
      p.dt = dt;
      return (two_point_mean(rho, p) - lindblad_step(rho, p).matrix()).norm();
    };
    const double d1 = defect(0.02);
    const double d2 = defect(0.01);
    return std::pair{d1 / d2 > 3.0, fmt("defect %.3g, refinement ratio %.2f", d1, d1 / d2)};
  }));

  out.push_back(check("faulty-readout-half", [&] {
    const auto rho = random_density(2, rng);
    const auto k = oracle::KrausPair::diffusive(0.04, 0.5);
    const auto avg = oracle::kraus_average_channel(rho, k, 1);
    double worst = 0.0;
    for (int i = 0; i < 8; ++i)
      worst = std::max(worst, (oracle::kraus_weak_measurement_oracle(rho, k, 1, rng).matrix() - avg.matrix()).norm());
    return std::pair{worst < 1e-12, fmt("max deviation %.2g", worst)};
  }));

  out.push_back(check("binomial-moments", [&] {
    const double Delta = 0.8, eps = 0.05, mz = 0.6;
    const int n = 400000;
    CompensatedSum s, s2;
    for (int i = 0; i < n; ++i) {
      const double x = oracle::binomial_increment_oracle(Delta, eps, mz, rng);
      s.add(x);
      s2.add(x * x);
    }
    const double mean = s.value() / n;
    const double expect = eps * eps * (2 * Delta - 1) * mz;
    const double se = eps / std::sqrt(static_cast<double>(n));
    const double var = s2.value() / n - mean * mean;
    const bool ok = std::abs(mean - expect) < 3 * se && std::abs(var / (eps * eps) - 1.0) < 0.01;
    return std::pair{ok, fmt("mean %.3g (expected %.3g)", mean, expect)};
  }));

  return out;
}

}  // namespace qzeno
