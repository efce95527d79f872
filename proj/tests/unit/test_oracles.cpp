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

#include <doctest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "helpers.hpp"
#include "qzeno/ensemble.hpp"
#include "qzeno/oracles.hpp"
#include "qzeno/verify.hpp"

using namespace qzeno;
using qzeno::test::max_abs;

TEST_CASE("KrausPair: completeness for both pairs") {
  for (double eps : {1e-6, 1e-3, 0.01, 0.03, 0.05}) {
    for (double D : {0.5, 0.8, 1.0}) {
      CHECK(oracle::KrausPair::diffusive(eps, D).completeness_defect() < 1e-12);
      CHECK(oracle::KrausPair::jump(eps, D).completeness_defect() < 1e-12);
      CHECK_NOTHROW(oracle::KrausPair::diffusive(eps, D).validate());
    }
  }
  auto broken = oracle::KrausPair::diffusive(0.01, 1.0);
  broken.K_u *= 1.01;
  CHECK_THROWS(broken.validate());
  CHECK_THROWS(oracle::KrausPair::diffusive(0.01, 0.0).validate());
  Rng rng(1);
  CHECK_THROWS(oracle::kraus_weak_measurement_oracle(DensityMatrix::maximally_mixed(1), broken, 1, rng));
}

TEST_CASE("kraus_weak_measurement_oracle: perfect and useless detectors") {
  Rng rng(2);
  const auto rho = test::random_density(2, rng);
  const auto k = oracle::KrausPair::diffusive(0.04, 1.0);
  const Operator Ku = oracle::embed_site_operator(k.K_u, 2, 2), Kd = oracle::embed_site_operator(k.K_d, 2, 2);
  const Eigen::MatrixXcd pu = Ku * rho.matrix() * Ku.adjoint(), pd = Kd * rho.matrix() * Kd.adjoint();
  int ups = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto out = oracle::kraus_weak_measurement_oracle(rho, k, 2, rng);
    const bool is_u = max_abs(out.matrix() - pu / pu.trace().real()) < 1e-13;
    const bool is_d = max_abs(out.matrix() - pd / pd.trace().real()) < 1e-13;
    CHECK((is_u || is_d));
    ups += is_u;
  }
  const double p = pu.trace().real();
  CHECK(std::abs(ups - n * p) < 4 * std::sqrt(n * p * (1 - p)));

  const auto half = oracle::KrausPair::diffusive(0.04, 0.5);
  const auto avg = oracle::kraus_average_channel(rho, half, 2);
  for (int i = 0; i < 10; ++i) CHECK(max_abs(oracle::kraus_weak_measurement_oracle(rho, half, 2, rng).matrix() - avg.matrix()) < 1e-14);
  CHECK(std::abs(avg.trace() - 1.0) < 1e-14);
}

TEST_CASE("binomial_increment_oracle: fair coin and moments") {
  Rng rng(3);
  const double eps = 0.05;
  int plus = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) plus += oracle::binomial_increment_oracle(0.5, eps, 0.9, rng) > 0;
  CHECK(std::abs(plus - n / 2.0) < 4 * std::sqrt(n / 4.0));

  const double D = 0.85, mz = -0.4;
  CompensatedSum s, s2;
  for (int i = 0; i < n; ++i) {
    const double x = oracle::binomial_increment_oracle(D, eps, mz, rng);
    CHECK((x == eps || x == -eps));
    s.add(x);
    s2.add(x * x);
  }
  const double mean = s.value() / n;
  const double expect = eps * eps * (2 * D - 1) * mz;
  CHECK(std::abs(mean - expect) < 3 * eps / std::sqrt(double(n)));
  const double var = s2.value() / n - mean * mean;
  CHECK(var == doctest::Approx(eps * eps).epsilon(0.01));
  CHECK_THROWS(oracle::binomial_increment_oracle(0.8, 0.05, 1.5, rng));
}

TEST_CASE("hypersphere_concurrence: factor two") {
  Rng rng(4);
  const auto est = oracle::hypersphere_concurrence(1000000, rng);
  CHECK(est.n_samples == 1000000);
  CHECK(std::abs(est.mean_abs_det - 0.25) < 0.002);
  CHECK(std::abs(est.mean_concurrence - 0.5) < 0.004);
  CHECK(est.mean_concurrence == doctest::Approx(2 * est.mean_abs_det));
  // Bell point alpha = delta = 1/sqrt 2.
  const double a = 1 / std::sqrt(2.0);
  CHECK(2 * std::abs(a * a - 0.0) == doctest::Approx(1.0));
  CHECK_THROWS(oracle::hypersphere_concurrence(100, rng));
}

TEST_CASE("lindblad_steady_state: fully mixed") {
  auto p2 = ModelParams::make(2, 1.0, 1.0, 0.0);
  CHECK(max_abs(oracle::lindblad_steady_state(p2).matrix() - Eigen::MatrixXcd::Identity(4, 4) / 4.0) < 1e-10);
  auto p3 = ModelParams::make(3, 0.5, 2.0, 0.0);
  CHECK(max_abs(oracle::lindblad_steady_state(p3).matrix() - Eigen::MatrixXcd::Identity(8, 8) / 8.0) < 1e-10);
  for (StepScheme s : {StepScheme::Splitting, StepScheme::Euler}) {
    p2.scheme = s;
    const auto ss = oracle::lindblad_steady_state(p2);
    CHECK(max_abs(lindblad_step(ss, p2).matrix() - ss.matrix()) < 1e-10);
  }
  CHECK_THROWS(oracle::lindblad_steady_state(ModelParams::make(2, 0.0, 0.0, 0.0)));
  CHECK_THROWS(oracle::lindblad_steady_state(ModelParams::make(5, 1.0, 1.0, 0.0)));
  // Measurement alone on decoupled sites leaves every diagonal state fixed.
  auto dark = ModelParams::make(2, 0.0, 1.0, 0.0);
  dark.hamiltonian_on = false;
  CHECK_THROWS_AS(oracle::lindblad_steady_state(dark), oracle::DegenerateSteadyState);
}

TEST_CASE("lindblad_superoperator: generator of the Euler step") {
  Rng rng(5);
  const auto rho = test::random_density(2, rng);
  auto p = ModelParams::make(2, 0.6, 0.9, 0.0);
  p.scheme = StepScheme::Euler;
  const Eigen::MatrixXcd S = oracle::lindblad_superoperator(p);
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.matrix().data(), 16);
  const Eigen::VectorXcd dv = S * v;
  const Eigen::MatrixXcd drift = (lindblad_step(rho, p).matrix() - rho.matrix()) / p.dt;
  CHECK(max_abs(Eigen::Map<const Eigen::MatrixXcd>(dv.data(), 4, 4) - drift) < 1e-12);
}

TEST_CASE("exact_noise_rotation matches the dense exponential") {
  Rng rng(6);
  const auto rho = test::random_density(2, rng);
  const Eigen::MatrixXcd U = (cplx(0, -0.37) * pauli_site(Axis::Y, 1, 2)).exp();
  CHECK(max_abs(oracle::exact_noise_rotation(rho, 1, 0.37).matrix() - U * rho.matrix() * U.adjoint()) < 1e-14);
}

TEST_CASE("verification suite passes") {
  for (const auto& r : run_verification_suite()) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CHECK(r.passed);
  }
}
