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

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "qzeno/observables.hpp"

using namespace qzeno;
using qzeno::test::max_abs;

namespace {

DensityMatrix werner(double p) {
  const auto b = DensityMatrix::from_pure(test::bell());
  return DensityMatrix(p * b.matrix() + (1 - p) * Eigen::MatrixXcd::Identity(4, 4) / 4.0);
}

// Concurrence from the plain non-Hermitian product rho * rho_tilde.
double wootters_reference(const DensityMatrix& rho) {
  Eigen::Matrix4cd yy;
  yy.setZero();
  yy(0, 3) = -1;
  yy(1, 2) = 1;
  yy(2, 1) = 1;
  yy(3, 0) = -1;  // sigma^y (x) sigma^y, independent of the sign convention of sigma^y
  const Eigen::Matrix4cd r = rho.matrix();
  const Eigen::Matrix4cd tilde = yy * r.conjugate() * yy;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(r * tilde);
  std::vector<double> ev;
  for (int i = 0; i < 4; ++i) ev.push_back(std::sqrt(std::max(0.0, es.eigenvalues()[i].real())));
  std::sort(ev.rbegin(), ev.rend());
  return std::max(0.0, ev[0] - ev[1] - ev[2] - ev[3]);
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k) out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
  return out;
}

}  // namespace

TEST_CASE("concurrence: Bell, product, Werner") {
  CHECK(concurrence(DensityMatrix::from_pure(test::bell())).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(concurrence(test::bell()) == doctest::Approx(1.0));
  CHECK(concurrence(DensityMatrix::from_pure(PureState::from_bits("01"))).value == doctest::Approx(0.0));
  Rng rng(1);
  const auto a = test::random_pure(1, rng), b = test::random_pure(1, rng);
  const PureState prod(2, kron(a.amplitudes(), b.amplitudes()).col(0));
  CHECK(concurrence(DensityMatrix::from_pure(prod)).value < 1e-7);
  CHECK(concurrence(prod) < 1e-14);

  const auto w = werner(0.8);
  const auto c = concurrence(w);
  CHECK(std::abs(c.value - wootters_reference(w)) < 1e-10);
  CHECK(c.value == doctest::Approx((3 * 0.8 - 1) / 2));
  CHECK(concurrence_squared(w) == doctest::Approx(c.value * c.value));
  CHECK(c.spectrum[0] >= c.spectrum[1]);
  CHECK(c.spectrum[3] >= 0.0);

  CHECK(concurrence_squared(DensityMatrix::from_pure(test::bell())) == doctest::Approx(1.0));
  CHECK(concurrence_squared(DensityMatrix::from_pure(prod)) < 1e-12);
  CHECK_THROWS(concurrence(DensityMatrix::maximally_mixed(3)));
}

TEST_CASE("concurrence: random mixed states against the direct spectrum") {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto r = test::random_density(2, rng);
    const DensityMatrix low_rank(0.7 * DensityMatrix::from_pure(test::random_pure(2, rng)).matrix() + 0.3 * r.matrix());
    CHECK(std::abs(concurrence(low_rank).value - wootters_reference(low_rank)) < 1e-8);
  }
}

TEST_CASE("concurrence: invariant under local unitaries") {
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto rho = DensityMatrix(0.6 * DensityMatrix::from_pure(test::random_pure(2, rng)).matrix() +
                                   0.4 * test::random_density(2, rng).matrix());
    const Eigen::MatrixXcd U = kron(test::random_unitary(2, rng), test::random_unitary(2, rng));
    const DensityMatrix rotated(U * rho.matrix() * U.adjoint());
    CHECK(std::abs(concurrence(rho).value - concurrence(rotated).value) < 1e-8);
  }
}

TEST_CASE("concurrence: real pure states give 2|ad - bc|") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto psi = test::random_real_pure(2, rng);
    const auto& v = psi.amplitudes();
    const double ref = 2.0 * std::abs(v[0].real() * v[3].real() - v[1].real() * v[2].real());
    CHECK(std::abs(concurrence(psi) - ref) < 1e-10);
    CHECK(std::abs(concurrence(DensityMatrix::from_pure(psi)).value - ref) < 1e-6);
  }
}

TEST_CASE("log_negativity: product, Bell, pure random states") {
  const SiteSet one({1}, 2);
  CHECK(log_negativity(DensityMatrix::from_pure(PureState::from_bits("01")), one) == doctest::Approx(0.0));
  CHECK(log_negativity(DensityMatrix::from_pure(test::bell()), one) == doctest::Approx(std::log(2.0)));
  CHECK(log_negativity(test::bell(), one) == doctest::Approx(std::log(2.0)));
  CHECK(log_negativity(DensityMatrix::from_pure(test::bell()), one, LogBase::Two) == doctest::Approx(1.0));
  CHECK(log_negativity(DensityMatrix::maximally_mixed(2), one) == doctest::Approx(0.0));

  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    const auto psi = test::random_pure(4, rng);
    const auto rho = DensityMatrix::from_pure(psi);
    const SiteSet A({1, 2}, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(partial_transpose(rho, A));
    const double ref = std::log(es.eigenvalues().cwiseAbs().sum());
    CHECK(log_negativity(rho, A) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(log_negativity(psi, A) == doctest::Approx(ref).epsilon(1e-10));
    // Pure states: same value for the complement.
    const SiteSet B({1, 3}, 4);
    CHECK(std::abs(log_negativity(rho, B) - log_negativity(rho, B.complement())) < 1e-8);
  }
  CHECK_THROWS(log_negativity(DensityMatrix::maximally_mixed(2), SiteSet({1, 2}, 2)));
}

TEST_CASE("subsystem_parity_variance: examples and range") {
  CHECK(subsystem_parity_variance(DensityMatrix::from_pure(PureState::from_bits("01")), SiteSet({1}, 2)) ==
        doctest::Approx(1.0));
  CHECK(subsystem_parity_variance(PureState::from_bits("01"), SiteSet({1}, 2)) == doctest::Approx(1.0));
  CHECK(subsystem_parity_variance(DensityMatrix::from_pure(test::bell()), SiteSet({1}, 2)) == doctest::Approx(0.0));
  CHECK(subsystem_parity_variance(DensityMatrix::maximally_mixed(3), SiteSet({1, 3}, 3)) == doctest::Approx(0.0));

  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto rho = test::random_density(3, rng);
    const double v = subsystem_parity_variance(rho, SiteSet({1, 2}, 3));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // Superposition of equal-parity basis states: definite parity, variance 1.
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(8);
  v[0b000] = 0.6;
  v[0b110] = cplx(0, 0.8);
  CHECK(subsystem_parity_variance(PureState(3, v), SiteSet({1, 2}, 3)) == doctest::Approx(1.0));
  v[0b100] = 0.3;  // mixes in odd parity
  CHECK(subsystem_parity_variance(PureState(3, v), SiteSet({1, 2}, 3)) < 1.0 - 1e-3);
  // Agreement between the two representations.
  const auto psi = test::random_pure(4, rng);
  CHECK(subsystem_parity_variance(psi, SiteSet({1, 2}, 4)) ==
        doctest::Approx(subsystem_parity_variance(DensityMatrix::from_pure(psi), SiteSet({1, 2}, 4))));
}

TEST_CASE("subsystem_purity: examples") {
  CHECK(subsystem_purity(PureState::from_bits("0110"), SiteSet({1, 2}, 4)) == doctest::Approx(1.0));
  CHECK(subsystem_purity(DensityMatrix::from_pure(test::bell()), SiteSet({1}, 2)) == doctest::Approx(0.5));
  CHECK(subsystem_purity(test::bell(), SiteSet({1}, 2)) == doctest::Approx(0.5));
  CHECK(subsystem_purity(DensityMatrix::maximally_mixed(2), SiteSet({1}, 2)) == doctest::Approx(0.5));
  Rng rng(7);
  const auto psi = test::random_pure(4, rng);
  CHECK(subsystem_purity(psi, SiteSet({2, 3}, 4)) ==
        doctest::Approx(subsystem_purity(DensityMatrix::from_pure(psi), SiteSet({2, 3}, 4))));
}

TEST_CASE("sigma_z_expectation and Schmidt coefficients") {
  CHECK(sigma_z_expectation(PureState::from_bits("01"), 1) == -1.0);
  CHECK(sigma_z_expectation(DensityMatrix::from_pure(PureState::from_bits("01")), 2) == 1.0);
  const auto s = schmidt_coefficients(test::bell(), SiteSet({1}, 2));
  CHECK(s[0] == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(s[1] == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("Observable labels and evaluation") {
  CHECK(Observable::parse("negativity").name() == "negativity");
  CHECK(Observable::parse("e") == Observable::parse("negativity"));
  CHECK(Observable::parse("P") == Observable::parse("parity"));
  CHECK(Observable::parse("sz3").site == 3);
  CHECK_THROWS(Observable::parse("sz0"));
  CHECK_THROWS(Observable::parse("entropy"));
  const auto list = parse_observables("concurrence,parity,sz2");
  REQUIRE(list.size() == 3);
  CHECK(list[2].name() == "sz2");

  CHECK_THROWS(Observable::parse("concurrence").check_applicable(4));
  CHECK_THROWS(Observable::parse("negativity").check_applicable(3));
  CHECK_NOTHROW(Observable::parse("parity").check_applicable(6));
  CHECK_THROWS(Observable::parse("sz5").check_applicable(4));

  const TrajectoryState pure = test::bell();
  const TrajectoryState mixed = DensityMatrix::from_pure(test::bell());
  for (const char* label : {"concurrence", "concurrence2", "negativity", "parity", "purity", "sz1"}) {
    const auto o = Observable::parse(label);
    CAPTURE(label);
    CHECK(evaluate(o, pure) == doctest::Approx(evaluate(o, mixed)).epsilon(1e-6));
  }
  CHECK(evaluate(Observable::parse("negativity"), pure, LogBase::Two) == doctest::Approx(1.0));
}
