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

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "qzeno/dynamics.hpp"
#include "qzeno/quantum_core.hpp"

namespace qzeno::test {

inline Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) g(i, k) = cplx(n(rng), n(rng));
  return g;
}

inline DensityMatrix random_density(int L, Rng& rng) {
  const Eigen::Index d = Eigen::Index{1} << L;
  const Eigen::MatrixXcd g = random_complex(d, d, rng);
  Eigen::MatrixXcd m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

inline PureState random_pure(int L, Rng& rng) {
  return PureState(L, random_complex(Eigen::Index{1} << L, 1, rng).col(0));
}

inline PureState random_real_pure(int L, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXcd v(Eigen::Index{1} << L);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
  return PureState(L, v);
}

inline Eigen::MatrixXcd random_unitary(Eigen::Index d, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_complex(d, d, rng));
  return qr.householderQ() * Eigen::MatrixXcd::Identity(d, d);
}

inline double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

inline PureState bell() { return PureState(2, (Eigen::VectorXcd(4) << 0, 1, 1, 0).finished()); }

inline double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a - b);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qzeno::test
