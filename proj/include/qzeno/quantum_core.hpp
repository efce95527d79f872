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

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qzeno {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;

// Raised when an integrator produces NaN, a collapsed trace or another
// signal that the time step is too coarse.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Basis convention used everywhere in the library:
//
//   * bit value 0 is spin-down, bit value 1 is spin-up;
//   * sites are numbered 1..L and site 1 is the most significant bit of the
//     basis index, so |01> (site 1 down, site 2 up) is basis index 1;
//   * sigma^z |1> = +|1>, sigma^+ = |1><0|, sigma^- = |0><1|.

// Largest L accepted for dense density matrices and for state vectors.
inline constexpr int kMaxDensitySites = 12;
inline constexpr int kMaxPureSites = 20;

// Bit mask of site j (1-based) in a chain of L sites.
constexpr std::uint64_t site_mask(int j, int L) { return std::uint64_t{1} << (L - j); }

// sigma^z eigenvalue (+1 up, -1 down) of site j in basis state `index`.
constexpr double spin_z(std::uint64_t index, std::uint64_t mask) { return (index & mask) ? 1.0 : -1.0; }

enum class Axis { X, Y, Z, Plus, Minus };
Axis parse_axis(std::string_view label);

enum class Boundary { Open, Periodic };
Boundary parse_boundary(std::string_view label);
std::string to_string(Boundary b);

// 1-based set of sites. Construction validates range and uniqueness and keeps
// the sites sorted.
class SiteSet {
 public:
  SiteSet(std::vector<int> sites, int L);

  static SiteSet range(int first, int last, int L);
  static SiteSet left_half(int L);

  int num_sites() const { return L_; }
  const std::vector<int>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  bool contains(int j) const;
  bool is_proper() const { return static_cast<int>(sites_.size()) < L_; }
  std::uint64_t mask() const;
  SiteSet complement() const;

 private:
  std::vector<int> sites_;
  int L_;
};

class PureState {
 public:
  PureState() = default;
  // Requires a length-2^L vector; normalises it (throws on zero norm).
  PureState(int L, Eigen::VectorXcd amplitudes);

  static PureState basis(int L, std::uint64_t index);
  // Parses a bit string such as "0101" (site 1 first).
  static PureState from_bits(std::string_view bits);

  int num_sites() const { return L_; }
  Eigen::Index dim() const { return amps_.size(); }
  const Eigen::VectorXcd& amplitudes() const { return amps_; }
  Eigen::VectorXcd& amplitudes() { return amps_; }
  double norm() const { return amps_.norm(); }
  void normalize();

 private:
  int L_ = 0;
  Eigen::VectorXcd amps_;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  // Structural checks only (square, dimension 2^L). Use validate() for the
  // physical invariants.
  explicit DensityMatrix(Eigen::MatrixXcd m);

  static DensityMatrix from_pure(const PureState& psi);
  static DensityMatrix maximally_mixed(int L);

  int num_sites() const { return L_; }
  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXcd& matrix() const { return m_; }
  Eigen::MatrixXcd& matrix() { return m_; }

  cplx trace() const { return m_.trace(); }
  double purity() const;
  double min_eigenvalue() const;
  // Throws std::domain_error when Hermiticity, trace or positivity fail.
  void validate(double tol = 1e-10, double positivity_tol = 1e-8) const;

 private:
  int L_ = 0;
  Eigen::MatrixXcd m_;
};

// Number of sites encoded by a power-of-two dimension; throws otherwise.
int sites_from_dim(Eigen::Index dim);

Operator pauli_site(Axis alpha, int j, int L);

// Nearest-neighbour bonds of the chain as (j, j+1) site pairs. The periodic
// wrap bond (L, 1) is added only for L >= 3; at L = 2 it would cancel the
// (1, 2) bond exactly.
std::vector<std::pair<int, int>> chain_bonds(int L, Boundary boundary);

// H = sum_j (i sigma_j^+ sigma_{j+1}^- + h.c.) with unit energy scale.
Operator build_hamiltonian(int L, Boundary boundary = Boundary::Open);

DensityMatrix partial_trace(const DensityMatrix& rho, const SiteSet& keep);
Operator partial_transpose(const DensityMatrix& rho, const SiteSet& region);
Operator partial_transpose(const Operator& m, const SiteSet& region);

// Counters for positivity repairs performed by hermitize_normalize.
struct PositivityReport {
  bool violated = false;
  double min_eigenvalue = 0.0;
};

struct NormalizeOptions {
  double positivity_tol = 1e-8;
  // When false the eigenvalue check (and therefore clipping) is skipped.
  bool check_positivity = true;
};

// Returns (M + M^dagger)/2 divided by its trace. Negative eigenvalues below
// -positivity_tol are clipped to zero and the result renormalised; the event
// is recorded in `report` if given. Throws NumericalError when the trace is
// <= 0.5 or the matrix contains NaN.
DensityMatrix hermitize_normalize(const Eigen::MatrixXcd& m, const NormalizeOptions& opts = {},
                                  PositivityReport* report = nullptr);

// In-place variant used by the integrators.
void hermitize_normalize_inplace(Eigen::MatrixXcd& m, const NormalizeOptions& opts,
                                 PositivityReport* report);

// Commutator and anticommutator helpers for dense operators.
inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }
inline Operator anticommutator(const Operator& a, const Operator& b) { return a * b + b * a; }

}  // namespace qzeno
