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

#include "qzeno/quantum_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace qzeno {

namespace {

void check_sites(int L, int max_sites) {
  if (L < 1 || L > max_sites) {
    throw std::invalid_argument("number of sites must be in [1, " + std::to_string(max_sites) +
                                "], got " + std::to_string(L));
  }
}

// Expands the bits of `compact` (k bits, most significant first) onto the
// positions listed in `masks`.
std::vector<std::uint64_t> scatter_table(const std::vector<std::uint64_t>& masks) {
  const std::size_t k = masks.size();
  std::vector<std::uint64_t> table(std::size_t{1} << k, 0);
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::uint64_t full = 0;
    for (std::size_t b = 0; b < k; ++b) {
      if (r & (std::size_t{1} << (k - 1 - b))) full |= masks[b];
    }
    table[r] = full;
  }
  return table;
}

Eigen::Matrix2cd single_site_matrix(Axis alpha) {
  // Rows/columns ordered (|0> down, |1> up).
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  const cplx i{0.0, 1.0};
  switch (alpha) {
    case Axis::X:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case Axis::Y:
      // sigma^y = -i (sigma^+ - sigma^-)
      m(0, 1) = i;
      m(1, 0) = -i;
      break;
    case Axis::Z:
      m(0, 0) = -1.0;
      m(1, 1) = 1.0;
      break;
    case Axis::Plus:
      m(1, 0) = 1.0;
      break;
    case Axis::Minus:
      m(0, 1) = 1.0;
      break;
  }
  return m;
}

}  // namespace

Axis parse_axis(std::string_view label) {
  if (label == "x" || label == "X") return Axis::X;
  if (label == "y" || label == "Y") return Axis::Y;
  if (label == "z" || label == "Z") return Axis::Z;
  if (label == "+" || label == "plus") return Axis::Plus;
  if (label == "-" || label == "minus" || label == "−") return Axis::Minus;
  throw std::invalid_argument("unknown Pauli axis label '" + std::string(label) + "'");
}

Boundary parse_boundary(std::string_view label) {
  if (label == "open") return Boundary::Open;
  if (label == "periodic") return Boundary::Periodic;
  throw std::invalid_argument("unknown boundary '" + std::string(label) + "'");
}

std::string to_string(Boundary b) { return b == Boundary::Open ? "open" : "periodic"; }

// SiteSet ------------------------------------------------------------------

SiteSet::SiteSet(std::vector<int> sites, int L) : sites_(std::move(sites)), L_(L) {
  if (L < 1) throw std::invalid_argument("SiteSet: L must be >= 1");
  std::sort(sites_.begin(), sites_.end());
  if (sites_.empty()) throw std::invalid_argument("SiteSet: empty site set");
  if (std::adjacent_find(sites_.begin(), sites_.end()) != sites_.end()) {
    throw std::invalid_argument("SiteSet: duplicate site");
  }
  if (sites_.front() < 1 || sites_.back() > L) {
    throw std::invalid_argument("SiteSet: site index out of range [1, " + std::to_string(L) + "]");
  }
}

SiteSet SiteSet::range(int first, int last, int L) {
  std::vector<int> s;
  for (int j = first; j <= last; ++j) s.push_back(j);
  return SiteSet(std::move(s), L);
}

SiteSet SiteSet::left_half(int L) {
  if (L < 2 || L % 2 != 0) {
    throw std::invalid_argument("half-system quantities need an even L >= 2, got " + std::to_string(L));
  }
  return range(1, L / 2, L);
}

bool SiteSet::contains(int j) const { return std::binary_search(sites_.begin(), sites_.end(), j); }

std::uint64_t SiteSet::mask() const {
  std::uint64_t m = 0;
  for (int j : sites_) m |= site_mask(j, L_);
  return m;
}

SiteSet SiteSet::complement() const {
  std::vector<int> rest;
  for (int j = 1; j <= L_; ++j) {
    if (!contains(j)) rest.push_back(j);
  }
  return SiteSet(std::move(rest), L_);
}

// States -------------------------------------------------------------------

int sites_from_dim(Eigen::Index dim) {
  if (dim < 2 || !std::has_single_bit(static_cast<std::uint64_t>(dim))) {
    throw std::invalid_argument("dimension " + std::to_string(dim) + " is not a power of two >= 2");
  }
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

PureState::PureState(int L, Eigen::VectorXcd amplitudes) : L_(L), amps_(std::move(amplitudes)) {
  check_sites(L, kMaxPureSites);
  if (amps_.size() != (Eigen::Index{1} << L)) {
    throw std::invalid_argument("PureState: amplitude vector must have length 2^L");
  }
  normalize();
}

PureState PureState::basis(int L, std::uint64_t index) {
  check_sites(L, kMaxPureSites);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << L);
  if (index >= static_cast<std::uint64_t>(v.size())) throw std::invalid_argument("basis index out of range");
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(L, std::move(v));
}

PureState PureState::from_bits(std::string_view bits) {
  std::uint64_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument("basis string must contain only 0/1");
    index = (index << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return basis(static_cast<int>(bits.size()), index);
}

void PureState::normalize() {
  const double n = amps_.norm();
  if (!std::isfinite(n)) throw NumericalError("state vector norm is not finite");
  if (n == 0.0) throw NumericalError("state vector has zero norm");
  amps_ /= n;
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("density matrix must be square");
  L_ = sites_from_dim(m_.rows());
  check_sites(L_, kMaxDensitySites);
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int L) {
  check_sites(L, kMaxDensitySites);
  const Eigen::Index d = Eigen::Index{1} << L;
  return DensityMatrix(Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d));
}

double DensityMatrix::purity() const {
  // Tr[rho^2] = sum |rho_ab|^2 for Hermitian rho.
  return m_.squaredNorm();
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate(double tol, double positivity_tol) const {
  const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) throw std::domain_error("density matrix not Hermitian (defect " + std::to_string(herm) + ")");
  const cplx tr = m_.trace();
  if (std::abs(tr - 1.0) > tol) throw std::domain_error("density matrix trace differs from 1");
  if (min_eigenvalue() < -positivity_tol) throw std::domain_error("density matrix has a negative eigenvalue");
}

// Operators ----------------------------------------------------------------

Operator pauli_site(Axis alpha, int j, int L) {
  check_sites(L, kMaxDensitySites);
  if (j < 1 || j > L) throw std::invalid_argument("pauli_site: site index out of range");
  const Eigen::Matrix2cd s = single_site_matrix(alpha);
  const Eigen::Index d = Eigen::Index{1} << L;
  const std::uint64_t m = site_mask(j, L);
  Operator out = Operator::Zero(d, d);
  for (Eigen::Index col = 0; col < d; ++col) {
    const auto c = static_cast<std::uint64_t>(col);
    const int cb = (c & m) ? 1 : 0;
    for (int rb = 0; rb < 2; ++rb) {
      const cplx v = s(rb, cb);
      if (v == cplx{}) continue;
      const std::uint64_t r = rb ? (c | m) : (c & ~m);
      out(static_cast<Eigen::Index>(r), col) = v;
    }
  }
  return out;
}

std::vector<std::pair<int, int>> chain_bonds(int L, Boundary boundary) {
  std::vector<std::pair<int, int>> bonds;
  for (int j = 1; j < L; ++j) bonds.emplace_back(j, j + 1);
  if (boundary == Boundary::Periodic && L >= 3) bonds.emplace_back(L, 1);
  return bonds;
}

Operator build_hamiltonian(int L, Boundary boundary) {
  if (L < 2) throw std::invalid_argument("build_hamiltonian: need L >= 2");
  const cplx i{0.0, 1.0};
  const Eigen::Index d = Eigen::Index{1} << L;
  Operator h = Operator::Zero(d, d);
  for (auto [j, k] : chain_bonds(L, boundary)) {
    const Operator hop = i * pauli_site(Axis::Plus, j, L) * pauli_site(Axis::Minus, k, L);
    h += hop + hop.adjoint();
  }
  return h;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const SiteSet& keep) {
  const int L = rho.num_sites();
  if (keep.num_sites() != L) throw std::invalid_argument("partial_trace: site set built for a different L");
  if (!keep.is_proper()) return rho;

  std::vector<std::uint64_t> kept_masks, traced_masks;
  for (int j = 1; j <= L; ++j) {
    (keep.contains(j) ? kept_masks : traced_masks).push_back(site_mask(j, L));
  }
  const auto kept = scatter_table(kept_masks);
  const auto traced = scatter_table(traced_masks);
  const auto dk = static_cast<Eigen::Index>(kept.size());

  const Eigen::MatrixXcd& m = rho.matrix();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
  for (Eigen::Index c = 0; c < dk; ++c) {
    for (Eigen::Index r = 0; r < dk; ++r) {
      cplx acc{};
      for (std::uint64_t t : traced) {
        acc += m(static_cast<Eigen::Index>(kept[r] | t), static_cast<Eigen::Index>(kept[c] | t));
      }
      out(r, c) = acc;
    }
  }
  return DensityMatrix(std::move(out));
}

Operator partial_transpose(const Operator& m, const SiteSet& region) {
  const Eigen::Index d = m.rows();
  if (m.cols() != d || sites_from_dim(d) != region.num_sites()) {
    throw std::invalid_argument("partial_transpose: dimension does not match the site set");
  }
  const std::uint64_t mask = region.mask();
  Operator out(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    const auto ub = static_cast<std::uint64_t>(b);
    for (Eigen::Index a = 0; a < d; ++a) {
      const auto ua = static_cast<std::uint64_t>(a);
      const std::uint64_t ra = (ua & ~mask) | (ub & mask);
      const std::uint64_t rb = (ub & ~mask) | (ua & mask);
      out(a, b) = m(static_cast<Eigen::Index>(ra), static_cast<Eigen::Index>(rb));
    }
  }
  return out;
}

Operator partial_transpose(const DensityMatrix& rho, const SiteSet& region) {
  if (!region.is_proper()) throw std::invalid_argument("partial_transpose: region must be a proper subset");
  return partial_transpose(rho.matrix(), region);
}

// Hygiene ------------------------------------------------------------------

void hermitize_normalize_inplace(Eigen::MatrixXcd& m, const NormalizeOptions& opts, PositivityReport* report) {
  if (m.rows() != m.cols()) throw std::invalid_argument("hermitize_normalize: matrix must be square");
  sites_from_dim(m.rows());
  if (!m.allFinite()) throw NumericalError("density matrix contains NaN or Inf");

  const Eigen::Index d = m.rows();
  for (Eigen::Index c = 0; c < d; ++c) {
    m(c, c) = cplx(m(c, c).real(), 0.0);
    for (Eigen::Index r = c + 1; r < d; ++r) {
      const cplx avg = 0.5 * (m(r, c) + std::conj(m(c, r)));
      m(r, c) = avg;
      m(c, r) = std::conj(avg);
    }
  }
  const double tr = m.trace().real();
  if (!(tr > 0.5)) throw NumericalError("trace collapsed to " + std::to_string(tr) + " (step size too large?)");
  if (tr >= 1.5) throw NumericalError("trace blew up to " + std::to_string(tr) + " (step size too large?)");
  m /= tr;

  if (report) *report = PositivityReport{};
  if (!opts.check_positivity) return;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  const double lo = es.eigenvalues().minCoeff();
  if (report) report->min_eigenvalue = lo;
  if (lo >= -opts.positivity_tol) return;

  if (report) report->violated = true;
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  const double total = clipped.sum();
  if (!(total > 0.0)) throw NumericalError("density matrix has no positive spectrum left after clipping");
  m = es.eigenvectors() * (clipped / total).asDiagonal() * es.eigenvectors().adjoint();
}

DensityMatrix hermitize_normalize(const Eigen::MatrixXcd& m, const NormalizeOptions& opts,
                                  PositivityReport* report) {
  Eigen::MatrixXcd work = m;
  hermitize_normalize_inplace(work, opts, report);
  return DensityMatrix(std::move(work));
}

}  // namespace qzeno
