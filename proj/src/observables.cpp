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

#include "qzeno/observables.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qzeno {

namespace {

void require_two_qubits(int L) {
  if (L != 2) throw std::invalid_argument("concurrence is defined for two qubits only, got L = " + std::to_string(L));
}

double parity_sign(std::uint64_t index, std::uint64_t mask) {
  // prod_j s_j(index) over the sites in mask; s = -1 for every down spin.
  const int downs = std::popcount(~index & mask);
  return (downs % 2 == 0) ? 1.0 : -1.0;
}

double apply_base(double natural_log, LogBase base) {
  return base == LogBase::Natural ? natural_log : natural_log / std::log(2.0);
}

// Indices of the 2^k basis states spanned by `masks` (most significant first).
std::vector<std::uint64_t> scatter(const std::vector<std::uint64_t>& masks) {
  const std::size_t k = masks.size();
  std::vector<std::uint64_t> out(std::size_t{1} << k, 0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t b = 0; b < k; ++b) {
      if (r & (std::size_t{1} << (k - 1 - b))) out[r] |= masks[b];
    }
  }
  return out;
}

Eigen::MatrixXcd reshape_bipartite(const PureState& psi, const SiteSet& region) {
  const int L = psi.num_sites();
  if (region.num_sites() != L) throw std::invalid_argument("site set built for a different L");
  std::vector<std::uint64_t> in_masks, out_masks;
  for (int j = 1; j <= L; ++j) (region.contains(j) ? in_masks : out_masks).push_back(site_mask(j, L));
  const auto rows = scatter(in_masks);
  const auto cols = scatter(out_masks);
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          psi.amplitudes()(static_cast<Eigen::Index>(rows[r] | cols[c]));
    }
  }
  return m;
}

}  // namespace

ConcurrenceResult concurrence(const DensityMatrix& rho) {
  require_two_qubits(rho.num_sites());
  const Operator yy = pauli_site(Axis::Y, 1, 2) * pauli_site(Axis::Y, 2, 2);
  const Eigen::Matrix4cd r = rho.matrix();
  const Eigen::Matrix4cd rho_tilde = yy * r.conjugate() * yy;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(r);
  const Eigen::Vector4d roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix4cd sqrt_rho = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
  const Eigen::Matrix4cd sym = sqrt_rho * rho_tilde * sqrt_rho;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es2(0.5 * (sym + sym.adjoint()), Eigen::EigenvaluesOnly);

  ConcurrenceResult res;
  for (int k = 0; k < 4; ++k) res.spectrum[k] = std::max(0.0, es2.eigenvalues()(k));
  std::sort(res.spectrum.begin(), res.spectrum.end(), std::greater<>());
  const double c = std::sqrt(res.spectrum[0]) - std::sqrt(res.spectrum[1]) - std::sqrt(res.spectrum[2]) -
                   std::sqrt(res.spectrum[3]);
  res.value = std::clamp(c, 0.0, 1.0);
  return res;
}

double concurrence(const PureState& psi) {
  require_two_qubits(psi.num_sites());
  const auto& v = psi.amplitudes();
  return std::min(1.0, 2.0 * std::abs(v(0) * v(3) - v(1) * v(2)));
}

double concurrence_squared(const DensityMatrix& rho) {
  const double c = concurrence(rho).value;
  return c * c;
}

double log_negativity(const DensityMatrix& rho, const SiteSet& region, LogBase base) {
  const Operator pt = partial_transpose(rho, region);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pt, Eigen::EigenvaluesOnly);
  const double trace_norm = es.eigenvalues().cwiseAbs().sum();
  return std::max(0.0, apply_base(std::log(trace_norm), base));
}

Eigen::VectorXd schmidt_coefficients(const PureState& psi, const SiteSet& region) {
  const Eigen::MatrixXcd m = reshape_bipartite(psi, region);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues();
}

double log_negativity(const PureState& psi, const SiteSet& region, LogBase base) {
  if (!region.is_proper()) throw std::invalid_argument("log_negativity: region must be a proper subset");
  const double s = schmidt_coefficients(psi, region).sum();
  return std::max(0.0, apply_base(2.0 * std::log(s), base));
}

double subsystem_parity_variance(const DensityMatrix& rho, const SiteSet& sites) {
  if (sites.num_sites() != rho.num_sites()) throw std::invalid_argument("site set built for a different L");
  const std::uint64_t mask = sites.mask();
  double e = 0.0;
  for (Eigen::Index a = 0; a < rho.dim(); ++a) e += rho.matrix()(a, a).real() * parity_sign(a, mask);
  return std::clamp(e * e, 0.0, 1.0);
}

double subsystem_parity_variance(const PureState& psi, const SiteSet& sites) {
  if (sites.num_sites() != psi.num_sites()) throw std::invalid_argument("site set built for a different L");
  const std::uint64_t mask = sites.mask();
  double e = 0.0;
  for (Eigen::Index a = 0; a < psi.dim(); ++a) e += std::norm(psi.amplitudes()(a)) * parity_sign(a, mask);
  return std::clamp(e * e, 0.0, 1.0);
}

double subsystem_purity(const DensityMatrix& rho, const SiteSet& sites) {
  if (!sites.is_proper()) throw std::invalid_argument("subsystem_purity: sites must be a proper subset");
  return partial_trace(rho, sites).purity();
}

double subsystem_purity(const PureState& psi, const SiteSet& sites) {
  if (!sites.is_proper()) throw std::invalid_argument("subsystem_purity: sites must be a proper subset");
  const Eigen::VectorXd s = schmidt_coefficients(psi, sites);
  return s.array().square().square().sum();
}

double sigma_z_expectation(const DensityMatrix& rho, int j) {
  const int L = rho.num_sites();
  if (j < 1 || j > L) throw std::invalid_argument("site index out of range");
  const std::uint64_t m = site_mask(j, L);
  double e = 0.0;
  for (Eigen::Index a = 0; a < rho.dim(); ++a) e += rho.matrix()(a, a).real() * spin_z(a, m);
  return e;
}

double sigma_z_expectation(const PureState& psi, int j) {
  const int L = psi.num_sites();
  if (j < 1 || j > L) throw std::invalid_argument("site index out of range");
  const std::uint64_t m = site_mask(j, L);
  double e = 0.0;
  for (Eigen::Index a = 0; a < psi.dim(); ++a) e += std::norm(psi.amplitudes()(a)) * spin_z(a, m);
  return e;
}

// Observable ---------------------------------------------------------------

Observable Observable::parse(std::string_view label) {
  using K = Kind;
  if (label == "concurrence" || label == "C") return {K::Concurrence, 0};
  if (label == "concurrence2" || label == "C2") return {K::ConcurrenceSquared, 0};
  if (label == "negativity" || label == "eps" || label == "e" || label == "ε") return {K::LogNegativity, 0};
  if (label == "parity" || label == "P") return {K::ParityVariance, 0};
  if (label == "purity" || label == "mu") return {K::SubsystemPurity, 0};
  if (label.size() > 2 && label.substr(0, 2) == "sz") {
    int j = 0;
    const auto tail = label.substr(2);
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), j);
    if (ec == std::errc{} && ptr == tail.data() + tail.size() && j >= 1) return {K::SigmaZ, j};
  }
  throw std::invalid_argument("unknown observable '" + std::string(label) + "'");
}

std::string Observable::name() const {
  switch (kind) {
    case Kind::Concurrence:
      return "concurrence";
    case Kind::ConcurrenceSquared:
      return "concurrence2";
    case Kind::LogNegativity:
      return "negativity";
    case Kind::ParityVariance:
      return "parity";
    case Kind::SubsystemPurity:
      return "purity";
    case Kind::SigmaZ:
      return "sz" + std::to_string(site);
  }
  return "?";
}

void Observable::check_applicable(int L) const {
  switch (kind) {
    case Kind::Concurrence:
    case Kind::ConcurrenceSquared:
      require_two_qubits(L);
      break;
    case Kind::LogNegativity:
    case Kind::ParityVariance:
    case Kind::SubsystemPurity:
      SiteSet::left_half(L);
      break;
    case Kind::SigmaZ:
      if (site < 1 || site > L) throw std::invalid_argument("observable " + name() + " outside the chain");
      break;
  }
}

std::vector<Observable> parse_observables(std::string_view comma_list) {
  std::vector<Observable> out;
  std::size_t start = 0;
  while (start <= comma_list.size()) {
    std::size_t end = comma_list.find(',', start);
    if (end == std::string_view::npos) end = comma_list.size();
    std::string_view item = comma_list.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(Observable::parse(item));
    start = end + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty observable list");
  return out;
}

int num_sites(const TrajectoryState& state) {
  return std::visit([](const auto& s) { return s.num_sites(); }, state);
}

double evaluate(const Observable& obs, const TrajectoryState& state, LogBase base) {
  const int L = num_sites(state);
  return std::visit(
      [&](const auto& s) -> double {
        using K = Observable::Kind;
        switch (obs.kind) {
          case K::Concurrence:
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, PureState>) {
              return concurrence(s);
            } else {
              return concurrence(s).value;
            }
          case K::ConcurrenceSquared: {
            double c = 0.0;
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, PureState>) {
              c = concurrence(s);
            } else {
              c = concurrence(s).value;
            }
            return c * c;
          }
          case K::LogNegativity:
            return log_negativity(s, SiteSet::left_half(L), base);
          case K::ParityVariance:
            return subsystem_parity_variance(s, SiteSet::left_half(L));
          case K::SubsystemPurity:
            return subsystem_purity(s, SiteSet::left_half(L));
          case K::SigmaZ:
            return sigma_z_expectation(s, obs.site);
        }
        return 0.0;
      },
      state);
}

}  // namespace qzeno
