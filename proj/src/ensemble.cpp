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

#include "qzeno/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace qzeno {

namespace {

constexpr int kReductionBlock = 64;

std::int64_t steps_for(double t, double dt) { return std::llround(t / dt); }

bool use_pure_path(const ModelParams& params, const SimulationOptions& options, const TrajectoryState& initial) {
  return options.prefer_pure && options.unraveling == Unraveling::Qsd && params.eta == 1.0 &&
         std::holds_alternative<PureState>(initial);
}

Eigen::MatrixXcd as_matrix(const TrajectoryState& s) {
  if (const auto* psi = std::get_if<PureState>(&s)) return DensityMatrix::from_pure(*psi).matrix();
  return std::get<DensityMatrix>(s).matrix();
}

// Owns the evolving state of one trajectory and advances it by single steps.
class TrajectoryRunner {
 public:
  TrajectoryRunner(const ModelParams& params, const SimulationOptions& options, std::uint64_t seed,
                   const TrajectoryState& initial)
      : params_(params), options_(options), integ_(params), rng_(seed) {
    if (num_sites(initial) != params.L) throw std::invalid_argument("initial state does not match L");
    if (options.unraveling == Unraveling::Jump) options.jump.validate(params.dt);
    pure_ = use_pure_path(params, options, initial);
    if (pure_) {
      psi_ = std::get<PureState>(initial).amplitudes();
    } else {
      if (params.L > kMaxDensitySites) throw std::invalid_argument("L too large for the density-matrix path");
      rho_ = as_matrix(initial);
    }
    check_every_step_ = params.L <= options.positivity_every_step_max_L;
    uniforms_.resize(params.L);
  }

  bool pure() const { return pure_; }
  std::int64_t incidents() const { return diag_.positivity_incidents; }

  void step() {
    const NoiseIncrements inc = sample_increments(rng_, params_);
    if (pure_) {
      integ_.pure_qsd(psi_, inc);
      return;
    }
    if (options_.unraveling == Unraveling::Qsd) {
      integ_.qsd(rho_, inc, check_every_step_, &diag_);
    } else {
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      for (auto& u : uniforms_) u = uni(rng_);
      integ_.jump(rho_, options_.jump, inc, uniforms_, check_every_step_, &diag_);
    }
  }

  // State for observable evaluation. On the lazily-checked density path the
  // positivity repair happens here.
  TrajectoryState snapshot() {
    if (pure_) return PureState(params_.L, psi_);
    if (!check_every_step_) {
      PositivityReport rep;
      hermitize_normalize_inplace(rho_, {params_.positivity_tol, true}, &rep);
      diag_.record(rep);
    }
    return DensityMatrix(rho_);
  }

 private:
  ModelParams params_;
  SimulationOptions options_;
  Integrator integ_;
  Rng rng_;
  bool pure_ = false;
  bool check_every_step_ = true;
  Eigen::VectorXcd psi_;
  Eigen::MatrixXcd rho_;
  StepDiagnostics diag_;
  std::vector<double> uniforms_;
};

double mean_of(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

}  // namespace

Unraveling parse_unraveling(std::string_view label) {
  if (label == "qsd") return Unraveling::Qsd;
  if (label == "jump") return Unraveling::Jump;
  throw std::invalid_argument("unknown unraveling '" + std::string(label) + "'");
}

std::string to_string(Unraveling u) { return u == Unraveling::Qsd ? "qsd" : "jump"; }

void SamplingProtocol::validate(double dt) const {
  if (!(t_burn >= 0.0)) throw std::invalid_argument("t_burn must be >= 0");
  if (!(t_window >= 0.0)) throw std::invalid_argument("t_window must be >= 0");
  if (!(sample_interval > 0.0)) throw std::invalid_argument("sample_interval must be > 0");
  if (sample_interval < dt * (1.0 - 1e-12)) throw std::invalid_argument("sample_interval must be >= dt");
  if (n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
}

TrajectoryState make_initial_state(std::string_view label, int L) {
  if (label == "neel") {
    std::string bits;
    for (int j = 1; j <= L; ++j) bits.push_back(j % 2 == 1 ? '0' : '1');
    return PureState::from_bits(bits);
  }
  if (label.starts_with("bits:")) {
    PureState s = PureState::from_bits(label.substr(5));
    if (s.num_sites() != L) throw std::invalid_argument("initial bit string length differs from L");
    return s;
  }
  if (label == "bell" || label == "bell_i") {
    if (L != 2) throw std::invalid_argument("bell initial states need L = 2");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    v(1) = 1.0;
    v(2) = label == "bell" ? cplx{1.0, 0.0} : cplx{0.0, 1.0};
    return PureState(2, v);
  }
  if (label == "mixed") return DensityMatrix::maximally_mixed(L);
  throw std::invalid_argument("unknown initial state '" + std::string(label) + "'");
}

std::vector<ObservableSample> TrajectoryRecord::samples() const {
  std::vector<ObservableSample> out;
  out.reserve(times.size() * observable_names.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t o = 0; o < observable_names.size(); ++o) {
      out.push_back({observable_names[o], values[o][k], times[k], trajectory_id});
    }
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trajectory_index) {
  std::uint64_t z = master_seed + (trajectory_index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

double default_jump_dt(double gamma, double gamma_jump) {
  double dt = default_dt(gamma, 0.0);
  if (gamma_jump > 0.0) dt = std::min(dt, 0.05 / gamma_jump);
  return dt;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

TrajectoryRecord run_trajectory(const ModelParams& params, const SimulationOptions& options,
                                const SamplingProtocol& protocol, std::uint64_t seed, const TrajectoryState& initial,
                                const std::vector<Observable>& observables, std::int64_t trajectory_id) {
  params.validate();
  protocol.validate(params.dt);
  if (options.unraveling == Unraveling::Jump || !use_pure_path(params, options, initial)) {
    if (params.L > kMaxDensitySites) throw std::invalid_argument("L too large for the density-matrix path");
  }
  for (const auto& o : observables) o.check_applicable(params.L);

  TrajectoryRecord rec;
  rec.trajectory_id = trajectory_id;
  rec.seed = seed;
  for (const auto& o : observables) rec.observable_names.push_back(o.name());
  rec.values.resize(observables.size());

  std::vector<std::int64_t> sample_steps;
  const auto n_samples = static_cast<std::int64_t>(std::floor(protocol.t_window / protocol.sample_interval + 1e-9)) + 1;
  for (std::int64_t k = 0; k < n_samples; ++k) {
    sample_steps.push_back(steps_for(protocol.t_burn + k * protocol.sample_interval, params.dt));
  }
  if (!protocol.time_average) sample_steps.erase(sample_steps.begin(), sample_steps.end() - 1);
  const std::int64_t total = sample_steps.back();

  TrajectoryRunner runner(params, options, seed, initial);
  rec.used_pure_path = runner.pure();
  try {
    std::size_t next = 0;
    for (std::int64_t n = 0;; ++n) {
      while (next < sample_steps.size() && sample_steps[next] == n) {
        const TrajectoryState s = runner.snapshot();
        rec.times.push_back(static_cast<double>(n) * params.dt);
        for (std::size_t o = 0; o < observables.size(); ++o) {
          rec.values[o].push_back(evaluate(observables[o], s, options.negativity_base));
        }
        ++next;
      }
      if (n >= total) break;
      runner.step();
    }
  } catch (const NumericalError& e) {
    rec.aborted = true;
    rec.diagnostic = e.what();
  }
  rec.positivity_incidents = runner.incidents();
  return rec;
}

TrajectoryState evolve_trajectory(const ModelParams& params, const SimulationOptions& options, double t_final,
                                  std::uint64_t seed, const TrajectoryState& initial,
                                  std::int64_t* positivity_incidents) {
  params.validate();
  TrajectoryRunner runner(params, options, seed, initial);
  const std::int64_t total = steps_for(t_final, params.dt);
  for (std::int64_t n = 0; n < total; ++n) runner.step();
  TrajectoryState s = runner.snapshot();
  if (positivity_incidents) *positivity_incidents = runner.incidents();
  return s;
}

std::vector<EnsembleStats> steady_state_average(const ModelParams& params, const SimulationOptions& options,
                                                const SamplingProtocol& protocol, std::uint64_t master_seed,
                                                const std::vector<Observable>& observables,
                                                const TrajectoryState& initial) {
  if (observables.empty()) throw std::invalid_argument("no observables requested");
  const int n = protocol.n_traj;
  // Per trajectory: time-averaged value of each observable.
  std::vector<std::vector<double>> traj_means(n, std::vector<double>(observables.size(), 0.0));
  std::vector<char> aborted(n, 0);
  std::vector<std::int64_t> incidents(n, 0);
  std::vector<std::string> diagnostics(n);

  parallel_for(n, options.threads, [&](int k) {
    const TrajectoryRecord rec =
        run_trajectory(params, options, protocol, derive_seed(master_seed, static_cast<std::uint64_t>(k)), initial,
                       observables, k);
    incidents[k] = rec.positivity_incidents;
    if (rec.aborted) {
      aborted[k] = 1;
      diagnostics[k] = rec.diagnostic;
      return;
    }
    for (std::size_t o = 0; o < observables.size(); ++o) traj_means[k][o] = mean_of(rec.values[o]);
  });

  std::int64_t n_aborted = 0, n_incidents = 0;
  std::string first_diag;
  for (int k = 0; k < n; ++k) {
    n_incidents += incidents[k];
    if (aborted[k]) {
      if (first_diag.empty()) first_diag = diagnostics[k];
      ++n_aborted;
    }
  }
  if (static_cast<double>(n_aborted) > 0.01 * n) {
    throw NumericalError(std::to_string(n_aborted) + " of " + std::to_string(n) +
                         " trajectories aborted; first failure: " + first_diag);
  }
  const std::int64_t n_ok = n - n_aborted;
  if (n_ok == 0) throw NumericalError("all trajectories aborted: " + first_diag);

  std::vector<EnsembleStats> out;
  for (std::size_t o = 0; o < observables.size(); ++o) {
    CompensatedSum s;
    for (int k = 0; k < n; ++k) {
      if (!aborted[k]) s.add(traj_means[k][o]);
    }
    const double mean = s.value() / static_cast<double>(n_ok);
    CompensatedSum sq;
    for (int k = 0; k < n; ++k) {
      if (!aborted[k]) sq.add((traj_means[k][o] - mean) * (traj_means[k][o] - mean));
    }
    const double var = n_ok > 1 ? sq.value() / static_cast<double>(n_ok - 1) : 0.0;
    EnsembleStats st;
    st.observable = observables[o].name();
    st.mean = mean;
    st.std_error = std::sqrt(var / static_cast<double>(n_ok));
    st.n_traj = n_ok;
    st.n_aborted = n_aborted;
    st.positivity_incidents = n_incidents;
    st.master_seed = master_seed;
    st.params = params;
    st.protocol = protocol;
    out.push_back(std::move(st));
  }
  return out;
}

DensityMatrix mean_density_matrix(const ModelParams& params, const SimulationOptions& options, int n_traj,
                                  double t_final, std::uint64_t master_seed, const TrajectoryState& initial) {
  if (n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
  if (params.L > kMaxDensitySites) throw std::invalid_argument("L too large for a density matrix");
  const Eigen::Index d = Eigen::Index{1} << params.L;
  // Fixed-size blocks keep the reduction order independent of the thread count.
  const int n_blocks = (n_traj + kReductionBlock - 1) / kReductionBlock;
  std::vector<Eigen::MatrixXcd> partial(n_blocks, Eigen::MatrixXcd::Zero(d, d));
  parallel_for(n_blocks, options.threads, [&](int blk) {
    const int lo = blk * kReductionBlock;
    const int hi = std::min(n_traj, lo + kReductionBlock);
    for (int k = lo; k < hi; ++k) {
      const TrajectoryState s =
          evolve_trajectory(params, options, t_final, derive_seed(master_seed, static_cast<std::uint64_t>(k)), initial);
      partial[blk] += as_matrix(s);
    }
  });
  Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& p : partial) total += p;
  return DensityMatrix(total / static_cast<double>(n_traj));
}

std::vector<BurnInCheck> burn_in_self_check(const ModelParams& params, const SimulationOptions& options,
                                            const SamplingProtocol& protocol, std::uint64_t master_seed,
                                            const std::vector<Observable>& observables,
                                            const TrajectoryState& initial) {
  SamplingProtocol doubled = protocol;
  doubled.t_burn *= 2.0;
  const auto a = steady_state_average(params, options, protocol, master_seed, observables, initial);
  const auto b = steady_state_average(params, options, doubled, master_seed, observables, initial);
  std::vector<BurnInCheck> out;
  for (std::size_t o = 0; o < a.size(); ++o) {
    BurnInCheck c;
    c.observable = a[o].observable;
    c.shift = b[o].mean - a[o].mean;
    c.combined_error = std::hypot(a[o].std_error, b[o].std_error);
    c.passed = std::abs(c.shift) < c.combined_error || c.shift == 0.0;
    out.push_back(c);
  }
  return out;
}

}  // namespace qzeno
