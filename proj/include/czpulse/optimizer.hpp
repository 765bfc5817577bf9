// Copyright 2026 The czpulse Authors
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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "czpulse/device.hpp"
#include "czpulse/nelder_mead.hpp"
#include "czpulse/propagation.hpp"
#include "czpulse/pulse.hpp"

namespace czpulse {

/// Which two-excitation state the drive frequency is referenced to.
enum class CzTarget { to20, to02 };

inline BareIndex target_state(CzTarget t) { return t == CzTarget::to20 ? kBare20 : kBare02; }

/// Initial pulse for a CZ optimization: the shaped lambda ratio, carrier at
/// the static |11> -> target transition frequency, mean amplitude from one
/// of the presets. Remaining fields (duration, drive target, coupling) are
/// taken from `base`.
inline DrivePulse initial_guess(const EigenSystem& es, CzTarget target, double amp_preset,
                                const DrivePulse& base = {}) {
  DrivePulse p = base;
  p.lambda = kShapedLambdaInit;
  p.mean_amp = amp_preset;
  p.carrier_freq = std::abs(transition_frequency(es, kBare11, target_state(target)));
  return p;
}

/// Ordered subset of free optimization parameters. lambda2 stays pinned to
/// 1 (the envelope shape is defined by ratios).
struct FreeParams {
  bool lambda1 = true;
  bool lambda3 = true;
  bool lambda4 = true;
  bool carrier_offset = true;
  bool mean_amp = false;
  bool duration = false;

  int count() const {
    return int(lambda1) + int(lambda3) + int(lambda4) + int(carrier_offset) + int(mean_amp) +
           int(duration);
  }
};

struct OptimizationProblem {
  DeviceParams device;
  DrivePulse base_pulse;
  FreeParams free_params;
  int budget = 200;  ///< max Nelder-Mead iterations
  /// Integration step; 0 resolves it once at the base pulse by halving
  /// until endpoint populations are stable, then reuses it for every
  /// objective evaluation.
  double dt = 0.0;

  void validate() const {
    if (budget < 1) throw std::invalid_argument("OptimizationProblem: budget must be >= 1");
    if (free_params.count() < 1)
      throw std::invalid_argument("OptimizationProblem: no free parameters");
  }
};

namespace detail {

inline DrivePulse apply_free_params(const DrivePulse& base, const FreeParams& fp,
                                    const std::vector<double>& x) {
  DrivePulse p = base;
  std::size_t i = 0;
  if (fp.lambda1) p.lambda[0] = x[i++];
  if (fp.lambda3) p.lambda[2] = x[i++];
  if (fp.lambda4) p.lambda[3] = x[i++];
  if (fp.carrier_offset) p.carrier_freq = base.carrier_freq + x[i++];
  if (fp.mean_amp) p.mean_amp = x[i++];
  if (fp.duration) p.duration = x[i++];
  return p;
}

inline std::vector<double> initial_point(const DrivePulse& base, const FreeParams& fp) {
  std::vector<double> x;
  if (fp.lambda1) x.push_back(base.lambda[0]);
  if (fp.lambda3) x.push_back(base.lambda[2]);
  if (fp.lambda4) x.push_back(base.lambda[3]);
  if (fp.carrier_offset) x.push_back(0.0);
  if (fp.mean_amp) x.push_back(base.mean_amp);
  if (fp.duration) x.push_back(base.duration);
  return x;
}

// Simplex displacement per coordinate: max(0.05|x|, 0.005) for lambda,
// 0.002 GHz for the carrier offset, and analogous scales for the optional
// amplitude/duration coordinates.
inline std::vector<double> initial_steps(const DrivePulse& base, const FreeParams& fp) {
  std::vector<double> s;
  auto lam_step = [](double v) { return std::max(0.05 * std::abs(v), 0.005); };
  if (fp.lambda1) s.push_back(lam_step(base.lambda[0]));
  if (fp.lambda3) s.push_back(lam_step(base.lambda[2]));
  if (fp.lambda4) s.push_back(lam_step(base.lambda[3]));
  if (fp.carrier_offset) s.push_back(0.002);
  if (fp.mean_amp) s.push_back(std::max(0.05 * std::abs(base.mean_amp), 0.002));
  if (fp.duration) s.push_back(std::max(0.05 * base.duration, 1.0));
  return s;
}

/// Resolves an integration step for a pulse by the same halving rule
/// propagate uses, but evolving only the computational columns.
inline double resolve_dt(const EigenSystem& es, const Eigen::MatrixXcd& h,
                         const DrivePulse& pulse) {
  const double w_max = std::max(std::abs(pulse.carrier_freq), max_dressed_mode_freq(es));
  double dt = 1.0 / (40.0 * w_max);
  const Eigen::MatrixXd v = build_drive_operator(es.levels(), pulse.target, pulse.coupling);
  const auto comp = computational_labels(es);
  Eigen::MatrixXcd start(es.dim(), 4);
  for (int j = 0; j < 4; ++j) start.col(j) = es.vectors().col(comp[j]);
  auto coef = [&pulse](double t) { return drive_field(pulse, t); };
  auto end_pops = [&](double trial) {
    const Eigen::MatrixXcd fin =
        evolve_piecewise_constant(h, v, coef, pulse.duration, trial, start);
    return Eigen::MatrixXd((es.vectors().adjoint() * fin).cwiseAbs2());
  };
  Eigen::MatrixXd coarse = end_pops(dt);
  for (int attempt = 0; attempt < 7; ++attempt) {
    const Eigen::MatrixXd fine = end_pops(dt / 2.0);
    if ((coarse - fine).cwiseAbs().maxCoeff() < 1e-6) return dt;
    dt /= 2.0;
    coarse = fine;
  }
  throw std::runtime_error("resolve_dt: step-size self-convergence not reached");
}

}  // namespace detail

/// Fast CZ-error objective: evolves only the four computational
/// eigenvectors at a fixed dt and scores 1 - gate fidelity. The projected
/// block reuses the same stepper as propagate, so evaluations are exactly
/// as unitary; leakage shows up as column-norm deficit, which the fidelity
/// metric penalizes.
class CzErrorObjective {
 public:
  CzErrorObjective(const DeviceParams& device, const DrivePulse& base, const FreeParams& fp,
                   double dt)
      : base_(base),
        free_params_(fp),
        dt_(dt),
        h_(build_static_hamiltonian(device)),
        es_(diagonalize_and_label(h_)),
        v_(build_drive_operator(device.levels, base.target, base.coupling)) {
    const auto comp = detail::computational_labels(es_);
    comp_vecs_.resize(es_.dim(), 4);
    for (int j = 0; j < 4; ++j) comp_vecs_.col(j) = es_.vectors().col(comp[j]);
    if (dt_ <= 0.0) dt_ = detail::resolve_dt(es_, h_, base_);
  }

  double dt() const { return dt_; }
  const EigenSystem& eigensystem() const { return es_; }
  const Eigen::MatrixXcd& hamiltonian() const { return h_; }

  double error_of(const DrivePulse& pulse) const {
    const Eigen::MatrixXcd fin = evolve_piecewise_constant(
        h_, v_, [&pulse](double t) { return drive_field(pulse, t); }, pulse.duration, dt_,
        comp_vecs_);
    Eigen::Matrix4cd u4;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) u4(i, j) = comp_vecs_.col(i).dot(fin.col(j));
    return 1.0 - gate_fidelity(u4);
  }

  double operator()(const std::vector<double>& x) const {
    return error_of(detail::apply_free_params(base_, free_params_, x));
  }

 private:
  DrivePulse base_;
  FreeParams free_params_;
  double dt_;
  Eigen::MatrixXcd h_;
  EigenSystem es_;
  Eigen::MatrixXd v_;
  Eigen::MatrixXcd comp_vecs_;
};

struct OptimizeOutcome {
  DrivePulse initial_pulse;
  DrivePulse best_pulse;
  double initial_error = 1.0;
  GateResult result;               ///< full propagation of the best pulse
  std::vector<double> error_trace; ///< best-so-far CZ error per iteration
  int iterations = 0;
  long evaluations = 0;
  double dt = 0.0;
};

/// Nelder-Mead over the problem's free parameters from the given start.
/// Deterministic: identical problems produce identical traces.
inline OptimizeOutcome optimize_pulse(const OptimizationProblem& problem) {
  problem.validate();
  problem.base_pulse.validate();
  CzErrorObjective objective(problem.device, problem.base_pulse, problem.free_params, problem.dt);

  NelderMeadOptions nm;
  nm.max_iterations = problem.budget;
  const auto x0 = detail::initial_point(problem.base_pulse, problem.free_params);
  const auto steps = detail::initial_steps(problem.base_pulse, problem.free_params);
  const double f0 = objective(x0);
  if (!std::isfinite(f0))
    throw std::invalid_argument("optimize_pulse: objective not finite at the start point");

  const NelderMeadResult r = nelder_mead(objective, x0, steps, nm);

  OptimizeOutcome out;
  out.initial_pulse = problem.base_pulse;
  out.initial_error = f0;
  out.best_pulse = detail::apply_free_params(problem.base_pulse, problem.free_params,
                                             r.best_point);
  out.error_trace = r.trace;
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  out.dt = objective.dt();
  PropagationOptions full;
  full.dt = objective.dt();
  full.trace_stride = -1;
  out.result = project_computational(
      propagate(objective.eigensystem(), objective.hamiltonian(), out.best_pulse, full).u_full,
      objective.eigensystem());
  return out;
}

/// Composition of initial_guess and optimize_pulse for one device.
inline OptimizeOutcome optimize_cz(const DeviceParams& device, CzTarget target,
                                   double amp_preset, int budget,
                                   const DrivePulse& pulse_defaults = {},
                                   const FreeParams& fp = {}, double dt = 0.0) {
  const EigenSystem es = diagonalize_device(device);
  OptimizationProblem problem;
  problem.device = device;
  problem.base_pulse = initial_guess(es, target, amp_preset, pulse_defaults);
  problem.free_params = fp;
  problem.budget = budget;
  problem.dt = dt;
  return optimize_pulse(problem);
}

/// Mean of the k smallest errors.
inline double aggregate_best_k(std::vector<double> errors, int k) {
  if (k < 1 || k > int(errors.size()))
    throw std::invalid_argument("aggregate_best_k: need 1 <= k <= number of points");
  std::nth_element(errors.begin(), errors.begin() + k - 1, errors.end());
  // nth_element partitions; sum the first k
  return std::accumulate(errors.begin(), errors.begin() + k, 0.0) / double(k);
}

/// Unwanted resonances of the driven gate, located as roots in the
/// detuning: the drive hitting the |01>/|10> splitting, and the two-photon
/// condition on the |11> -> |02> gap.
enum class CollisionKind { swap_01_10, leak_11_02 };

/// Root of the collision condition over the dressed-detuning interval
/// [lo, hi], by bisection on a device family parameterized by detuning.
/// Throws if the condition does not change sign across the interval.
inline double find_collision_delta(const DeviceParams& base, CzTarget target,
                                   CollisionKind kind, double lo, double hi,
                                   double tol = 1e-9) {
  auto mismatch = [&](double delta) {
    const DeviceParams dev = device_for_detune(base, delta);
    const EigenSystem es = diagonalize_device(dev);
    const double wd = std::abs(transition_frequency(es, kBare11, target_state(target)));
    if (kind == CollisionKind::swap_01_10)
      return wd - (es.energy(kBare10) - es.energy(kBare01));
    return 2.0 * wd - (es.energy(kBare11) - es.energy(kBare02));
  };
  double flo = mismatch(lo), fhi = mismatch(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::runtime_error("find_collision_delta: condition does not change sign on the interval");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = mismatch(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct ScanSettings {
  double delta_lo = 0.05;   ///< GHz
  double delta_hi = 0.15;   ///< GHz
  int n = 100;
  int k = 50;
  int budget = 200;
  double amp_preset = 0.05;
  CzTarget target = CzTarget::to20;
  DrivePulse pulse_defaults;
  FreeParams free_params;
  int jobs = 1;
  double collision_window = 0.003;  ///< flag points within this of a located collision (GHz)
};

struct ScanPoint {
  double delta = 0.0;
  double best_error = 1.0;
  int iterations = 0;
  long evaluations = 0;
  bool collision_flag = false;
  std::vector<double> error_trace;
};

struct ScanResult {
  std::vector<ScanPoint> points;  ///< ascending by detuning
  double aggregate = 0.0;         ///< mean error over the best k
  int k = 0;
  std::vector<double> collision_deltas;
};

/// Runs one optimization per detuning over a uniform grid and aggregates
/// the best k errors. Per-point work is independent; `jobs` threads pull
/// indices from a shared counter and write results by index, so the output
/// is deterministic regardless of scheduling.
inline ScanResult delta_scan(const DeviceParams& base, const ScanSettings& s) {
  if (s.n < 1) throw std::invalid_argument("delta_scan: need n >= 1");
  if (s.k < 1 || s.k > s.n) throw std::invalid_argument("delta_scan: need 1 <= k <= n");

  ScanResult out;
  out.k = s.k;
  out.points.resize(s.n);
  for (CollisionKind kind : {CollisionKind::swap_01_10, CollisionKind::leak_11_02}) {
    try {
      out.collision_deltas.push_back(
          find_collision_delta(base, s.target, kind, s.delta_lo, s.delta_hi));
    } catch (const std::runtime_error&) {
      // no such resonance inside the scan window
    }
  }

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < s.n; i = next.fetch_add(1)) {
      const double delta =
          (s.n == 1) ? s.delta_lo
                     : s.delta_lo + (s.delta_hi - s.delta_lo) * double(i) / double(s.n - 1);
      ScanPoint& pt = out.points[i];
      pt.delta = delta;
      const DeviceParams dev = device_for_detune(base, delta);
      const OptimizeOutcome opt =
          optimize_cz(dev, s.target, s.amp_preset, s.budget, s.pulse_defaults, s.free_params);
      pt.best_error = opt.result.error();
      pt.iterations = opt.iterations;
      pt.evaluations = opt.evaluations;
      pt.error_trace = opt.error_trace;
      for (double c : out.collision_deltas)
        pt.collision_flag = pt.collision_flag || std::abs(delta - c) < s.collision_window;
    }
  };
  const int jobs = std::max(1, s.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> errors;
  errors.reserve(s.n);
  for (const auto& pt : out.points) errors.push_back(pt.best_error);
  out.aggregate = aggregate_best_k(errors, s.k);
  return out;
}

}  // namespace czpulse
