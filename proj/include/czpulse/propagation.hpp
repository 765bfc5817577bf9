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

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "czpulse/device.hpp"
#include "czpulse/nelder_mead.hpp"
#include "czpulse/pulse.hpp"

namespace czpulse {

/// Drive operator on the chain for a given target and coupling kind.
/// `frequency` coupling modulates the target mode frequency (number
/// operator); `charge` coupling is transverse (a + adag).
inline Eigen::MatrixXd build_drive_operator(int levels, DriveTarget target,
                                            DriveCoupling coupling) {
  const Eigen::MatrixXd a = detail::lowering_op(levels);
  const Eigen::MatrixXd single =
      (coupling == DriveCoupling::frequency)
          ? Eigen::MatrixXd(a.transpose() * a)
          : Eigen::MatrixXd(a + a.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(levels * levels * levels, levels * levels * levels);
  if (target == DriveTarget::qubit1 || target == DriveTarget::both)
    v += detail::embed_mode_op(single, 0, levels);
  if (target == DriveTarget::qubit2 || target == DriveTarget::both)
    v += detail::embed_mode_op(single, 2, levels);
  return v;
}

/// Evolves state columns under H(t) = h + coef(t) * v with a
/// piecewise-constant Hamiltonian per step and the exact matrix
/// exponential of each step (midpoint sampling). Unconditionally unitary
/// up to roundoff. `sample`, when set, is invoked with (step index, time
/// after step, current columns) every `sample_stride` steps and at the
/// final step.
///
/// When h and v are both real (the chain Hamiltonian and both drive
/// operators are), the per-step eigensolve runs in real arithmetic.
inline Eigen::MatrixXcd evolve_piecewise_constant(
    const Eigen::MatrixXcd& h, const Eigen::MatrixXd& v,
    const std::function<double(double)>& coef, double total_time, double dt,
    Eigen::MatrixXcd psi,
    const std::function<void(int, double, const Eigen::MatrixXcd&)>& sample = {},
    int sample_stride = 1) {
  if (!(total_time > 0.0)) throw std::invalid_argument("evolve: total_time must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
  if (h.rows() != h.cols() || v.rows() != v.cols() || h.rows() != v.rows() ||
      psi.rows() != h.rows())
    throw std::invalid_argument("evolve: dimension mismatch");
  if (sample_stride < 1) sample_stride = 1;

  const int n_steps = int(std::ceil(total_time / dt - 1e-12));
  const double step = total_time / n_steps;
  const double two_pi = 2.0 * std::numbers::pi;
  auto want_sample = [&](int k) {
    return sample && ((k + 1) % sample_stride == 0 || k + 1 == n_steps);
  };

  const bool real_path = h.imag().cwiseAbs().maxCoeff() < 1e-14;
  if (real_path) {
    const Eigen::MatrixXd hr = h.real();
    Eigen::MatrixXd pre = psi.real(), pim = psi.imag();
    Eigen::MatrixXd hwork(hr.rows(), hr.cols()), tre, tim;
    Eigen::VectorXd cs(hr.rows()), sn(hr.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    for (int k = 0; k < n_steps; ++k) {
      const double f = coef((k + 0.5) * step);
      hwork = hr + f * v;
      es.compute(hwork);
      const Eigen::MatrixXd& w = es.eigenvectors();
      const Eigen::VectorXd& e = es.eigenvalues();
      for (int i = 0; i < e.size(); ++i) {
        const double th = -two_pi * e[i] * step;
        cs[i] = std::cos(th);
        sn[i] = std::sin(th);
      }
      tre.noalias() = w.transpose() * pre;
      tim.noalias() = w.transpose() * pim;
      // rotate each eigencomponent by exp(i*theta)
      Eigen::MatrixXd rre = cs.asDiagonal() * tre - sn.asDiagonal() * tim;
      Eigen::MatrixXd rim = cs.asDiagonal() * tim + sn.asDiagonal() * tre;
      pre.noalias() = w * rre;
      pim.noalias() = w * rim;
      if (want_sample(k)) {
        psi.real() = pre;
        psi.imag() = pim;
        sample(k, (k + 1) * step, psi);
      }
    }
    psi.real() = pre;
    psi.imag() = pim;
    return psi;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  Eigen::MatrixXcd hwork(h.rows(), h.cols());
  const Eigen::MatrixXcd vc = v.cast<std::complex<double>>();
  for (int k = 0; k < n_steps; ++k) {
    const double f = coef((k + 0.5) * step);
    hwork = h + f * vc;
    es.compute(hwork);
    const Eigen::MatrixXcd& w = es.eigenvectors();
    Eigen::VectorXcd ph(w.rows());
    for (int i = 0; i < ph.size(); ++i)
      ph[i] = std::polar(1.0, -two_pi * es.eigenvalues()[i] * step);
    psi = w * (ph.asDiagonal() * (w.adjoint() * psi));
    if (want_sample(k)) sample(k, (k + 1) * step, psi);
  }
  return psi;
}

struct PropagationOptions {
  /// Step size (ns). 0 selects 1/(40 * max(carrier, dressed mode freqs)).
  /// Must satisfy dt <= 1/(20 * max(carrier, dressed mode freqs)).
  double dt = 0.0;
  /// Steps between trace samples; 0 picks a stride giving ~1000 samples,
  /// -1 disables trace collection.
  int trace_stride = 0;
  double unitarity_tol = 1e-8;
  /// Halve dt until the endpoint populations move by less than 1e-6,
  /// starting from the default (or given) dt.
  bool converge_dt = false;
};

/// Time-resolved quantities in the static eigenbasis. Populations are
/// grouped per initial computational label into eight channels.
struct EvolutionTrace {
  // channel order within each row
  static constexpr std::array<const char*, 8> kChannels{"p00", "p01", "p10", "p11",
                                                        "p02", "p20", "coupler", "other"};
  std::vector<double> times;
  /// populations[i][s] = channel probabilities at sample s for initial
  /// computational state i (00, 01, 10, 11).
  std::array<std::vector<std::array<double, 8>>, 4> populations;
  /// Probability in any eigenstate with coupler excitation >= 1, for the
  /// initial state |11> (also available per state via populations).
  std::vector<double> coupler_leakage;
  /// Conditional phase of the projected 4x4 block; NaN where a diagonal
  /// entry has magnitude below 1e-6.
  std::vector<double> conditional_phase;
};

struct PropagationResult {
  Eigen::MatrixXcd u_full;  ///< full-space unitary at T, bare product basis
  EvolutionTrace trace;
  double dt = 0.0;
  int steps = 0;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double x) {
  double a = std::remainder(x, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

/// Conditional phase arg(u00) + arg(u11) - arg(u01) - arg(u10) of a
/// projected computational block, wrapped to (-pi, pi]. Throws when a
/// diagonal entry has fully depleted magnitude.
inline double conditional_phase(const Eigen::Matrix4cd& u4) {
  for (int i = 0; i < 4; ++i)
    if (std::abs(u4(i, i)) <= 1e-6)
      throw std::domain_error("conditional_phase: diagonal entry " + std::to_string(i) +
                              " has vanished (population fully transferred away)");
  return wrap_angle(std::arg(u4(0, 0)) + std::arg(u4(3, 3)) - std::arg(u4(1, 1)) -
                    std::arg(u4(2, 2)));
}

/// Two-qubit average gate fidelity against CZ, maximized over the virtual-Z
/// phases phi1, phi2:
///   F = [ max |Tr(CZ' Z(phi1) x Z(phi2) u4)|^2 + Tr(u4' u4) ] / 20.
/// The maximization runs a coarse 64x64 phase grid followed by local
/// simplex refinement to 1e-10.
inline double gate_fidelity(const Eigen::Matrix4cd& u4) {
  const std::complex<double> d0 = u4(0, 0), d1 = u4(1, 1), d2 = u4(2, 2), d3 = u4(3, 3);
  auto tr_sq = [&](double p1, double p2) {
    const std::complex<double> z1 = std::polar(1.0, p1), z2 = std::polar(1.0, p2);
    return std::norm(d0 + z2 * d1 + z1 * d2 - z1 * z2 * d3);
  };
  const double two_pi = 2.0 * std::numbers::pi;
  double best = -1.0, b1 = 0.0, b2 = 0.0;
  constexpr int kGrid = 64;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double v = tr_sq(i * two_pi / kGrid, j * two_pi / kGrid);
      if (v > best) {
        best = v;
        b1 = i * two_pi / kGrid;
        b2 = j * two_pi / kGrid;
      }
    }
  }
  NelderMeadOptions nm;
  nm.max_iterations = 400;
  nm.simplex_tolerance = 1e-12;
  nm.penalty_value = 0.0;
  const auto refined = nelder_mead(
      [&](const std::vector<double>& x) { return -tr_sq(x[0], x[1]); }, {b1, b2},
      {two_pi / kGrid, two_pi / kGrid}, nm);
  best = std::max(best, -refined.best_value);
  const double norm_term = u4.squaredNorm();
  return (best + norm_term) / 20.0;
}

struct LeakageBreakdown {
  double to02 = 0.0;
  double to20 = 0.0;
  double coupler = 0.0;  ///< any eigenstate with coupler excitation >= 1
  double other = 0.0;
  double total() const { return to02 + to20 + coupler + other; }
};

struct GateResult {
  Eigen::Matrix4cd u_projected;
  double fidelity = 0.0;
  /// NaN when a diagonal entry of the projected block has vanished.
  double cond_phase = std::numeric_limits<double>::quiet_NaN();
  /// Out-of-subspace probability per input state (00, 01, 10, 11).
  std::array<LeakageBreakdown, 4> leakage{};

  double error() const { return 1.0 - fidelity; }
  double total_leakage() const {
    double t = 0.0;
    for (const auto& l : leakage) t = std::max(t, l.total());
    return t;
  }
};

namespace detail {

/// Channel index per eigenstate: 0..3 the computational labels,
/// 4 = |02>-like, 5 = |20>-like, 6 = coupler-excited, 7 = other.
inline std::vector<int> eigen_channels(const EigenSystem& es, const std::array<int, 4>& comp) {
  std::vector<int> ch(es.dim(), 7);
  for (int k = 0; k < es.dim(); ++k) {
    const BareIndex b = es.dominant_bare(k);
    if (b == kBare02)
      ch[k] = 4;
    else if (b == kBare20)
      ch[k] = 5;
    else if (b.nc >= 1)
      ch[k] = 6;
  }
  for (int i = 0; i < 4; ++i) ch[comp[i]] = i;
  return ch;
}

inline std::array<int, 4> computational_labels(const EigenSystem& es) {
  return {es.label_checked(kBare00), es.label_checked(kBare01), es.label_checked(kBare10),
          es.label_checked(kBare11)};
}

}  // namespace detail

/// Projects a full-space unitary onto the labeled computational subspace
/// and accounts for every column's leakage by channel. Requires all four
/// computational labels to be unambiguous.
inline GateResult project_computational(const Eigen::MatrixXcd& u_full, const EigenSystem& es) {
  if (u_full.rows() != es.dim() || u_full.cols() != es.dim())
    throw std::invalid_argument("project_computational: dimension mismatch");
  const auto comp = detail::computational_labels(es);
  const auto channels = detail::eigen_channels(es, comp);

  // amplitudes of U applied to the computational eigenvectors, expressed
  // in the eigenbasis
  Eigen::MatrixXcd cols(es.dim(), 4);
  for (int j = 0; j < 4; ++j) cols.col(j) = u_full * es.vectors().col(comp[j]);
  const Eigen::MatrixXcd amps = es.vectors().adjoint() * cols;

  GateResult out;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) out.u_projected(i, j) = amps(comp[i], j);
    LeakageBreakdown& lb = out.leakage[j];
    for (int k = 0; k < es.dim(); ++k) {
      const int ch = channels[k];
      if (ch < 4) continue;
      const double p = std::norm(amps(k, j));
      if (ch == 4)
        lb.to02 += p;
      else if (ch == 5)
        lb.to20 += p;
      else if (ch == 6)
        lb.coupler += p;
      else
        lb.other += p;
    }
  }
  out.fidelity = gate_fidelity(out.u_projected);
  bool diag_ok = true;
  for (int i = 0; i < 4; ++i) diag_ok = diag_ok && std::abs(out.u_projected(i, i)) > 1e-6;
  if (diag_ok) out.cond_phase = conditional_phase(out.u_projected);
  return out;
}

namespace detail {

inline double max_dressed_mode_freq(const EigenSystem& es) {
  const double e0 = es.energy(kBare00);
  double m = 0.0;
  for (const BareIndex b : {kBare10, kBare01, BareIndex{0, 1, 0}})
    m = std::max(m, std::abs(es.energy(b) - e0));
  return m;
}

inline void check_unitary(const Eigen::MatrixXcd& u, double tol, double dt) {
  const double dev =
      (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  if (dev > tol)
    throw std::runtime_error("propagate: unitarity drift " + std::to_string(dev) +
                             " exceeds tolerance (dt = " + std::to_string(dt) +
                             " ns too coarse)");
}

}  // namespace detail

/// Integrates the driven chain over the pulse duration and reports the
/// full-space unitary plus an eigenbasis evolution trace. dt defaults to
/// 1/(40 * max(carrier, dressed mode frequencies)); the lab-frame
/// precondition dt <= 1/(20 * same) is enforced.
inline PropagationResult propagate(const EigenSystem& es, const Eigen::MatrixXcd& h_static,
                                   const DrivePulse& pulse,
                                   const PropagationOptions& opt = {}) {
  pulse.validate();
  if (h_static.rows() != es.dim())
    throw std::invalid_argument("propagate: Hamiltonian does not match eigensystem dimension");

  const double w_max = std::max(std::abs(pulse.carrier_freq), detail::max_dressed_mode_freq(es));
  const double dt_limit = 1.0 / (20.0 * w_max);
  double dt = (opt.dt > 0.0) ? opt.dt : 1.0 / (40.0 * w_max);
  if (dt > dt_limit + 1e-15)
    throw std::invalid_argument("propagate: dt exceeds the lab-frame bound 1/(20*max frequency)");

  const Eigen::MatrixXd v = build_drive_operator(es.levels(), pulse.target, pulse.coupling);
  const auto comp = detail::computational_labels(es);
  const auto channels = detail::eigen_channels(es, comp);
  auto coef = [&pulse](double t) { return drive_field(pulse, t); };

  if (opt.converge_dt) {
    // Compare endpoint populations of the four computational columns at dt
    // and dt/2, halving until stable.
    Eigen::MatrixXcd start(es.dim(), 4);
    for (int j = 0; j < 4; ++j) start.col(j) = es.vectors().col(comp[j]);
    auto end_pops = [&](double trial_dt) {
      const Eigen::MatrixXcd fin = evolve_piecewise_constant(h_static, v, coef, pulse.duration,
                                                             trial_dt, start);
      return Eigen::MatrixXd((es.vectors().adjoint() * fin).cwiseAbs2());
    };
    Eigen::MatrixXd coarse = end_pops(dt);
    bool converged = false;
    for (int attempt = 0; attempt < 7; ++attempt) {
      const Eigen::MatrixXd fine = end_pops(dt / 2.0);
      if ((coarse - fine).cwiseAbs().maxCoeff() < 1e-6) {
        converged = true;
        break;
      }
      dt /= 2.0;
      coarse = fine;
    }
    if (!converged)
      throw std::runtime_error("propagate: step-size self-convergence not reached; "
                               "the drive is too fast for the configured dt range");
  }

  const int n_steps = int(std::ceil(pulse.duration / dt - 1e-12));
  int stride = opt.trace_stride;
  if (stride == 0) stride = std::max(1, n_steps / 1000);
  const bool want_trace = stride > 0;

  PropagationResult out;
  out.dt = pulse.duration / n_steps;
  out.steps = n_steps;

  EvolutionTrace& tr = out.trace;
  Eigen::MatrixXcd comp_vecs(es.dim(), 4);
  for (int j = 0; j < 4; ++j) comp_vecs.col(j) = es.vectors().col(comp[j]);

  auto record = [&](double t, const Eigen::MatrixXcd& u) {
    const Eigen::MatrixXcd amps = es.vectors().adjoint() * (u * comp_vecs);
    tr.times.push_back(t);
    for (int j = 0; j < 4; ++j) {
      std::array<double, 8> row{};
      for (int k = 0; k < es.dim(); ++k) row[channels[k]] += std::norm(amps(k, j));
      tr.populations[j].push_back(row);
    }
    double coupler = 0.0;
    for (int k = 0; k < es.dim(); ++k)
      if (es.dominant_bare(k).nc >= 1) coupler += std::norm(amps(k, 3));
    tr.coupler_leakage.push_back(coupler);
    std::complex<double> d[4];
    bool ok = true;
    for (int i = 0; i < 4; ++i) {
      d[i] = amps(comp[i], i);
      ok = ok && std::abs(d[i]) > 1e-6;
    }
    tr.conditional_phase.push_back(
        ok ? wrap_angle(std::arg(d[0]) + std::arg(d[3]) - std::arg(d[1]) - std::arg(d[2]))
           : std::numeric_limits<double>::quiet_NaN());
  };

  std::function<void(int, double, const Eigen::MatrixXcd&)> sampler;
  if (want_trace) {
    record(0.0, Eigen::MatrixXcd::Identity(es.dim(), es.dim()));
    sampler = [&](int, double t, const Eigen::MatrixXcd& u) {
      detail::check_unitary(u, opt.unitarity_tol, out.dt);
      record(t, u);
    };
  }

  out.u_full = evolve_piecewise_constant(
      h_static, v, coef, pulse.duration, dt,
      Eigen::MatrixXcd::Identity(es.dim(), es.dim()), sampler, stride);
  detail::check_unitary(out.u_full, opt.unitarity_tol, out.dt);
  return out;
}

/// Propagate + project in one call.
inline GateResult simulate_gate(const EigenSystem& es, const Eigen::MatrixXcd& h_static,
                                const DrivePulse& pulse, const PropagationOptions& opt = {}) {
  return project_computational(propagate(es, h_static, pulse, opt).u_full, es);
}

}  // namespace czpulse
