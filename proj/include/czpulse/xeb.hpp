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
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "czpulse/rng.hpp"

namespace czpulse {

/// Single-qubit gates drawn per cycle: the square roots of X, Y and
/// W = (X + Y)/sqrt(2).
enum class SqGate { sqrt_x, sqrt_y, sqrt_w };

inline Eigen::Matrix2cd sq_gate_matrix(SqGate g) {
  using namespace std::complex_literals;
  Eigen::Matrix2cd m;
  switch (g) {
    case SqGate::sqrt_x:
      m << 0.5 + 0.5i, 0.5 - 0.5i, 0.5 - 0.5i, 0.5 + 0.5i;
      break;
    case SqGate::sqrt_y:
      m << 0.5 + 0.5i, -0.5 - 0.5i, 0.5 + 0.5i, 0.5 + 0.5i;
      break;
    case SqGate::sqrt_w: {
      const double s = 1.0 / std::sqrt(2.0);
      m << 0.5 + 0.5i, -1i * s, s, 0.5 + 0.5i;
      break;
    }
  }
  return m;
}

/// One or two qubits; each cycle applies an independently drawn
/// single-qubit gate per qubit, then CZ (two-qubit circuits only).
struct RandomCircuit {
  int n_qubits = 2;
  int cycles = 0;
  std::uint64_t seed = 0;
  std::vector<std::array<SqGate, 2>> layers;  ///< [cycle][qubit]; qubit 1 unused for n=1

  int dim() const { return 1 << n_qubits; }
};

/// Deterministic in the seed: the same seed always yields the same gates.
inline RandomCircuit generate_random_circuit(int n_qubits, int cycles, std::uint64_t seed) {
  if (n_qubits != 1 && n_qubits != 2)
    throw std::invalid_argument("generate_random_circuit: supports 1 or 2 qubits");
  if (cycles < 0) throw std::invalid_argument("generate_random_circuit: negative cycle count");
  RandomCircuit c;
  c.n_qubits = n_qubits;
  c.cycles = cycles;
  c.seed = seed;
  Rng rng(seed);
  c.layers.resize(cycles);
  for (auto& layer : c.layers)
    for (int q = 0; q < n_qubits; ++q) layer[q] = SqGate(rng.below(3));
  return c;
}

/// Exact state-vector simulation from |0...0>.
inline Eigen::VectorXd ideal_probs(const RandomCircuit& c) {
  const int d = c.dim();
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
  psi[0] = 1.0;
  for (const auto& layer : c.layers) {
    for (int q = 0; q < c.n_qubits; ++q) {
      const Eigen::Matrix2cd g = sq_gate_matrix(layer[q]);
      // qubit 0 is the high-order bit (bitstrings read q0 q1)
      const int stride = (c.n_qubits == 2 && q == 0) ? 2 : 1;
      Eigen::VectorXcd next = Eigen::VectorXcd::Zero(d);
      for (int i = 0; i < d; ++i) {
        const int bit = (i / stride) % 2;
        const int base = i - bit * stride;
        next[i] += g(bit, 0) * psi[base] + g(bit, 1) * psi[base + stride];
      }
      psi = next;
    }
    if (c.n_qubits == 2) psi[3] = -psi[3];  // CZ
  }
  return psi.cwiseAbs2();
}

/// Synthetic measurement distribution: the ideal circuit interleaved with a
/// uniform depolarizing channel of strength p_dep after each cycle. With
/// shots = 0 the exact mixture distribution is returned; otherwise
/// empirical frequencies of that distribution, sampled deterministically
/// from the seed.
inline Eigen::VectorXd simulate_measured(const RandomCircuit& c, double p_dep, long shots,
                                         std::uint64_t seed) {
  if (p_dep < 0.0 || p_dep > 1.0)
    throw std::invalid_argument("simulate_measured: p_dep outside [0, 1]");
  if (shots < 0) throw std::invalid_argument("simulate_measured: negative shot count");
  const int d = c.dim();
  // The depolarizing channel commutes with the remaining unitary cycles, so
  // the final state is a binomial mixture of the ideal state and I/d.
  const double survive = std::pow(1.0 - p_dep, c.cycles);
  Eigen::VectorXd p = survive * ideal_probs(c) +
                      (1.0 - survive) * Eigen::VectorXd::Constant(d, 1.0 / d);
  if (shots == 0) return p;
  Rng rng(seed);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(d);
  for (long s = 0; s < shots; ++s) {
    double u = rng.uniform();
    int outcome = d - 1;
    for (int i = 0; i < d; ++i) {
      u -= p[i];
      if (u < 0.0) {
        outcome = i;
        break;
      }
    }
    counts[outcome] += 1.0;
  }
  return counts / double(shots);
}

/// One circuit's worth of benchmarking data at a fixed cycle count.
struct XebRecord {
  int cycles = 0;
  std::uint64_t circuit_seed = 0;
  Eigen::VectorXd p_ideal;
  Eigen::VectorXd p_measured;

  void validate() const {
    if (p_ideal.size() != p_measured.size() || p_ideal.size() < 2)
      throw std::invalid_argument("XebRecord: probability vectors malformed");
    for (const Eigen::VectorXd* v : {&p_ideal, &p_measured}) {
      if (v->minCoeff() < -1e-12)
        throw std::invalid_argument("XebRecord: negative probability");
      if (std::abs(v->sum() - 1.0) > 1e-9)
        throw std::invalid_argument("XebRecord: probabilities do not sum to 1");
    }
  }
};

/// Cross-entropy sequence fidelity over an ensemble at one cycle count:
///   alpha = mean_c sum_q p_m(q) (D p_s(q) - 1)
///           / (D mean_c sum_q p_s(q)^2 - 1).
/// Throws when the ensemble is not scrambling enough for the denominator
/// to be meaningful.
inline double xeb_alpha(std::span<const XebRecord> records) {
  if (records.size() < 2) throw std::invalid_argument("xeb_alpha: need at least two records");
  const int m = records.front().cycles;
  const auto d = records.front().p_ideal.size();
  double num = 0.0, den = 0.0;
  for (const auto& r : records) {
    r.validate();
    if (r.cycles != m || r.p_ideal.size() != d)
      throw std::invalid_argument("xeb_alpha: mixed cycle counts or dimensions");
    num += r.p_measured.dot(double(d) * r.p_ideal - Eigen::VectorXd::Ones(d));
    den += r.p_ideal.squaredNorm();
  }
  num /= double(records.size());
  den = double(d) * den / double(records.size()) - 1.0;
  if (std::abs(den) < 1e-12)
    throw std::runtime_error("xeb_alpha: undefined (ensemble not scrambling, denominator ~ 0)");
  return num / den;
}

struct PurityEstimate {
  double value = 0.0;
  bool exceeds_unity = false;  ///< set when the estimator lands above 1
};

/// Speckle-purity estimator sqrt(P) = sqrt(Var(p_m) D^2 (D+1) / (D-1)),
/// with the population variance pooled over all bitstrings of all circuits
/// at one cycle count. A non-scrambled ensemble can push the estimate above
/// 1; it is reported as-is with a warning flag.
inline PurityEstimate spb_purity(std::span<const XebRecord> records) {
  if (records.size() < 2) throw std::invalid_argument("spb_purity: need at least two records");
  const auto d = records.front().p_ideal.size();
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;
  for (const auto& r : records) {
    r.validate();
    if (r.p_measured.size() != d)
      throw std::invalid_argument("spb_purity: mixed dimensions");
    sum += r.p_measured.sum();
    sum_sq += r.p_measured.squaredNorm();
    count += d;
  }
  const double mean = sum / double(count);
  const double var = sum_sq / double(count) - mean * mean;
  PurityEstimate out;
  out.value = std::sqrt(std::max(0.0, var) * double(d) * double(d) * double(d + 1) /
                        double(d - 1));
  out.exceeds_unity = out.value > 1.0;
  return out;
}

struct DecayFit {
  double per_cycle = 0.0;  ///< f in A * f^m
  double amplitude = 0.0;  ///< A
};

/// Least-squares fit of value = A * f^m in the log domain. Nonpositive
/// values are rejected point-wise; at least three surviving points are
/// required. The free amplitude absorbs a readout-depressed starting point.
inline DecayFit fit_decay(std::span<const std::pair<int, double>> points) {
  std::vector<std::pair<double, double>> usable;
  for (const auto& [m, v] : points)
    if (v > 0.0) usable.emplace_back(double(m), std::log(v));
  if (usable.size() < 3)
    throw std::invalid_argument("fit_decay: need at least three positive points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : usable) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(usable.size());
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-12)
    throw std::invalid_argument("fit_decay: degenerate cycle counts");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  return DecayFit{std::exp(slope), std::exp(intercept)};
}

}  // namespace czpulse
