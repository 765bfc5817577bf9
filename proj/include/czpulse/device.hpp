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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace czpulse {

/// All frequencies are ordinary (non-angular) frequencies in GHz and all
/// times are in ns; propagators multiply by 2*pi internally.
///
/// The device is a qubit-coupler-qubit chain of Duffing modes,
///   H = sum_j [w_j n_j + (eta_j/2) n_j (n_j - 1)]
///     + sum_{j<k} g_jk (adag_j a_k + a_j adag_k),
/// in the tensor-product number basis ordered (n1, nc, n2), n2 fastest.
struct DeviceParams {
  double omega_q1 = 5.20;   ///< qubit 1 mode frequency (GHz)
  double omega_q2 = 5.08;   ///< qubit 2 mode frequency (GHz)
  double omega_c = 6.30;    ///< coupler mode frequency (GHz)
  double eta_q1 = -0.210;   ///< qubit 1 anharmonicity (GHz)
  double eta_q2 = -0.198;   ///< qubit 2 anharmonicity (GHz)
  double eta_c = -0.10;     ///< coupler anharmonicity (GHz)
  double g_1c = 0.090;      ///< qubit1-coupler exchange coupling (GHz)
  double g_2c = 0.090;      ///< coupler-qubit2 exchange coupling (GHz)
  double g_12 = 0.022;      ///< direct qubit1-qubit2 exchange coupling (GHz)
  int levels = 3;           ///< Fock truncation per mode

  int dim() const { return levels * levels * levels; }

  /// Throws std::invalid_argument on out-of-domain parameters, including a
  /// truncation so large that the dense Hamiltonian would not fit the
  /// configured memory budget.
  void validate() const {
    if (levels < 2) throw std::invalid_argument("DeviceParams: levels must be >= 2");
    // dim^2 complex doubles; cap the dense matrix at ~256 MiB.
    if (levels > 25)
      throw std::invalid_argument(
          "DeviceParams: levels = " + std::to_string(levels) +
          " overflows the dense-matrix memory budget (levels <= 25)");
    for (double w : {omega_q1, omega_q2, omega_c}) {
      if (!(w > 0.0) || !std::isfinite(w))
        throw std::invalid_argument("DeviceParams: mode frequencies must be strictly positive");
    }
    for (double v : {eta_q1, eta_q2, eta_c, g_1c, g_2c, g_12}) {
      if (!std::isfinite(v))
        throw std::invalid_argument("DeviceParams: anharmonicities and couplings must be finite");
    }
  }
};

/// Bare product-basis occupation (n1, nc, n2).
struct BareIndex {
  int n1 = 0;
  int nc = 0;
  int n2 = 0;

  friend bool operator==(const BareIndex&, const BareIndex&) = default;

  int flat(int levels) const { return (n1 * levels + nc) * levels + n2; }

  static BareIndex from_flat(int idx, int levels) {
    return BareIndex{idx / (levels * levels), (idx / levels) % levels, idx % levels};
  }

  std::string str() const {
    return "|" + std::to_string(n1) + std::to_string(nc) + std::to_string(n2) + ">";
  }
};

// Two-qubit computational states with the coupler in its ground state.
inline constexpr BareIndex kBare00{0, 0, 0};
inline constexpr BareIndex kBare01{0, 0, 1};
inline constexpr BareIndex kBare10{1, 0, 0};
inline constexpr BareIndex kBare11{1, 0, 1};
inline constexpr BareIndex kBare02{0, 0, 2};
inline constexpr BareIndex kBare20{2, 0, 0};

namespace detail {

inline Eigen::MatrixXd lowering_op(int levels) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

/// Embeds a single-mode operator at chain position `pos` (0 = qubit 1,
/// 1 = coupler, 2 = qubit 2) into the three-mode product space.
inline Eigen::MatrixXd embed_mode_op(const Eigen::MatrixXd& op, int pos, int levels) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(levels, levels);
  auto kron = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < x.cols(); ++j) out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
  };
  const Eigen::MatrixXd& m0 = (pos == 0) ? op : id;
  const Eigen::MatrixXd& m1 = (pos == 1) ? op : id;
  const Eigen::MatrixXd& m2 = (pos == 2) ? op : id;
  return kron(kron(m0, m1), m2);
}

}  // namespace detail

/// Builds the static chain Hamiltonian in the (n1, nc, n2) product basis.
/// The result is real symmetric; it is returned as a complex Hermitian
/// matrix because everything downstream evolves complex amplitudes.
inline Eigen::MatrixXcd build_static_hamiltonian(const DeviceParams& p) {
  p.validate();
  const int L = p.levels;
  const Eigen::MatrixXd a = detail::lowering_op(L);
  const Eigen::MatrixXd n = a.transpose() * a;
  const Eigen::MatrixXd anh = 0.5 * n * (n - Eigen::MatrixXd::Identity(L, L));

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  const std::array<std::pair<double, double>, 3> modes{
      {{p.omega_q1, p.eta_q1}, {p.omega_c, p.eta_c}, {p.omega_q2, p.eta_q2}}};
  for (int pos = 0; pos < 3; ++pos) {
    h += modes[pos].first * detail::embed_mode_op(n, pos, L);
    h += modes[pos].second * detail::embed_mode_op(anh, pos, L);
  }
  const Eigen::MatrixXd a1 = detail::embed_mode_op(a, 0, L);
  const Eigen::MatrixXd ac = detail::embed_mode_op(a, 1, L);
  const Eigen::MatrixXd a2 = detail::embed_mode_op(a, 2, L);
  auto exchange = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return Eigen::MatrixXd(x.transpose() * y + y.transpose() * x);
  };
  h += p.g_1c * exchange(a1, ac);
  h += p.g_2c * exchange(ac, a2);
  h += p.g_12 * exchange(a1, a2);
  return h.cast<std::complex<double>>();
}

/// Static-Hamiltonian eigensystem with bare-state labels.
///
/// Each bare index is assigned the eigenvector of maximal squared overlap.
/// When the top two overlaps for a bare index differ by less than 0.1, or
/// when two bare indices contend for the same eigenvector, the weaker
/// assignment is flagged ambiguous instead of silently chosen.
class EigenSystem {
 public:
  EigenSystem(Eigen::VectorXd energies, Eigen::MatrixXcd vectors, int levels)
      : energies_(std::move(energies)), vectors_(std::move(vectors)), levels_(levels) {
    const int d = dim();
    label_of_bare_.assign(d, -1);
    ambiguous_.assign(d, false);
    top_overlap_.assign(d, 0.0);
    dominant_bare_.assign(d, 0);

    for (int k = 0; k < d; ++k) {
      int best = 0;
      double best_ov = -1.0;
      for (int b = 0; b < d; ++b) {
        const double ov = std::norm(vectors_(b, k));
        if (ov > best_ov) {
          best_ov = ov;
          best = b;
        }
      }
      dominant_bare_[k] = best;
    }

    constexpr double kAmbiguityGap = 0.1;
    std::vector<int> claimed(d, -1);  // eigenindex -> bare index that holds it
    for (int b = 0; b < d; ++b) {
      double top = -1.0, second = -1.0;
      int arg = 0;
      for (int k = 0; k < d; ++k) {
        const double ov = std::norm(vectors_(b, k));
        if (ov > top) {
          second = top;
          top = ov;
          arg = k;
        } else if (ov > second) {
          second = ov;
        }
      }
      top_overlap_[b] = top;
      if (top - second < kAmbiguityGap) {
        ambiguous_[b] = true;
        continue;
      }
      if (claimed[arg] >= 0) {
        // Two bare states favor the same eigenvector; keep the stronger one.
        const int other = claimed[arg];
        if (top > top_overlap_[other]) {
          label_of_bare_[other] = -1;
          ambiguous_[other] = true;
          claimed[arg] = b;
          label_of_bare_[b] = arg;
        } else {
          ambiguous_[b] = true;
        }
        continue;
      }
      claimed[arg] = b;
      label_of_bare_[b] = arg;
    }
  }

  int dim() const { return levels_ * levels_ * levels_; }
  int levels() const { return levels_; }
  const Eigen::VectorXd& energies() const { return energies_; }
  const Eigen::MatrixXcd& vectors() const { return vectors_; }

  bool ambiguous(BareIndex b) const { return ambiguous_[b.flat(levels_)]; }

  /// Eigenindex labeled by the bare state, if unambiguously assigned.
  std::optional<int> label(BareIndex b) const {
    const int k = label_of_bare_[b.flat(levels_)];
    if (k < 0) return std::nullopt;
    return k;
  }

  /// Labeled eigenindex; throws on missing or ambiguous assignments.
  int label_checked(BareIndex b) const {
    if (ambiguous(b))
      throw std::runtime_error("EigenSystem: bare state " + b.str() +
                               " has an ambiguous (near-degenerate) label");
    const auto k = label(b);
    if (!k)
      throw std::runtime_error("EigenSystem: bare state " + b.str() + " received no label");
    return *k;
  }

  double energy(BareIndex b) const { return energies_[label_checked(b)]; }

  double overlap(BareIndex b) const { return top_overlap_[b.flat(levels_)]; }

  /// Bare state of largest weight in eigenvector k. Defined for every
  /// eigenvector, including those involved in ambiguous assignments;
  /// used to classify population channels.
  BareIndex dominant_bare(int k) const { return BareIndex::from_flat(dominant_bare_[k], levels_); }

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
  int levels_;
  std::vector<int> label_of_bare_;
  std::vector<bool> ambiguous_;
  std::vector<double> top_overlap_;
  std::vector<int> dominant_bare_;
};

/// Diagonalizes a Hermitian Hamiltonian and labels eigenstates by maximal
/// bare-state overlap. The dimension must be a perfect cube (three modes).
inline EigenSystem diagonalize_and_label(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("diagonalize_and_label: matrix not square");
  const double herm = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10)
    throw std::invalid_argument("diagonalize_and_label: matrix not Hermitian (deviation " +
                                std::to_string(herm) + ")");
  const int d = int(h.rows());
  const int levels = int(std::lround(std::cbrt(double(d))));
  if (levels * levels * levels != d)
    throw std::invalid_argument("diagonalize_and_label: dimension is not a cube of the mode truncation");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("diagonalize_and_label: eigen-decomposition failed");
  return EigenSystem(es.eigenvalues(), es.eigenvectors(), levels);
}

inline EigenSystem diagonalize_device(const DeviceParams& p) {
  return diagonalize_and_label(build_static_hamiltonian(p));
}

/// Frequency difference omega(from) - omega(to) between two labeled
/// eigenstates (GHz). Throws if either label is missing or ambiguous.
inline double transition_frequency(const EigenSystem& es, BareIndex from, BareIndex to) {
  return es.energy(from) - es.energy(to);
}

/// Dressed qubit detuning: omega(|100>-labeled) - omega(|001>-labeled),
/// both measured from the labeled ground state.
inline double detune(const DeviceParams& p) {
  const EigenSystem es = diagonalize_device(p);
  const double e0 = es.energy(kBare00);
  return (es.energy(kBare10) - e0) - (es.energy(kBare01) - e0);
}

/// Adjusts omega_q2 so the dressed detuning equals `delta_target`.
/// Bisection over the bare detuning omega_q1 - omega_q2, kept strictly
/// positive so the dressed one-excitation states stay labelable (at bare
/// degeneracy they hybridize 50/50 and detune() would report ambiguity).
inline DeviceParams device_for_detune(DeviceParams base, double delta_target,
                                      double tol = 1e-12) {
  base.validate();
  double lo = std::max(0.006, delta_target - 0.08);  // bare detuning bounds
  double hi = delta_target + 0.08;
  DeviceParams p = base;
  p.omega_q2 = base.omega_q1 - lo;
  if (detune(p) > delta_target)
    throw std::runtime_error("device_for_detune: target below the dressed minimum splitting");
  p.omega_q2 = base.omega_q1 - hi;
  if (detune(p) < delta_target)
    throw std::runtime_error("device_for_detune: target detuning not bracketed from above");
  for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    p.omega_q2 = base.omega_q1 - mid;
    if (detune(p) > delta_target)
      hi = mid;
    else
      lo = mid;
  }
  p.omega_q2 = base.omega_q1 - 0.5 * (lo + hi);
  return p;
}

}  // namespace czpulse
