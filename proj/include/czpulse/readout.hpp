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

#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace czpulse {

/// Row-stochastic readout fidelity matrix: f(i, j) is the probability of
/// measuring outcome j when state i was prepared. Two- or three-symbol
/// alphabet per qubit.
struct ConfusionMatrix {
  Eigen::MatrixXd f;
  int qubit_id = -1;

  int alphabet() const { return int(f.rows()); }

  void validate() const {
    if (f.rows() != f.cols() || f.rows() < 2)
      throw std::invalid_argument("ConfusionMatrix: must be square, at least 2x2");
    for (int i = 0; i < f.rows(); ++i) {
      double row = 0.0;
      for (int j = 0; j < f.cols(); ++j) {
        if (f(i, j) < 0.0 || f(i, j) > 1.0)
          throw std::invalid_argument("ConfusionMatrix: entries must lie in [0, 1]");
        row += f(i, j);
      }
      if (std::abs(row - 1.0) > 1e-6)
        throw std::invalid_argument("ConfusionMatrix: row " + std::to_string(i) +
                                    " sums to " + std::to_string(row));
    }
  }
};

/// Plain-text loader: one matrix row per line, whitespace-separated
/// entries, '#' comments allowed.
inline ConfusionMatrix load_confusion_matrix(const std::filesystem::path& path,
                                             int qubit_id = -1) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_confusion_matrix: cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_confusion_matrix: no data in " + path.string());
  ConfusionMatrix m;
  m.qubit_id = qubit_id;
  m.f.resize(int(rows.size()), int(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw std::runtime_error("load_confusion_matrix: ragged rows in " + path.string());
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.f(int(i), int(j)) = rows[i][j];
  }
  m.validate();
  return m;
}

/// Multi-qubit readout fidelity as the Kronecker product of the per-qubit
/// matrices, in qubit order. Mixed alphabets (2- and 3-level inputs) are
/// allowed but flagged through `mixed_alphabet`.
inline ConfusionMatrix joint_confusion(std::span<const ConfusionMatrix> per_qubit,
                                       bool* mixed_alphabet = nullptr) {
  if (per_qubit.empty()) throw std::invalid_argument("joint_confusion: no input matrices");
  bool mixed = false;
  for (const auto& m : per_qubit) {
    m.validate();
    mixed = mixed || (m.alphabet() != per_qubit.front().alphabet());
  }
  if (mixed_alphabet) *mixed_alphabet = mixed;
  ConfusionMatrix out = per_qubit.front();
  for (std::size_t k = 1; k < per_qubit.size(); ++k) {
    const Eigen::MatrixXd& a = out.f;
    const Eigen::MatrixXd& b = per_qubit[k].f;
    Eigen::MatrixXd joint(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j)
        joint.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    out.f = std::move(joint);
  }
  out.qubit_id = -1;
  return out;
}

struct ReadoutCorrection {
  Eigen::VectorXd p;          ///< corrected, clipped and renormalized
  double clipped_mass = 0.0;  ///< total negative mass removed by clipping
  double condition_number = 0.0;
};

/// Inverts the readout distortion: measured distributions satisfy
/// p_raw = F^T p_true (F row-stochastic with F_ij = P(j | i)), so the
/// correction solves F^T p_true = p_raw. Negative solution entries are
/// clipped to zero and the vector renormalized; the clipped magnitude is
/// reported rather than hidden.
inline ReadoutCorrection correct_readout(const Eigen::VectorXd& p_raw,
                                         const ConfusionMatrix& m) {
  m.validate();
  if (p_raw.size() != m.f.rows())
    throw std::invalid_argument("correct_readout: dimension mismatch");
  const Eigen::MatrixXd ft = m.f.transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(ft);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin < 1e-12 * smax)
    throw std::runtime_error("correct_readout: confusion matrix is singular");

  ReadoutCorrection out;
  out.condition_number = smax / smin;
  Eigen::VectorXd p = Eigen::FullPivLU<Eigen::MatrixXd>(ft).solve(p_raw);
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) {
      out.clipped_mass += -p[i];
      p[i] = 0.0;
    }
  }
  const double total = p.sum();
  if (total <= 0.0)
    throw std::runtime_error("correct_readout: correction clipped away all probability");
  out.p = p / total;
  return out;
}

/// Leakage weight of a corrected two-qubit three-level distribution: the
/// probability in {|02>, |12>, |20>, |21>, |22>}. Outcomes are indexed in
/// base 3 with qubit 1 as the leading digit.
inline double leak_metric(const Eigen::VectorXd& p_corrected) {
  if (p_corrected.size() != 9)
    throw std::invalid_argument("leak_metric: expected 9 outcomes (two qutrits)");
  return p_corrected[2] + p_corrected[5] + p_corrected[6] + p_corrected[7] + p_corrected[8];
}

}  // namespace czpulse
