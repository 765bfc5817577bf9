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
#include <numbers>
#include <stdexcept>

namespace czpulse {

enum class DriveTarget { qubit1, qubit2, both };

/// How the drive field enters the Hamiltonian on the target mode:
/// `frequency` modulates the mode frequency (longitudinal, couples to n),
/// `charge` is a transverse drive (couples to a + adag).
enum class DriveCoupling { frequency, charge };

/// Smooth envelope over four cosine-flattop basis functions
///   b_n(t) = 1 - cos(2 pi n t / T),  n = 1..4,
/// each of unit time average, so the normalized envelope
///   E(t) = mean_amp * sum_n lambda_n b_n(t) / sum_n lambda_n
/// has time average exactly mean_amp and vanishes with zero slope at both
/// endpoints. Only the ratio of the lambda coefficients matters.
struct DrivePulse {
  std::array<double, 4> lambda{-0.0760, 1.0000, 0.4222, -0.1636};
  double mean_amp = 0.05;      ///< Abar, mean envelope amplitude (GHz)
  double carrier_freq = 0.1;   ///< omega_d (GHz)
  double carrier_phase = 0.0;  ///< radians
  double duration = 210.0;     ///< T (ns)
  DriveTarget target = DriveTarget::qubit1;
  DriveCoupling coupling = DriveCoupling::frequency;

  void validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("DrivePulse: duration must be positive");
    double s = 0.0;
    for (double l : lambda) s += l;
    if (std::abs(s) < 1e-12)
      throw std::invalid_argument("DrivePulse: sum of lambda coefficients must be nonzero");
  }
};

// Default shaped initialization ratio and the single-component flattop.
inline constexpr std::array<double, 4> kShapedLambdaInit{-0.0760, 1.0000, 0.4222, -0.1636};
inline constexpr std::array<double, 4> kFlattopLambdaInit{0.0, 1.0, 0.0, 0.0};

// Selectable mean-amplitude presets (GHz).
inline constexpr std::array<double, 3> kAmpPresets{0.4, 0.045, 0.05};

/// E(t) in GHz for t in [0, duration].
inline double envelope_value(const DrivePulse& p, double t) {
  p.validate();
  if (t < 0.0 || t > p.duration)
    throw std::invalid_argument("envelope_value: t outside [0, duration]");
  double sum = 0.0, norm = 0.0;
  for (int n = 1; n <= 4; ++n) {
    norm += p.lambda[n - 1];
    sum += p.lambda[n - 1] * (1.0 - std::cos(2.0 * std::numbers::pi * n * (t / p.duration)));
  }
  return p.mean_amp * sum / norm;
}

/// Carrier-modulated instantaneous drive coefficient E(t) cos(2 pi w_d t + phi0).
inline double drive_field(const DrivePulse& p, double t) {
  return envelope_value(p, t) *
         std::cos(2.0 * std::numbers::pi * p.carrier_freq * t + p.carrier_phase);
}

}  // namespace czpulse
