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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "czpulse/optimizer.hpp"
#include "czpulse/rng.hpp"

using namespace czpulse;

namespace {

// Short, cheap configuration for protocol-level tests; gate quality is
// irrelevant here.
DrivePulse quick_pulse() {
  DrivePulse p;
  p.duration = 20.0;
  return p;
}

}  // namespace

TEST_CASE("initial guess carries the shaped ratio, preset amplitude and transition carrier",
          "[optimizer]") {
  const DeviceParams dev{};
  const EigenSystem es = diagonalize_device(dev);
  const DrivePulse p = initial_guess(es, CzTarget::to20, 0.045);
  CHECK(p.lambda[0] == -0.0760);
  CHECK(p.lambda[1] == 1.0000);
  CHECK(p.lambda[2] == 0.4222);
  CHECK(p.lambda[3] == -0.1636);
  CHECK(p.mean_amp == 0.045);
  CHECK(p.carrier_freq ==
        Catch::Approx(std::abs(transition_frequency(es, kBare11, kBare20))).margin(1e-15));
}

TEST_CASE("initial carrier reduces to bare arithmetic at zero coupling", "[optimizer]") {
  DeviceParams dev;
  dev.g_1c = dev.g_2c = dev.g_12 = 0.0;
  const EigenSystem es = diagonalize_device(dev);
  const DrivePulse p = initial_guess(es, CzTarget::to20, 0.4);
  CHECK(p.carrier_freq ==
        Catch::Approx(std::abs(dev.omega_q2 - dev.omega_q1 - dev.eta_q1)).margin(1e-9));
  const DrivePulse q = initial_guess(es, CzTarget::to02, 0.4);
  CHECK(q.carrier_freq ==
        Catch::Approx(std::abs(dev.omega_q1 - dev.omega_q2 - dev.eta_q2)).margin(1e-9));
}

TEST_CASE("unreachable target leaves the error where it started", "[optimizer]") {
  DeviceParams dev;
  dev.g_1c = dev.g_2c = dev.g_12 = 0.0;  // no |11>-|20> matrix element at all
  const auto out = optimize_cz(dev, CzTarget::to20, 0.05, 3, quick_pulse());
  CHECK(std::isfinite(out.result.error()));
  CHECK(out.result.error() > 0.1);
  CHECK(out.result.error() <= out.initial_error + 1e-9);
}

TEST_CASE("identical runs produce bit-identical traces", "[optimizer]") {
  const DeviceParams dev{};
  const auto a = optimize_cz(dev, CzTarget::to20, 0.05, 4, quick_pulse());
  const auto b = optimize_cz(dev, CzTarget::to20, 0.05, 4, quick_pulse());
  REQUIRE(a.error_trace.size() == b.error_trace.size());
  for (std::size_t i = 0; i < a.error_trace.size(); ++i)
    CHECK(a.error_trace[i] == b.error_trace[i]);
  CHECK(a.best_pulse.carrier_freq == b.best_pulse.carrier_freq);
}

TEST_CASE("iteration budget bounds the trace and the trace never rises", "[optimizer]") {
  const DeviceParams dev{};
  const auto out = optimize_cz(dev, CzTarget::to20, 0.05, 5, quick_pulse());
  CHECK(out.iterations <= 5);
  CHECK(out.error_trace.size() == std::size_t(out.iterations));
  for (std::size_t i = 1; i < out.error_trace.size(); ++i)
    CHECK(out.error_trace[i] <= out.error_trace[i - 1]);
  // simplex accounting: n+1 start evaluations, at most n+2 per iteration
  const int n = FreeParams{}.count();
  CHECK(out.evaluations <= (n + 1) + long(out.iterations) * (n + 2));
}

TEST_CASE("best-k aggregation follows its sort oracle", "[optimizer]") {
  CHECK(aggregate_best_k({0.5, 0.5, 0.5}, 2) == Catch::Approx(0.5).margin(1e-15));

  std::vector<double> errors;
  for (int i = 0; i < 50; ++i) errors.push_back(1e-5);
  for (int i = 0; i < 50; ++i) errors.push_back(1e-2);
  CHECK(aggregate_best_k(errors, 50) == Catch::Approx(1e-5).epsilon(1e-12));

  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v;
    const int n = 1 + int(rng.below(200));
    for (int i = 0; i < n; ++i) v.push_back(rng.uniform(0.0, 1.0));
    const int k = 1 + int(rng.below(std::uint64_t(n)));
    // oracle: full sort then mean of the first k
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (int i = 0; i < k; ++i) mean += sorted[i];
    mean /= k;
    CHECK(aggregate_best_k(v, k) == Catch::Approx(mean).epsilon(1e-12));
    // permutation invariance
    std::vector<double> shuffled = v;
    for (int i = n - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    CHECK(aggregate_best_k(shuffled, k) == Catch::Approx(aggregate_best_k(v, k)).margin(0.0));
  }

  CHECK_THROWS_AS(aggregate_best_k({0.1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_best_k({0.1}, 0), std::invalid_argument);
}

TEST_CASE("both drive collisions are located inside the scan window", "[optimizer]") {
  const DeviceParams base{};
  const double d_swap =
      find_collision_delta(base, CzTarget::to20, CollisionKind::swap_01_10, 0.05, 0.15);
  const double d_leak =
      find_collision_delta(base, CzTarget::to20, CollisionKind::leak_11_02, 0.05, 0.15);
  CHECK(d_swap > d_leak);  // the swap resonance sits at larger detuning
  CHECK(d_leak > 0.05);
  CHECK(d_swap < 0.15);

  // independent residual check at the roots
  {
    const DeviceParams dev = device_for_detune(base, d_swap);
    const EigenSystem es = diagonalize_device(dev);
    const double wd = std::abs(transition_frequency(es, kBare11, kBare20));
    CHECK(std::abs(wd - (es.energy(kBare10) - es.energy(kBare01))) < 1e-7);
  }
  {
    const DeviceParams dev = device_for_detune(base, d_leak);
    const EigenSystem es = diagonalize_device(dev);
    const double wd = std::abs(transition_frequency(es, kBare11, kBare20));
    CHECK(std::abs(2.0 * wd - (es.energy(kBare11) - es.energy(kBare02))) < 1e-7);
  }
}

TEST_CASE("small scan emits ordered points and aggregates the best k", "[optimizer]") {
  ScanSettings s;
  s.n = 4;
  s.k = 2;
  s.budget = 1;
  s.delta_lo = 0.112;
  s.delta_hi = 0.124;
  s.pulse_defaults = quick_pulse();
  s.jobs = 2;
  const ScanResult r = delta_scan(DeviceParams{}, s);
  REQUIRE(r.points.size() == 4);
  for (std::size_t i = 1; i < r.points.size(); ++i)
    CHECK(r.points[i].delta > r.points[i - 1].delta);
  std::vector<double> errors;
  for (const auto& pt : r.points) errors.push_back(pt.best_error);
  CHECK(r.aggregate == Catch::Approx(aggregate_best_k(errors, 2)).margin(1e-15));

  ScanSettings bad = s;
  bad.k = 5;
  CHECK_THROWS_AS(delta_scan(DeviceParams{}, bad), std::invalid_argument);
}

TEST_CASE("problem validation", "[optimizer]") {
  OptimizationProblem p;
  p.budget = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.budget = 10;
  p.free_params = FreeParams{false, false, false, false, false, false};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
