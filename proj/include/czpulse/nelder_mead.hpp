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
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace czpulse {

struct NelderMeadOptions {
  int max_iterations = 200;
  double simplex_tolerance = 1e-10;  ///< stop when the simplex diameter shrinks below this
  double penalty_value = 1.0;        ///< substituted for non-finite objective values
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct NelderMeadResult {
  std::vector<double> best_point;
  double best_value = 0.0;
  std::vector<double> trace;  ///< best-so-far value, one entry per iteration
  int iterations = 0;
  long evaluations = 0;
};

/// Derivative-free downhill-simplex minimization.
///
/// The initial simplex is x0 plus one vertex per coordinate displaced by
/// steps[i]. Non-finite objective values are replaced by the penalty value,
/// so a NaN-producing vertex is rejected rather than propagated. Runs at
/// most max_iterations iterations with at most dimension + 2 objective
/// evaluations each; the per-iteration trace is monotone nonincreasing.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> x0, std::vector<double> steps, const NelderMeadOptions& opt = {}) {
  const int n = int(x0.size());
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
  if (steps.size() != x0.size())
    throw std::invalid_argument("nelder_mead: steps dimension mismatch");
  if (opt.max_iterations < 1)
    throw std::invalid_argument("nelder_mead: iteration budget must be >= 1");

  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : opt.penalty_value;
  };

  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += steps[i];
  for (int i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<int> order(n + 1);
  auto sort_simplex = [&] {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
  };
  auto diameter = [&] {
    double d = 0.0;
    const auto& best = pts[order[0]];
    for (int i = 1; i <= n; ++i)
      for (int j = 0; j < n; ++j) d = std::max(d, std::abs(pts[order[i]][j] - best[j]));
    return d;
  };

  double best_so_far = *std::min_element(vals.begin(), vals.end());
  sort_simplex();

  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (diameter() < opt.simplex_tolerance) break;

    const int iw = order[n];          // worst
    const int is = order[n - 1];      // second worst
    const int ib = order[0];          // best
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += pts[order[i]][j];
      centroid[j] = s / n;
    }

    for (int j = 0; j < n; ++j) xr[j] = centroid[j] + opt.reflection * (centroid[j] - pts[iw][j]);
    const double fr = eval(xr);

    if (fr < vals[ib]) {
      for (int j = 0; j < n; ++j) xe[j] = centroid[j] + opt.expansion * (centroid[j] - pts[iw][j]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[iw] = xe;
        vals[iw] = fe;
      } else {
        pts[iw] = xr;
        vals[iw] = fr;
      }
    } else if (fr < vals[is]) {
      pts[iw] = xr;
      vals[iw] = fr;
    } else {
      bool shrink_needed = false;
      if (fr < vals[iw]) {
        // outside contraction
        for (int j = 0; j < n; ++j) xc[j] = centroid[j] + opt.contraction * (xr[j] - centroid[j]);
        const double fc = eval(xc);
        if (fc <= fr) {
          pts[iw] = xc;
          vals[iw] = fc;
        } else {
          shrink_needed = true;
        }
      } else {
        // inside contraction
        for (int j = 0; j < n; ++j) xc[j] = centroid[j] - opt.contraction * (centroid[j] - pts[iw][j]);
        const double fc = eval(xc);
        if (fc < vals[iw]) {
          pts[iw] = xc;
          vals[iw] = fc;
        } else {
          shrink_needed = true;
        }
      }
      if (shrink_needed) {
        for (int i = 1; i <= n; ++i) {
          const int k = order[i];
          for (int j = 0; j < n; ++j)
            pts[k][j] = pts[order[0]][j] + opt.shrink * (pts[k][j] - pts[order[0]][j]);
          vals[k] = eval(pts[k]);
        }
      }
    }

    sort_simplex();
    best_so_far = std::min(best_so_far, vals[order[0]]);
    res.trace.push_back(best_so_far);
    ++res.iterations;
  }

  sort_simplex();
  res.best_point = pts[order[0]];
  res.best_value = std::min(best_so_far, vals[order[0]]);
  return res;
}

}  // namespace czpulse
