// Copyright 2026 The qem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qem/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "qem/simulator.hpp"

namespace qem {

namespace {

// Candidate points outside the channel's validity region (per-junction rate
// sums above 1) get a steep penalty instead of a simulation.
double validity_excess(const Lambda5& l) {
  double s01 = l[0] + l[2] + l[4];
  double s12 = l[1] + l[3] + l[4];
  return std::max(0.0, s01 - 1.0) + std::max(0.0, s12 - 1.0);
}

Lambda5 clamp_box(Lambda5 l) {
  for (double& v : l) v = std::clamp(v, 0.0, 1.0);
  return l;
}

}  // namespace

std::vector<std::vector<int>> all_z_subsets(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 16) {
    throw std::invalid_argument("all_z_subsets: qubit count out of range");
  }
  std::vector<std::vector<int>> subsets;
  for (unsigned mask = 1; mask < (1u << n_qubits); ++mask) {
    std::vector<int> s;
    for (int q = 0; q < n_qubits; ++q) {
      if ((mask >> q) & 1u) s.push_back(q);
    }
    subsets.push_back(std::move(s));
  }
  std::stable_sort(subsets.begin(), subsets.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return subsets;
}

Eigen::MatrixXd forward_series(const BcsParams& p, const MeanFieldState& mf,
                               const Lambda5& lambdas,
                               const std::vector<std::vector<int>>& observables) {
  if (p.n_levels() != 3) {
    throw std::invalid_argument("forward_series: the chain noise model is three-qubit");
  }
  TrotterCircuit tc = build_trotter_circuit(p, mf, p.n_steps);
  NoiseModel nm = chain3_quasi_local(lambdas[0], lambdas[1], lambdas[2], lambdas[3],
                                     lambdas[4]);

  std::vector<std::size_t> at;
  for (int t = 1; t < p.n_steps; ++t) at.push_back(tc.step_gate_begin[t]);
  std::vector<DensityMatrix> states = simulate_snapshots(tc.circuit, nm, at);

  Eigen::MatrixXd out(observables.size(), p.n_steps);
  for (int t = 0; t < p.n_steps; ++t) {
    const LayoutTracker& layout = tc.layout_after_step[t];
    for (std::size_t o = 0; o < observables.size(); ++o) {
      PauliString obs = PauliString::identity(3);
      for (int logical : observables[o]) {
        obs.factors[layout.phys_of(logical)] = PauliOp::Z;
      }
      out(o, t) = expectation(states[t], obs);
    }
  }
  return out;
}

void FitProblem::check() const {
  bcs.check();
  if (observables.empty()) throw std::invalid_argument("FitProblem: no observables");
  if (targets.rows() != static_cast<Eigen::Index>(observables.size()) ||
      targets.cols() != bcs.n_steps) {
    throw std::invalid_argument("FitProblem: target matrix shape mismatch");
  }
  if (!targets.allFinite()) throw std::invalid_argument("FitProblem: non-finite target");
}

std::vector<double> fit_residuals(const FitProblem& problem, const Lambda5& lambdas) {
  problem.check();
  Eigen::MatrixXd sim = forward_series(problem.bcs, problem.mf, lambdas, problem.observables);
  std::vector<double> r;
  r.reserve(sim.size());
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    for (Eigen::Index j = 0; j < sim.cols(); ++j) {
      r.push_back(sim(i, j) - problem.targets(i, j));
    }
  }
  return r;
}

double fit_chi2(const FitProblem& problem, const Lambda5& lambdas) {
  std::vector<double> r = fit_residuals(problem, lambdas);
  double acc = 0.0;
  for (double v : r) acc += v * v;
  return acc / static_cast<double>(r.size());
}

namespace {

struct NmRound {
  Lambda5 x{};
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// One Nelder-Mead pass with standard coefficients, starting from a fresh
// simplex of edge `step` around x0. Vertices may leave the parameter box;
// the objective charges a smooth quadratic there, which keeps the simplex
// full-rank instead of collapsing it against a boundary face.
NmRound nelder_mead_round(const std::function<double(const Lambda5&)>& objective,
                          const Lambda5& x0, double step, int max_iter) {
  constexpr int kDim = 5;
  std::array<Lambda5, kDim + 1> simplex;
  std::array<double, kDim + 1> f;
  simplex[0] = clamp_box(x0);
  f[0] = objective(simplex[0]);
  for (int i = 0; i < kDim; ++i) {
    Lambda5 xi = simplex[0];
    xi[i] += (xi[i] < 0.5) ? step : -step;
    simplex[i + 1] = xi;
    f[i + 1] = objective(simplex[i + 1]);
  }

  NmRound out;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::array<int, kDim + 1> idx;
    for (int i = 0; i <= kDim; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] < f[b]; });
    std::array<Lambda5, kDim + 1> s2;
    std::array<double, kDim + 1> f2;
    for (int i = 0; i <= kDim; ++i) {
      s2[i] = simplex[idx[i]];
      f2[i] = f[idx[i]];
    }
    simplex = s2;
    f = f2;

    double diameter = 0.0;
    for (int i = 1; i <= kDim; ++i) {
      for (int d = 0; d < kDim; ++d) {
        diameter = std::max(diameter, std::abs(simplex[i][d] - simplex[0][d]));
      }
    }
    if (diameter < 1e-10 && f[kDim] - f[0] < 1e-18) {
      out.converged = true;
      break;
    }

    Lambda5 centroid{};
    for (int i = 0; i < kDim; ++i) {
      for (int d = 0; d < kDim; ++d) centroid[d] += simplex[i][d];
    }
    for (int d = 0; d < kDim; ++d) centroid[d] /= kDim;

    auto blend = [&](double coeff) {
      Lambda5 x;
      for (int d = 0; d < kDim; ++d) {
        x[d] = centroid[d] + coeff * (centroid[d] - simplex[kDim][d]);
      }
      return x;
    };

    Lambda5 xr = blend(1.0);  // reflection
    double fr = objective(xr);
    if (fr < f[0]) {
      Lambda5 xe = blend(2.0);  // expansion
      double fe = objective(xe);
      if (fe < fr) {
        simplex[kDim] = xe;
        f[kDim] = fe;
      } else {
        simplex[kDim] = xr;
        f[kDim] = fr;
      }
      continue;
    }
    if (fr < f[kDim - 1]) {
      simplex[kDim] = xr;
      f[kDim] = fr;
      continue;
    }
    Lambda5 xc = blend(fr < f[kDim] ? 0.5 : -0.5);  // contraction
    double fc = objective(xc);
    if (fc < std::min(fr, f[kDim])) {
      simplex[kDim] = xc;
      f[kDim] = fc;
      continue;
    }
    for (int i = 1; i <= kDim; ++i) {  // shrink toward the best vertex
      for (int d = 0; d < kDim; ++d) {
        simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
      }
      f[i] = objective(simplex[i]);
    }
  }
  out.iterations = iter;
  out.x = simplex[0];
  out.f = f[0];
  return out;
}

}  // namespace

FitResult fit(const FitProblem& problem, std::uint64_t seed) {
  (void)seed;  // the procedure is deterministic; see the header note
  problem.check();

  // Out-of-box candidates are evaluated at their projection plus a smooth
  // quadratic charge, so a vertex near a face keeps a downhill pull back
  // into range instead of getting pinned on it.
  constexpr double kBoxPenaltyWeight = 10.0;
  auto objective = [&](const Lambda5& raw) {
    Lambda5 l = clamp_box(raw);
    double box_pen = 0.0;
    for (int d = 0; d < 5; ++d) {
      double v = raw[d] - l[d];
      box_pen += v * v;
    }
    box_pen *= kBoxPenaltyWeight;
    double excess = validity_excess(l);
    if (excess > 0.0) return 1e3 + 1e3 * excess + box_pen;
    return fit_chi2(problem, l) + box_pen;
  };

  // Coarse grid ranking: every combination over a small per-axis ladder.
  const double ladder[3] = {0.0, 0.02, 0.05};
  std::vector<std::pair<double, Lambda5>> ranked;
  Lambda5 point{};
  for (int i0 = 0; i0 < 3; ++i0)
    for (int i1 = 0; i1 < 3; ++i1)
      for (int i2 = 0; i2 < 3; ++i2)
        for (int i3 = 0; i3 < 3; ++i3)
          for (int i4 = 0; i4 < 3; ++i4) {
            point = {ladder[i0], ladder[i1], ladder[i2], ladder[i3], ladder[i4]};
            ranked.emplace_back(objective(point), point);
          }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  FitResult best;
  best.chi2 = std::numeric_limits<double>::infinity();
  int total_iterations = 0;

  // Each restart alternates simplex passes with pattern moves: when a pass
  // improves the iterate, its displacement is amplified along its own
  // direction for as long as the objective keeps dropping. Plain restarts
  // stall partway down the narrow curved valley this landscape develops;
  // the amplified moves walk its floor. Step sizes cycle from coarse to
  // fine so a move that re-opens progress gets refined again.
  const int n_restarts = 3;
  const int kMaxCycles = 60;
  const double kStopChi2 = 1e-18;
  for (int restart = 0; restart < n_restarts && best.chi2 > kStopChi2; ++restart) {
    Lambda5 x = ranked[restart].second;
    double fx = ranked[restart].first;
    bool converged = false;
    double step = 0.02;
    int stale = 0;
    for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
      NmRound r = nelder_mead_round(objective, x, step, 300);
      total_iterations += r.iterations;
      double f_entry = fx;
      if (r.f < fx) {
        Lambda5 move;
        for (int d = 0; d < 5; ++d) move[d] = r.x[d] - x[d];
        Lambda5 xb = r.x;
        double fb = r.f;
        for (double mult = 1.0; mult <= 64.0; mult *= 2.0) {
          Lambda5 y;
          for (int d = 0; d < 5; ++d) y[d] = r.x[d] + mult * move[d];
          double fy = objective(y);
          if (fy >= fb) break;
          xb = y;
          fb = fy;
        }
        x = xb;
        fx = fb;
      }
      converged = r.converged;
      stale = (fx < f_entry - 1e-20) ? 0 : stale + 1;
      if (fx <= kStopChi2 || stale >= 6) break;
      step *= 0.5;
      if (step < 2e-5) step = 0.02;
    }
    // Report the admissible projection with its penalty-free value.
    Lambda5 xc = clamp_box(x);
    double fc = objective(xc);
    if (fc < best.chi2) {
      best.lambdas = xc;
      best.chi2 = fc;
      best.converged = converged || fc <= kStopChi2;
    }
  }
  best.iterations = total_iterations;
  return best;
}

}  // namespace qem
