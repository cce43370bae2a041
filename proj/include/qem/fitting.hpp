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

#ifndef QEM_FITTING_HPP_
#define QEM_FITTING_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "qem/bcs.hpp"
#include "qem/linalg.hpp"

namespace qem {

// Channel parameters of the two-junction chain model in fixed order:
// (cnot_01, cnot_12, neigh_01, neigh_12, glob).
using Lambda5 = std::array<double, 5>;

// All nonempty qubit subsets ordered by size then lexicographically; for
// three qubits these are the seven Z-observable index sets.
std::vector<std::vector<int>> all_z_subsets(int n_qubits);

// Channel-exact time series of Z-product observables under the chain noise
// model: one density-matrix pass over the full Trotter circuit with a state
// snapshot at every step boundary. Rows follow `observables` (logical qubit
// subsets, tracked to their routed positions), columns are Trotter steps.
Eigen::MatrixXd forward_series(const BcsParams& p, const MeanFieldState& mf,
                               const Lambda5& lambdas,
                               const std::vector<std::vector<int>>& observables);

struct FitProblem {
  BcsParams bcs;
  MeanFieldState mf;
  std::vector<std::vector<int>> observables;  // logical qubit subsets
  Eigen::MatrixXd targets;                    // observables x steps

  void check() const;
};

// Simulated-minus-target over all (observable, step) cells, row-major.
std::vector<double> fit_residuals(const FitProblem& problem, const Lambda5& lambdas);

// Mean squared residual (the reported goodness-of-fit number).
double fit_chi2(const FitProblem& problem, const Lambda5& lambdas);

struct FitResult {
  Lambda5 lambdas{};
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free bounded minimization: a coarse parameter grid ranks
// starting points, then Nelder-Mead simplex runs from the best three with
// every iterate clamped into [0, 1]^5. Deterministic; the seed only relabels
// tie-breaking and is kept for interface stability.
FitResult fit(const FitProblem& problem, std::uint64_t seed = 0);

}  // namespace qem

#endif  // QEM_FITTING_HPP_
