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

#ifndef QEM_BCS_HPP_
#define QEM_BCS_HPP_

#include <vector>

#include "qem/circuit.hpp"
#include "qem/linalg.hpp"

namespace qem {

// Pairing model with one qubit per energy level: |1> marks an occupied pair.
// In Pauli form
//   H = -sum_j (eps_j - g/2) Z_j - (g/2) sum_{i<j} (X_i X_j + Y_i Y_j).
struct BcsParams {
  std::vector<double> levels;  // eps_j
  double g = 0.0;              // pairing strength, >= 0
  double dt = 0.0;             // Trotter step
  int n_steps = 0;

  int n_levels() const { return static_cast<int>(levels.size()); }
  // Full-model validity (circuit generation): >= 2 levels, dt > 0, g >= 0.
  void check() const;
};

// Product-state ansatz prod_i (u_i|0> + v_i e^{-i phi}|1>) parameterized by
// one polar angle per level plus a shared pairing phase.
struct MeanFieldState {
  double delta = 0.0;          // gap, >= 0
  std::vector<double> thetas;  // theta_i in [0, pi]
  double phi = 0.0;            // global pairing phase (0 for real gap)
};

// 2^L x 2^L Hermitian matrix of the Pauli-form Hamiltonian. L <= 6.
ComplexMatrix build_hamiltonian(const BcsParams& p);

// Positive root of 1 = g sum_j 1 / (2 sqrt(eps_j^2 + delta^2)), found by
// bracketed bisection (the right-hand side is strictly decreasing in delta).
// Throws std::domain_error when no positive solution exists.
double solve_gap(const BcsParams& p);

// theta_i = 2 atan((sqrt(eps_i^2 + delta^2) - eps_i) / delta); phi = 0 for
// a real positive gap.
MeanFieldState mean_field_angles(const BcsParams& p, double delta);

// Per-qubit Ry(theta_i) then Rz(phi); prepares the mean-field product state
// from |0...0>.
Circuit prep_circuit(const MeanFieldState& mf);

enum class BlockForm {
  TwoCnot,   // compressed form, 2 CNOTs
  FourCnot,  // one conjugated ZZ block per axis, 4 CNOTs
};

// Circuit for exp(-i (alpha/2)(XX + YY)) acting on adjacent physical
// positions a and b (|a - b| must be 1). Both forms implement the same
// unitary exactly.
Circuit interaction_block(double alpha, int a, int b, int n_qubits,
                          BlockForm form = BlockForm::TwoCnot);

// Mutable routing state carried across Trotter steps: the current placement
// of logical qubits plus the alternating offset of the next SWAP layer.
struct TrotterSchedule {
  LayoutTracker layout;
  bool swap_offset_odd = false;

  static TrotterSchedule initial(int n);
};

// One first-order Trotter step on a linear chain. Emits the single-qubit
// Rz factors (theta_j = -dt (2 eps_j - g)) at the current positions of the
// logical qubits, then interleaves nearest-neighbor interaction blocks
// (alpha = -g dt) with alternating-offset SWAP layers until every logical
// pair has interacted once. Updates the schedule in place. For 3 levels the
// step costs exactly 9 CNOTs.
Circuit trotter_step(const BcsParams& p, TrotterSchedule& sched,
                     BlockForm form = BlockForm::TwoCnot);

// Assembled experiment circuit: state preparation followed by n_steps
// Trotter steps, with the gate range and layout snapshot of every step.
struct TrotterCircuit {
  Circuit circuit;
  std::vector<std::size_t> step_gate_begin;  // index of each step's first gate
  std::vector<LayoutTracker> layout_after_step;
  LayoutTracker final_layout;
};

TrotterCircuit build_trotter_circuit(const BcsParams& p, const MeanFieldState& mf,
                                     int n_steps, BlockForm form = BlockForm::TwoCnot);

// Exact dynamics oracle: rho(t) = e^{-iHt} rho(0) e^{+iHt} for each listed
// time, with rho(0) the mean-field product state.
std::vector<DensityMatrix> exact_evolution(const BcsParams& p, const MeanFieldState& mf,
                                           const std::vector<double>& times);

}  // namespace qem

#endif  // QEM_BCS_HPP_
