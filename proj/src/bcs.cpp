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

#include "qem/bcs.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

namespace qem {

void BcsParams::check() const {
  if (levels.size() < 2)
    throw std::invalid_argument("BcsParams: need at least 2 levels");
  if (!(dt > 0.0))
    throw std::invalid_argument("BcsParams: dt must be positive");
  if (g < 0.0)
    throw std::invalid_argument("BcsParams: coupling must be non-negative");
  for (double e : levels)
    if (!std::isfinite(e))
      throw std::invalid_argument("BcsParams: level energy is not finite");
}

ComplexMatrix build_hamiltonian(const BcsParams& p) {
  const int L = p.n_levels();
  if (L < 1 || L > 6)
    throw std::invalid_argument("build_hamiltonian: supported for 1..6 levels");
  const Eigen::Index d = Eigen::Index(1) << L;
  ComplexMatrix h = ComplexMatrix::Zero(d, d);
  for (int j = 0; j < L; ++j) {
    PauliString zj = PauliString::identity(L);
    zj.factors[static_cast<std::size_t>(j)] = PauliOp::Z;
    h -= (p.levels[static_cast<std::size_t>(j)] - p.g / 2.0) * pauli_to_matrix(zj);
  }
  for (int i = 0; i < L; ++i) {
    for (int j = i + 1; j < L; ++j) {
      PauliString xx = PauliString::identity(L);
      xx.factors[static_cast<std::size_t>(i)] = PauliOp::X;
      xx.factors[static_cast<std::size_t>(j)] = PauliOp::X;
      PauliString yy = PauliString::identity(L);
      yy.factors[static_cast<std::size_t>(i)] = PauliOp::Y;
      yy.factors[static_cast<std::size_t>(j)] = PauliOp::Y;
      h -= (p.g / 2.0) * (pauli_to_matrix(xx) + pauli_to_matrix(yy));
    }
  }
  return h;
}

double solve_gap(const BcsParams& p) {
  if (p.levels.empty()) throw std::invalid_argument("solve_gap: no levels");
  if (!(p.g > 0.0)) throw std::domain_error("solve_gap: requires g > 0");

  const auto rhs = [&](double delta) {
    double s = 0.0;
    for (double e : p.levels) s += 1.0 / (2.0 * std::sqrt(e * e + delta * delta));
    return p.g * s;
  };

  // A positive root exists iff the (decreasing) right-hand side exceeds 1 as
  // delta -> 0+. With a level at zero energy it diverges there.
  bool has_zero_level = false;
  double rhs_at_zero = 0.0;
  for (double e : p.levels) {
    if (e == 0.0)
      has_zero_level = true;
    else
      rhs_at_zero += p.g / (2.0 * std::abs(e));
  }
  if (!has_zero_level && rhs_at_zero <= 1.0)
    throw std::domain_error("solve_gap: no positive solution (coupling too weak)");

  double lo = 1e-12;
  double hi = p.g * static_cast<double>(p.levels.size());
  int guard = 0;
  while (rhs(hi) > 1.0) {
    hi *= 2.0;
    if (++guard > 200) throw std::runtime_error("solve_gap: bracket expansion failed");
  }
  while (hi - lo > 1e-13 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (rhs(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double delta = 0.5 * (lo + hi);
  if (std::abs(rhs(delta) - 1.0) > 1e-10)
    throw std::runtime_error("solve_gap: residual above tolerance");
  return delta;
}

MeanFieldState mean_field_angles(const BcsParams& p, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("mean_field_angles: delta must be positive");
  MeanFieldState mf;
  mf.delta = delta;
  mf.phi = 0.0;  // real positive gap
  mf.thetas.reserve(p.levels.size());
  for (double e : p.levels)
    mf.thetas.push_back(2.0 * std::atan((std::sqrt(e * e + delta * delta) - e) / delta));
  return mf;
}

Circuit prep_circuit(const MeanFieldState& mf) {
  const int L = static_cast<int>(mf.thetas.size());
  Circuit c(L);
  for (int q = 0; q < L; ++q) {
    c.add(Gate::u1(q, mf.thetas[static_cast<std::size_t>(q)], 0.0, 0.0));  // Ry(theta)
    c.add(Gate::rz(q, mf.phi));
  }
  return c;
}

namespace {

Gate rx_gate(int q, double theta) { return Gate::u1(q, theta, -M_PI / 2.0, M_PI / 2.0); }

void append_two_cnot_block(Circuit& c, double alpha, int a, int b) {
  // Conjugating exp(-i(alpha/2)(XX + ZZ)) by Rx(-pi/2) on both qubits turns
  // ZZ into YY and leaves XX alone; the inner part is the standard
  // CNOT (Rx on control, Rz on target) CNOT identity.
  c.add(rx_gate(a, M_PI / 2.0));
  c.add(rx_gate(b, M_PI / 2.0));
  c.add(Gate::cnot(a, b));
  c.add(rx_gate(a, alpha));
  c.add(Gate::rz(b, alpha));
  c.add(Gate::cnot(a, b));
  c.add(rx_gate(a, -M_PI / 2.0));
  c.add(rx_gate(b, -M_PI / 2.0));
}

void append_four_cnot_block(Circuit& c, double alpha, int a, int b) {
  // One conjugated ZZ exponential per axis: basis change O on both qubits,
  // CNOT, Rz(alpha) on the target, CNOT, basis change undone.
  // XX: O = H.
  c.add(Gate::u1(a, M_PI / 2.0, 0.0, M_PI));
  c.add(Gate::u1(b, M_PI / 2.0, 0.0, M_PI));
  c.add(Gate::cnot(a, b));
  c.add(Gate::rz(b, alpha));
  c.add(Gate::cnot(a, b));
  c.add(Gate::u1(a, M_PI / 2.0, 0.0, M_PI));
  c.add(Gate::u1(b, M_PI / 2.0, 0.0, M_PI));
  // YY: O = Rx(-pi/2), whose conjugation sends Z to -Y (the sign squares
  // away in the two-qubit product).
  c.add(rx_gate(a, -M_PI / 2.0));
  c.add(rx_gate(b, -M_PI / 2.0));
  c.add(Gate::cnot(a, b));
  c.add(Gate::rz(b, alpha));
  c.add(Gate::cnot(a, b));
  c.add(rx_gate(a, M_PI / 2.0));
  c.add(rx_gate(b, M_PI / 2.0));
}

}  // namespace

Circuit interaction_block(double alpha, int a, int b, int n_qubits, BlockForm form) {
  if (std::abs(a - b) != 1)
    throw std::invalid_argument("interaction_block: qubits must be adjacent");
  Circuit c(n_qubits);
  if (form == BlockForm::TwoCnot)
    append_two_cnot_block(c, alpha, a, b);
  else
    append_four_cnot_block(c, alpha, a, b);
  return c;
}

TrotterSchedule TrotterSchedule::initial(int n) {
  return {LayoutTracker::identity(n), false};
}

Circuit trotter_step(const BcsParams& p, TrotterSchedule& sched, BlockForm form) {
  p.check();
  const int L = p.n_levels();
  Circuit c(L);

  std::vector<int> all(static_cast<std::size_t>(L));
  for (int q = 0; q < L; ++q) all[static_cast<std::size_t>(q)] = q;
  c.add(Gate::barrier(all));

  // Single-qubit factors at the current placements.
  for (int l = 0; l < L; ++l) {
    const double theta = -p.dt * (2.0 * p.levels[static_cast<std::size_t>(l)] - p.g);
    c.add(Gate::rz(sched.layout.phys_of(l), theta));
  }

  if (p.g == 0.0) return c;  // no interaction blocks

  const double alpha = -p.g * p.dt;
  std::set<std::pair<int, int>> unmet;
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) unmet.insert({i, j});

  int swap_layers = 0;
  while (!unmet.empty()) {
    // Interact every adjacent unmet logical pair, scanning left to right
    // until a full sweep makes no progress.
    bool progress = true;
    while (progress) {
      progress = false;
      for (int pos = 0; pos + 1 < L; ++pos) {
        const int la = sched.layout.logical_at(pos);
        const int lb = sched.layout.logical_at(pos + 1);
        const std::pair<int, int> key{std::min(la, lb), std::max(la, lb)};
        if (unmet.count(key)) {
          const Circuit block = interaction_block(alpha, pos, pos + 1, L, form);
          c.add_all(block.gates);
          unmet.erase(key);
          progress = true;
        }
      }
    }
    if (unmet.empty()) break;

    // Full SWAP layer at the alternating offset; the parity persists across
    // steps so placements keep advancing.
    const int offset = sched.swap_offset_odd ? 1 : 0;
    sched.swap_offset_odd = !sched.swap_offset_odd;
    for (int pos = offset; pos + 1 < L; pos += 2) {
      c.add_all(decompose_swap(pos, pos + 1));
      sched.layout.apply_swap(pos, pos + 1);
    }
    if (++swap_layers > 4 * L)
      throw std::runtime_error("trotter_step: SWAP schedule failed to converge");
  }
  return c;
}

TrotterCircuit build_trotter_circuit(const BcsParams& p, const MeanFieldState& mf,
                                     int n_steps, BlockForm form) {
  p.check();
  if (n_steps < 0) throw std::invalid_argument("build_trotter_circuit: negative step count");
  TrotterCircuit out;
  out.circuit = prep_circuit(mf);
  TrotterSchedule sched = TrotterSchedule::initial(p.n_levels());
  for (int s = 0; s < n_steps; ++s) {
    out.step_gate_begin.push_back(out.circuit.gates.size());
    const Circuit step = trotter_step(p, sched, form);
    out.circuit.add_all(step.gates);
    out.layout_after_step.push_back(sched.layout);
  }
  out.final_layout = sched.layout;
  return out;
}

std::vector<DensityMatrix> exact_evolution(const BcsParams& p, const MeanFieldState& mf,
                                           const std::vector<double>& times) {
  if (p.n_levels() > 6)
    throw std::invalid_argument("exact_evolution: limited to 6 levels");
  const ComplexMatrix h = build_hamiltonian(p);
  const Circuit prep = prep_circuit(mf);
  DensityMatrix rho0 = DensityMatrix::zero_state(p.n_levels());
  for (const Gate& g : prep.gates)
    apply_matrix_inplace(rho0.mat, rho0.n_qubits, gate_matrix(g), g.qubits);

  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  for (double t : times) {
    const ComplexMatrix u = hermitian_evolve(h, t);
    DensityMatrix rho = rho0;
    rho.mat = u * rho0.mat * u.adjoint();
    out.push_back(std::move(rho));
  }
  return out;
}

}  // namespace qem
