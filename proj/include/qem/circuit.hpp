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

#ifndef QEM_CIRCUIT_HPP_
#define QEM_CIRCUIT_HPP_

#include <array>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qem/linalg.hpp"

namespace qem {

// Native gate set: RZ(theta), sqrt-X, X, the generic one-qubit U1(theta,
// phi, lambda), CNOT, and BARRIER (a semantic no-op that pins ordering).
enum class GateKind { RZ, SX, X, U1, CNOT, BARRIER };

struct Gate {
  GateKind kind = GateKind::BARRIER;
  std::vector<int> qubits;
  std::vector<double> params;  // RZ: {theta}; U1: {theta, phi, lambda}

  static Gate rz(int q, double theta);
  static Gate sx(int q);
  static Gate x(int q);
  static Gate u1(int q, double theta, double phi, double lambda);
  static Gate cnot(int control, int target);
  static Gate barrier(std::vector<int> qs);

  bool is_single_qubit() const;
  int control() const;  // CNOT only
  int target() const;   // CNOT only
};

// Per-qubit measurement direction; None means the qubit is not measured.
enum class Basis { None, X, Y, Z };

char basis_char(Basis b);
Basis basis_from_char(char c);

struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> gates;
  std::vector<Basis> measure_basis;  // size n_qubits

  Circuit() = default;
  explicit Circuit(int n);

  // Validates qubit indices, angle finiteness and CNOT control != target.
  void add(Gate g);
  void add_all(const std::vector<Gate>& gs);
};

// Undirected set of physical junctions on which a CNOT may act.
struct CouplingMap {
  int n_qubits = 0;
  std::set<std::pair<int, int>> edges;  // stored as (min, max)

  static CouplingMap linear(int n);
  void add_edge(int a, int b);
  bool has_edge(int a, int b) const;
};

// Tracks where each logical qubit currently sits among the physical
// positions; updated by every SWAP. Starts as the identity placement.
struct LayoutTracker {
  std::vector<int> log_to_phys;  // log_to_phys[l] = physical position of l

  static LayoutTracker identity(int n);
  int n() const { return static_cast<int>(log_to_phys.size()); }
  int phys_of(int logical) const;
  int logical_at(int phys) const;
  // Exchanges the logical qubits sitting at physical positions pa and pb.
  void apply_swap(int pa, int pb);
  void check_bijection() const;  // throws when the permutation is corrupted
};

// Physical-position permutation of a routed segment: a qubit starting at
// position p ends at position out[p]. Computed from the layouts before and
// after the segment.
std::vector<int> position_permutation(const LayoutTracker& before, const LayoutTracker& after);

// Lists every CNOT whose junction is not an edge of the map (reported, not
// thrown).
std::vector<std::pair<int, int>> validate(const Circuit& c, const CouplingMap& map);

// SWAP(a, b) as three native CNOTs in the fixed orientation
// [CNOT(a,b), CNOT(b,a), CNOT(a,b)].
std::vector<Gate> decompose_swap(int a, int b);

// Keeps only CNOTs and barriers, preserving order.
Circuit strip_single_qubit_gates(const Circuit& c);

int count_cnots(const Circuit& c);

// Product of embedded gate matrices in application order; barriers and
// measurement bases excluded. Restricted to n_qubits <= 6.
ComplexMatrix circuit_unitary(const Circuit& c);

// Appends per-qubit rotations mapping each measured axis onto Z, built from
// native RZ/SX gates.
Circuit append_basis_rotation(const Circuit& c);

// Local matrix of a gate. For CNOT the local index convention puts the
// control on bit 0 and the target on bit 1, matching g.qubits order.
ComplexMatrix gate_matrix(const Gate& g);

ComplexMatrix u1_matrix(double theta, double phi, double lambda);
ComplexMatrix rz_matrix(double theta);
ComplexMatrix sx_matrix();
ComplexMatrix rx_matrix(double theta);
ComplexMatrix ry_matrix(double theta);
ComplexMatrix cnot_matrix();

// Decomposes an arbitrary 2x2 unitary into U1 angles (global phase dropped):
// u1_matrix(theta, phi, lambda) equals v up to a phase.
std::array<double, 3> u1_angles_from_unitary(const ComplexMatrix& v);

// Line-oriented text serialization, one gate per line:
//   QUBITS 3
//   RZ q0 1.5707963267948966
//   CNOT q0 q1
//   BARRIER q0 q1 q2
//   MEASURE q0 X
// Angles use the shortest decimal that round-trips bit-exactly.
std::string circuit_to_text(const Circuit& c);
Circuit circuit_from_text(const std::string& text);

std::string format_double(double v);       // shortest round-trippable decimal
double parse_double(const std::string& s); // strict; throws on trailing junk

}  // namespace qem

#endif  // QEM_CIRCUIT_HPP_
