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

#ifndef QEM_LINALG_HPP_
#define QEM_LINALG_HPP_

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace qem {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

// Qubit ordering convention used everywhere in this library: qubit 0 is the
// LEAST significant bit of a basis-state index. A label string written
// left-to-right lists qubits 0, 1, 2, ... in that order, so "XZ" means X on
// qubit 0 and Z on qubit 1, and its matrix is kron(Z, X).

inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdSlack = 1e-9;

ComplexMatrix pauli_i2();
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

enum class PauliOp : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char pauli_op_char(PauliOp op);
PauliOp pauli_op_from_char(char c);
ComplexMatrix pauli_op_matrix(PauliOp op);

// A signed n-qubit Pauli operator: phase * factor_0 (x) factor_1 (x) ...
// with phase restricted to {+1, -1, +i, -i}.
struct PauliString {
  int n_qubits = 0;
  std::vector<PauliOp> factors;  // factors[q] acts on qubit q
  Complex phase{1.0, 0.0};

  static PauliString identity(int n);
  // label: leftmost character is qubit 0 (see the ordering note above).
  static PauliString from_label(const std::string& label, Complex phase = {1.0, 0.0});

  std::string label() const;
  bool is_identity_label() const;  // all factors I (phase ignored)

  // Group product including the accumulated phase: (*this) * rhs.
  PauliString times(const PauliString& rhs) const;
  bool commutes_with(const PauliString& rhs) const;
};

// 2^n x 2^n complex Hermitian PSD trace-1 state.
struct DensityMatrix {
  int n_qubits = 0;
  ComplexMatrix mat;

  DensityMatrix() = default;
  DensityMatrix(int n, ComplexMatrix m) : n_qubits(n), mat(std::move(m)) {}

  static DensityMatrix zero_state(int n);         // |0...0><0...0|
  static DensityMatrix maximally_mixed(int n);    // I / 2^n

  Eigen::Index dim() const { return mat.rows(); }

  // Throws std::runtime_error when Hermiticity (1e-10), unit trace (1e-10)
  // or positivity (eigenvalues >= -1e-9) fails.
  void check_valid() const;
};

// Kronecker product; `a` is the MORE significant tensor factor, so under the
// qubit-0-least-significant convention kron(b_on_q1, a_on_q0) acts a on
// qubit 0.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix pauli_to_matrix(const PauliString& p);

// rho <- U_embedded rho U_embedded^dagger with u acting on the listed qubits.
// qubits[0] is the least significant bit of u's own index space. Throws on
// dimension mismatch or duplicate/out-of-range indices.
DensityMatrix apply_unitary(const DensityMatrix& rho, const ComplexMatrix& u,
                            const std::vector<int>& qubits);

// Keeps the listed qubits (ascending order becomes the new qubit order) and
// traces out the rest. Throws when `keep` is empty or out of range.
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

// Tr(rho * P). Throws std::runtime_error when the imaginary part exceeds
// 1e-8 (corrupted state) and std::invalid_argument on size mismatch.
double expectation(const DensityMatrix& rho, const PauliString& obs);

// exp(-i h t) for Hermitian h via eigendecomposition. Throws when h is not
// Hermitian within 1e-10.
ComplexMatrix hermitian_evolve(const ComplexMatrix& h, double t);

// Max-abs entry of b - e^{i phi} a with the phase chosen to align the two
// matrices; zero iff the unitaries agree up to a global phase.
double unitary_phase_distance(const ComplexMatrix& a, const ComplexMatrix& b);

// ---------------------------------------------------------------------------
// In-place kernels. The pure functions above wrap these; the simulator calls
// them directly on its working matrix.
// ---------------------------------------------------------------------------

// rho <- M_emb rho M_emb^dagger for an arbitrary (not necessarily unitary)
// matrix m on the listed qubits.
void apply_matrix_inplace(ComplexMatrix& rho, int n_qubits, const ComplexMatrix& m,
                          const std::vector<int>& qubits);

// out += M_emb rho M_emb^dagger (used to accumulate Kraus terms).
void accumulate_matrix_conjugation(ComplexMatrix& out, const ComplexMatrix& rho,
                                   int n_qubits, const ComplexMatrix& m,
                                   const std::vector<int>& qubits);

// acc <- M_emb acc (left action only; used to build circuit unitaries).
void left_multiply_embedded(ComplexMatrix& acc, int n_qubits, const ComplexMatrix& m,
                            const std::vector<int>& qubits);

// Replaces the listed qubits by the maximally mixed state while keeping the
// marginal on the remaining qubits: rho -> Tr_q(rho) (x) I/2^|q|.
ComplexMatrix mix_qubits(const ComplexMatrix& rho, int n_qubits,
                         const std::vector<int>& qubits);

// Embedding helper shared by the kernels: offsets[m] is the full-space index
// offset of local index m for the given qubit subset, and rest_offsets
// enumerates the base indices of all non-subset bit patterns.
struct EmbedIndex {
  std::vector<std::int64_t> offsets;
  std::vector<std::int64_t> rest_offsets;
};
EmbedIndex embed_index(int n_qubits, const std::vector<int>& qubits);

}  // namespace qem

#endif  // QEM_LINALG_HPP_
