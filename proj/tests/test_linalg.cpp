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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "qem/linalg.hpp"
#include "qem/rng.hpp"

using qem::Complex;
using qem::ComplexMatrix;
using qem::DensityMatrix;
using qem::PauliString;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Arbitrary fixed density matrix for property checks, built from a random
// Gram matrix so it is full rank.
DensityMatrix random_density(int n_qubits, std::uint64_t seed) {
  qem::Rng rng(seed);
  Eigen::Index dim = Eigen::Index(1) << n_qubits;
  ComplexMatrix a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = rng.normal_complex();
  }
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  return DensityMatrix(n_qubits, rho);
}

// Pure single-qubit state cos(t/2)|0> + sin(t/2)|1>.
ComplexMatrix bloch_state(double t) {
  Eigen::Vector2cd psi(std::cos(t / 2.0), std::sin(t / 2.0));
  return psi * psi.adjoint();
}

}  // namespace

TEST_CASE("kron follows the least-significant-qubit-first convention") {
  ComplexMatrix i4 = qem::kron(qem::pauli_i2(), qem::pauli_i2());
  CHECK(max_abs(i4 - ComplexMatrix::Identity(4, 4)) == 0.0);

  // The first factor acts on the more significant qubit: flipping qubit 1
  // moves basis index 0 to index 2.
  ComplexMatrix xi = qem::kron(qem::pauli_x(), qem::pauli_i2());
  Eigen::Vector4cd e0 = Eigen::Vector4cd::Zero();
  e0(0) = 1.0;
  Eigen::Vector4cd mapped = xi * e0;
  CHECK(std::abs(mapped(2) - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(mapped(0)) < 1e-15);

  ComplexMatrix zz = qem::kron(qem::pauli_z(), qem::pauli_z());
  CHECK(zz(0, 0) == Complex(1.0, 0.0));
  CHECK(zz(1, 1) == Complex(-1.0, 0.0));
  CHECK(zz(2, 2) == Complex(-1.0, 0.0));
  CHECK(zz(3, 3) == Complex(1.0, 0.0));
}

TEST_CASE("pauli_to_matrix matches the label convention") {
  ComplexMatrix z = qem::pauli_to_matrix(PauliString::from_label("Z"));
  CHECK(z(0, 0) == Complex(1.0, 0.0));
  CHECK(z(1, 1) == Complex(-1.0, 0.0));

  // Leftmost label character is qubit 0, the least significant factor.
  ComplexMatrix xi = qem::pauli_to_matrix(PauliString::from_label("XI"));
  CHECK(max_abs(xi - qem::kron(qem::pauli_i2(), qem::pauli_x())) < 1e-15);

  ComplexMatrix y = qem::pauli_to_matrix(PauliString::from_label("Y", Complex(0.0, -1.0)));
  CHECK(max_abs(y - Complex(0.0, -1.0) * qem::pauli_y()) < 1e-15);
}

TEST_CASE("pauli string products respect the group structure") {
  const char ops[] = {'I', 'X', 'Y', 'Z'};
  for (char a : ops) {
    for (char b : ops) {
      PauliString pa = PauliString::from_label(std::string(1, a));
      PauliString pb = PauliString::from_label(std::string(1, b));
      ComplexMatrix lhs = qem::pauli_to_matrix(pa.times(pb));
      ComplexMatrix rhs = qem::pauli_to_matrix(pa) * qem::pauli_to_matrix(pb);
      CHECK(max_abs(lhs - rhs) < 1e-14);
    }
  }
  for (char a0 : ops) {
    for (char a1 : ops) {
      for (char b0 : ops) {
        for (char b1 : ops) {
          PauliString pa = PauliString::from_label({a0, a1});
          PauliString pb = PauliString::from_label({b0, b1});
          ComplexMatrix lhs = qem::pauli_to_matrix(pa.times(pb));
          ComplexMatrix rhs = qem::pauli_to_matrix(pa) * qem::pauli_to_matrix(pb);
          CHECK(max_abs(lhs - rhs) < 1e-14);
        }
      }
    }
  }
}

TEST_CASE("commutation test agrees with the matrix commutator") {
  const char ops[] = {'I', 'X', 'Y', 'Z'};
  for (char a0 : ops) {
    for (char a1 : ops) {
      for (char b0 : ops) {
        for (char b1 : ops) {
          PauliString pa = PauliString::from_label({a0, a1});
          PauliString pb = PauliString::from_label({b0, b1});
          ComplexMatrix ma = qem::pauli_to_matrix(pa);
          ComplexMatrix mb = qem::pauli_to_matrix(pb);
          bool commutes = max_abs(ma * mb - mb * ma) < 1e-12;
          CHECK(pa.commutes_with(pb) == commutes);
        }
      }
    }
  }
}

TEST_CASE("apply_unitary embeds gates at the addressed qubits") {
  DensityMatrix rho = DensityMatrix::zero_state(2);
  DensityMatrix same = qem::apply_unitary(rho, qem::pauli_i2(), {1});
  CHECK(max_abs(same.mat - rho.mat) < 1e-15);

  DensityMatrix flipped = qem::apply_unitary(rho, qem::pauli_x(), {0});
  CHECK(std::abs(flipped.mat(1, 1) - Complex(1.0, 0.0)) < 1e-15);

  // Control on qubit 0: start from basis index 1 (control set), expect the
  // target to flip, landing on index 3.
  ComplexMatrix cnot = ComplexMatrix::Zero(4, 4);
  cnot(0, 0) = 1.0;
  cnot(2, 2) = 1.0;
  cnot(3, 1) = 1.0;
  cnot(1, 3) = 1.0;
  ComplexMatrix basis1 = ComplexMatrix::Zero(4, 4);
  basis1(1, 1) = 1.0;
  DensityMatrix excited(2, basis1);
  DensityMatrix after = qem::apply_unitary(excited, cnot, {0, 1});
  CHECK(std::abs(after.mat(3, 3) - Complex(1.0, 0.0)) < 1e-15);

  DensityMatrix r = random_density(3, 11);
  DensityMatrix u = qem::apply_unitary(r, cnot, {2, 0});
  CHECK(std::abs(u.mat.trace() - Complex(1.0, 0.0)) < 1e-12);
  u.check_valid();
}

TEST_CASE("apply_unitary rejects malformed addressing") {
  DensityMatrix rho = DensityMatrix::zero_state(2);
  CHECK_THROWS_AS(qem::apply_unitary(rho, qem::pauli_x(), {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(qem::apply_unitary(rho, qem::pauli_x(), {2}), std::invalid_argument);
  ComplexMatrix four = ComplexMatrix::Identity(4, 4);
  CHECK_THROWS_AS(qem::apply_unitary(rho, four, {0, 0}), std::invalid_argument);
}

TEST_CASE("partial_trace reduces correctly") {
  DensityMatrix rho = DensityMatrix::zero_state(2);
  DensityMatrix all = qem::partial_trace(rho, {0, 1});
  CHECK(max_abs(all.mat - rho.mat) < 1e-15);

  DensityMatrix q0 = qem::partial_trace(rho, {0});
  CHECK(q0.n_qubits == 1);
  CHECK(std::abs(q0.mat(0, 0) - Complex(1.0, 0.0)) < 1e-15);

  // Bell pair: either side alone is maximally mixed.
  ComplexMatrix bell = ComplexMatrix::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  DensityMatrix side = qem::partial_trace(DensityMatrix(2, bell), {0});
  CHECK(max_abs(side.mat - 0.5 * ComplexMatrix::Identity(2, 2)) < 1e-15);

  CHECK_THROWS_AS(qem::partial_trace(rho, {}), std::invalid_argument);
}

TEST_CASE("partial_trace ignores unitaries on discarded qubits") {
  DensityMatrix rho = random_density(3, 21);
  ComplexMatrix u = qem::hermitian_evolve(qem::pauli_y(), 0.7);
  DensityMatrix rotated = qem::apply_unitary(rho, u, {1});
  DensityMatrix a = qem::partial_trace(rho, {0, 2});
  DensityMatrix b = qem::partial_trace(rotated, {0, 2});
  CHECK(max_abs(a.mat - b.mat) < 1e-12);
}

TEST_CASE("expectation values match direct traces") {
  DensityMatrix zero = DensityMatrix::zero_state(1);
  CHECK(qem::expectation(zero, PauliString::from_label("Z")) == doctest::Approx(1.0));
  DensityMatrix mixed = DensityMatrix::maximally_mixed(1);
  CHECK(qem::expectation(mixed, PauliString::from_label("Z")) == doctest::Approx(0.0));

  // Product states factorize multi-qubit observables.
  double t0 = 0.9;
  double t2 = 2.1;
  ComplexMatrix prod = qem::kron(qem::kron(bloch_state(t2), bloch_state(0.3)), bloch_state(t0));
  DensityMatrix rho(3, prod);
  double x0 = std::sin(t0);
  double z2 = std::cos(t2);
  CHECK(qem::expectation(rho, PauliString::from_label("XIZ")) == doctest::Approx(x0 * z2).epsilon(1e-10));
}

TEST_CASE("hermitian_evolve produces the matrix exponential") {
  ComplexMatrix id = qem::hermitian_evolve(qem::pauli_z(), 0.0);
  CHECK(max_abs(id - ComplexMatrix::Identity(2, 2)) < 1e-12);

  ComplexMatrix u = qem::hermitian_evolve(qem::pauli_z(), M_PI / 2.0);
  CHECK(std::abs(u(0, 0) - std::exp(Complex(0.0, -M_PI / 2.0))) < 1e-12);
  CHECK(std::abs(u(1, 1) - std::exp(Complex(0.0, M_PI / 2.0))) < 1e-12);

  // Group property and commutation with the generator on a random Hermitian.
  qem::Rng rng(31);
  ComplexMatrix a(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) a(i, j) = rng.normal_complex();
  }
  ComplexMatrix h = a + a.adjoint();
  ComplexMatrix u1 = qem::hermitian_evolve(h, 0.37);
  ComplexMatrix u2 = qem::hermitian_evolve(h, 0.85);
  ComplexMatrix u12 = qem::hermitian_evolve(h, 0.37 + 0.85);
  CHECK(max_abs(u1 * u2 - u12) < 1e-10);
  CHECK(max_abs(u1 * h - h * u1) < 1e-10);
  CHECK(max_abs(u1.adjoint() * u1 - ComplexMatrix::Identity(8, 8)) < 1e-10);

  ComplexMatrix skew = a - a.adjoint();
  CHECK_THROWS_AS(qem::hermitian_evolve(skew, 1.0), std::invalid_argument);
}

TEST_CASE("density matrix validation rejects corrupted states") {
  DensityMatrix ok = random_density(2, 41);
  CHECK_NOTHROW(ok.check_valid());

  DensityMatrix off_trace = ok;
  off_trace.mat *= 1.5;
  CHECK_THROWS_AS(off_trace.check_valid(), std::runtime_error);

  DensityMatrix non_herm = ok;
  non_herm.mat(0, 1) += Complex(0.0, 1e-3);
  CHECK_THROWS_AS(non_herm.check_valid(), std::runtime_error);

  ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityMatrix(1, neg).check_valid(), std::runtime_error);
}

TEST_CASE("unitary_phase_distance ignores a global phase") {
  ComplexMatrix u = qem::hermitian_evolve(qem::pauli_x(), 0.61);
  ComplexMatrix v = std::exp(Complex(0.0, 1.234)) * u;
  CHECK(qem::unitary_phase_distance(u, v) < 1e-12);
  CHECK(qem::unitary_phase_distance(u, qem::pauli_z()) > 0.1);
}
