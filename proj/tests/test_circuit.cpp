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
#include <string>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/linalg.hpp"
#include "qem/rng.hpp"

using qem::Basis;
using qem::Circuit;
using qem::Complex;
using qem::ComplexMatrix;
using qem::Gate;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("elementary gate matrices are the expected unitaries") {
  ComplexMatrix sx2 = qem::sx_matrix() * qem::sx_matrix();
  CHECK(max_abs(sx2 - qem::pauli_x()) < 1e-15);

  ComplexMatrix h = qem::u1_matrix(M_PI / 2.0, 0.0, M_PI);
  ComplexMatrix h_ref(2, 2);
  h_ref << 1.0, 1.0, 1.0, -1.0;
  h_ref *= M_SQRT1_2;
  CHECK(max_abs(h - h_ref) < 1e-15);

  CHECK(qem::unitary_phase_distance(qem::rx_matrix(0.77),
                                    qem::hermitian_evolve(qem::pauli_x(), 0.77 / 2.0)) < 1e-12);
  CHECK(qem::unitary_phase_distance(qem::ry_matrix(0.77),
                                    qem::hermitian_evolve(qem::pauli_y(), 0.77 / 2.0)) < 1e-12);
  CHECK(qem::unitary_phase_distance(qem::rz_matrix(0.77),
                                    qem::hermitian_evolve(qem::pauli_z(), 0.77 / 2.0)) < 1e-12);

  ComplexMatrix x = qem::gate_matrix(Gate::x(0));
  CHECK(max_abs(x - qem::pauli_x()) < 1e-15);
}

TEST_CASE("u1 angle extraction round-trips an arbitrary unitary") {
  qem::Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix a(2, 2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) a(i, j) = rng.normal_complex();
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(a);
    ComplexMatrix u = qr.householderQ();
    auto angles = qem::u1_angles_from_unitary(u);
    ComplexMatrix back = qem::u1_matrix(angles[0], angles[1], angles[2]);
    CHECK(qem::unitary_phase_distance(u, back) < 1e-10);
  }
}

TEST_CASE("cnot acts with the first listed qubit as control") {
  Circuit c(2);
  c.add(Gate::cnot(0, 1));
  ComplexMatrix u = qem::circuit_unitary(c);
  Eigen::Vector4cd e1 = Eigen::Vector4cd::Zero();
  e1(1) = 1.0;  // qubit 0 set, qubit 1 clear
  Eigen::Vector4cd mapped = u * e1;
  CHECK(std::abs(mapped(3) - Complex(1.0, 0.0)) < 1e-15);

  Circuit r(2);
  r.add(Gate::cnot(1, 0));
  ComplexMatrix ur = qem::circuit_unitary(r);
  Eigen::Vector4cd e2 = Eigen::Vector4cd::Zero();
  e2(2) = 1.0;  // qubit 1 set
  CHECK(std::abs((ur * e2)(3) - Complex(1.0, 0.0)) < 1e-15);
}

TEST_CASE("swap decomposition uses three cnots and swaps") {
  std::vector<Gate> gates = qem::decompose_swap(0, 1);
  CHECK(gates.size() == 3);
  Circuit c(2);
  c.add_all(gates);
  CHECK(qem::count_cnots(c) == 3);
  ComplexMatrix u = qem::circuit_unitary(c);
  ComplexMatrix swap = ComplexMatrix::Zero(4, 4);
  swap(0, 0) = swap(3, 3) = 1.0;
  swap(1, 2) = swap(2, 1) = 1.0;
  CHECK(max_abs(u - swap) < 1e-12);
}

TEST_CASE("layout tracker keeps a consistent bijection") {
  qem::LayoutTracker lt = qem::LayoutTracker::identity(3);
  for (int q = 0; q < 3; ++q) {
    CHECK(lt.phys_of(q) == q);
    CHECK(lt.logical_at(q) == q);
  }
  lt.apply_swap(0, 1);
  CHECK(lt.phys_of(0) == 1);
  CHECK(lt.phys_of(1) == 0);
  CHECK(lt.logical_at(0) == 1);
  lt.apply_swap(1, 2);
  for (int q = 0; q < 3; ++q) CHECK(lt.logical_at(lt.phys_of(q)) == q);
  CHECK_NOTHROW(lt.check_bijection());

  qem::LayoutTracker broken = lt;
  broken.log_to_phys[0] = broken.log_to_phys[1];
  CHECK_THROWS(broken.check_bijection());
}

TEST_CASE("coupling map validation reports the offending pairs") {
  qem::CouplingMap map = qem::CouplingMap::linear(3);
  CHECK(map.has_edge(0, 1));
  CHECK(map.has_edge(2, 1));
  CHECK(!map.has_edge(0, 2));

  Circuit c(3);
  c.add(Gate::cnot(0, 1));
  c.add(Gate::cnot(0, 2));
  c.add(Gate::cnot(2, 1));
  auto bad = qem::validate(c, map);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0] == std::pair<int, int>(0, 2));
}

TEST_CASE("stripping single-qubit gates keeps the cnot sequence") {
  Circuit c(3);
  c.add(Gate::sx(0));
  c.add(Gate::cnot(0, 1));
  c.add(Gate::rz(1, 0.4));
  c.add(Gate::cnot(2, 1));
  c.add(Gate::u1(2, 0.1, 0.2, 0.3));
  Circuit s = qem::strip_single_qubit_gates(c);
  CHECK(qem::count_cnots(s) == 2);
  std::vector<std::pair<int, int>> pairs;
  for (const Gate& g : s.gates) {
    if (g.kind == qem::GateKind::CNOT) pairs.emplace_back(g.control(), g.target());
  }
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<int, int>(0, 1));
  CHECK(pairs[1] == std::pair<int, int>(2, 1));
}

TEST_CASE("basis rotations map the measured axis onto z") {
  for (Basis basis : {Basis::X, Basis::Y, Basis::Z}) {
    Circuit c(1);
    c.add(Gate::u1(0, 0.9, 0.4, 1.3));
    c.measure_basis = {basis};
    Circuit rotated = qem::append_basis_rotation(c);

    ComplexMatrix u = qem::circuit_unitary(c);
    ComplexMatrix ur = qem::circuit_unitary(rotated);
    ComplexMatrix rho0 = ComplexMatrix::Zero(2, 2);
    rho0(0, 0) = 1.0;
    qem::DensityMatrix plain(1, u * rho0 * u.adjoint());
    qem::DensityMatrix rot(1, ur * rho0 * ur.adjoint());

    const char* label = basis == Basis::X ? "X" : (basis == Basis::Y ? "Y" : "Z");
    double direct = qem::expectation(plain, qem::PauliString::from_label(label));
    double via_z = qem::expectation(rot, qem::PauliString::from_label("Z"));
    CHECK(direct == doctest::Approx(via_z).epsilon(1e-10));
  }
}

TEST_CASE("text serialization round-trips circuits exactly") {
  Circuit c(3);
  c.add(Gate::rz(0, 0.1));
  c.add(Gate::sx(1));
  c.add(Gate::x(2));
  c.add(Gate::u1(0, 0.25, -1.5, 3.75));
  c.add(Gate::cnot(1, 2));
  c.add(Gate::barrier({0, 1, 2}));
  c.add(Gate::cnot(2, 1));
  c.measure_basis = {Basis::X, Basis::Z, Basis::None};

  std::string text = qem::circuit_to_text(c);
  Circuit back = qem::circuit_from_text(text);
  CHECK(back.n_qubits == c.n_qubits);
  REQUIRE(back.gates.size() == c.gates.size());
  for (std::size_t i = 0; i < c.gates.size(); ++i) {
    CHECK(back.gates[i].kind == c.gates[i].kind);
    CHECK(back.gates[i].qubits == c.gates[i].qubits);
    REQUIRE(back.gates[i].params.size() == c.gates[i].params.size());
    for (std::size_t k = 0; k < c.gates[i].params.size(); ++k) {
      CHECK(back.gates[i].params[k] == c.gates[i].params[k]);
    }
  }
  CHECK(back.measure_basis == c.measure_basis);
}

TEST_CASE("double formatting is shortest round-trippable") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 0.0, 1e300, -7.25, M_PI}) {
    CHECK(qem::parse_double(qem::format_double(v)) == v);
  }
  CHECK(qem::format_double(0.1) == "0.1");
  CHECK(qem::format_double(-7.25) == "-7.25");
  CHECK_THROWS_AS(qem::parse_double("1.2x"), std::runtime_error);
  CHECK_THROWS_AS(qem::parse_double(""), std::runtime_error);
  CHECK_THROWS_AS(qem::parse_double("nan"), std::runtime_error);
}

TEST_CASE("basis characters round-trip") {
  for (Basis b : {Basis::X, Basis::Y, Basis::Z}) {
    CHECK(qem::basis_from_char(qem::basis_char(b)) == b);
  }
  // The unmeasured marker has no parse direction; it never appears in
  // serialized gate lines.
  CHECK(qem::basis_char(qem::Basis::None) == '-');
  CHECK_THROWS_AS(qem::basis_from_char('-'), std::invalid_argument);
  CHECK_THROWS_AS(qem::basis_from_char('q'), std::invalid_argument);
}

TEST_CASE("position permutations compose layouts") {
  qem::LayoutTracker before = qem::LayoutTracker::identity(3);
  qem::LayoutTracker after = before;
  after.apply_swap(0, 1);
  after.apply_swap(1, 2);
  std::vector<int> perm = qem::position_permutation(before, after);
  // perm[p] tells where the occupant of position p moved.
  for (int p = 0; p < 3; ++p) {
    int logical = before.logical_at(p);
    CHECK(after.phys_of(logical) == perm[p]);
  }
}
