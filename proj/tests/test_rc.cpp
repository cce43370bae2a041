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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qem/channels.hpp"
#include "qem/circuit.hpp"
#include "qem/linalg.hpp"
#include "qem/rc.hpp"
#include "qem/rng.hpp"
#include "qem/simulator.hpp"

using qem::Circuit;
using qem::Complex;
using qem::ComplexMatrix;
using qem::Gate;
using qem::PauliOp;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

Circuit sample_circuit() {
  Circuit c(3);
  c.add(Gate::sx(0));
  c.add(Gate::rz(1, 0.4));
  c.add(Gate::cnot(0, 1));
  c.add(Gate::u1(2, 0.3, 0.1, -0.2));
  c.add(Gate::cnot(1, 2));
  c.add(Gate::cnot(1, 0));
  c.add(Gate::rz(0, -1.1));
  c.measure_basis = {qem::Basis::Z, qem::Basis::Z, qem::Basis::Z};
  return c;
}

const PauliOp kOps[4] = {PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z};

}  // namespace

TEST_CASE("pauli pairs conjugate through the cnot exactly") {
  ComplexMatrix c = qem::cnot_matrix();
  for (PauliOp p : kOps) {
    for (PauliOp q : kOps) {
      qem::Correction corr = qem::correction_for(p, q);
      ComplexMatrix lhs =
          c * qem::kron(qem::pauli_op_matrix(q), qem::pauli_op_matrix(p)) * c;
      ComplexMatrix rhs = corr.phase * qem::kron(qem::pauli_op_matrix(corr.s),
                                                 qem::pauli_op_matrix(corr.r));
      CHECK(max_abs(lhs - rhs) < 1e-12);
      CHECK(std::abs(std::abs(corr.phase) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("twirl gates realize their pauli and rotation matrices") {
  for (PauliOp op : kOps) {
    Gate g = qem::pauli_twirl_gate(0, op);
    CHECK(qem::unitary_phase_distance(qem::gate_matrix(g), qem::pauli_op_matrix(op)) < 1e-12);
  }
  for (int axis = 0; axis < 3; ++axis) {
    Gate g = qem::axis_rotation_gate(1, axis, M_PI / 2.0);
    CHECK(g.qubits[0] == 1);
    CHECK(qem::unitary_phase_distance(qem::gate_matrix(g),
                                      qem::axis_rotation(axis, M_PI / 2.0)) < 1e-12);
  }
}

TEST_CASE("standard twirling never changes the circuit unitary") {
  Circuit base = sample_circuit();
  ComplexMatrix u0 = qem::circuit_unitary(base);
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL, 12345ULL}) {
    qem::DressedCircuit d = qem::twirl_standard(base, seed);
    CHECK(qem::unitary_phase_distance(qem::circuit_unitary(d.circuit), u0) < 1e-10);
    CHECK(qem::count_cnots(d.circuit) == qem::count_cnots(base));
    CHECK(d.config.cnots.size() == 3);
    for (const qem::CnotDress& dress : d.config.cnots) {
      CHECK(base.gates[dress.base_gate_index].kind == qem::GateKind::CNOT);
      CHECK(dress.neighbors.empty());
    }
  }
}

TEST_CASE("twirl draws are seed-deterministic") {
  Circuit base = sample_circuit();
  qem::DressedCircuit a = qem::twirl_standard(base, 7);
  qem::DressedCircuit b = qem::twirl_standard(base, 7);
  CHECK(qem::config_digest(a.config) == qem::config_digest(b.config));
  CHECK(qem::circuit_to_text(a.circuit) == qem::circuit_to_text(b.circuit));
  qem::DressedCircuit c = qem::twirl_standard(base, 8);
  CHECK(qem::config_digest(a.config) != qem::config_digest(c.config));
}

TEST_CASE("neighbor map lists the off-junction qubits") {
  qem::NeighborMap map = qem::linear_neighbor_map(3);
  REQUIRE(map.size() == 2);
  CHECK(map.at({0, 1}) == std::vector<int>{2});
  CHECK(map.at({1, 2}) == std::vector<int>{0});
  CHECK_THROWS_AS(qem::linear_neighbor_map(1), std::invalid_argument);
}

TEST_CASE("crosstalk twirling dresses neighbors and keeps the unitary") {
  Circuit base = sample_circuit();
  ComplexMatrix u0 = qem::circuit_unitary(base);
  qem::NeighborMap map = qem::linear_neighbor_map(3);

  std::set<std::pair<int, int>> combos;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    qem::DressedCircuit d = qem::twirl_crosstalk(base, map, seed);
    if (seed < 8) {
      CHECK(qem::unitary_phase_distance(qem::circuit_unitary(d.circuit), u0) < 1e-10);
    }
    for (const qem::CnotDress& dress : d.config.cnots) {
      REQUIRE(dress.neighbors.size() == 1);
      const auto& nb = dress.neighbors[0];
      const Gate& g = base.gates[dress.base_gate_index];
      int lo = std::min(g.control(), g.target());
      int hi = std::max(g.control(), g.target());
      CHECK(nb.qubit == map.at({lo, hi})[0]);
      combos.insert({static_cast<int>(nb.pauli), nb.axis});
    }
  }
  // Independent uniform draws must eventually cover all pauli-axis pairs.
  CHECK(combos.size() == 12);
}

TEST_CASE("ensembles derive member seeds by splitting the master seed") {
  Circuit base = sample_circuit();
  qem::RcEnsemble ens =
      qem::generate_ensemble(base, qem::RcMode::Standard, {}, 8, 4242);
  REQUIRE(ens.members.size() == 8);
  REQUIRE(ens.member_seeds.size() == 8);
  std::set<std::string> digests;
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ens.member_seeds[i] == qem::Rng::split(4242, i));
    digests.insert(qem::config_digest(ens.members[i].config));
  }
  CHECK(digests.size() == 8);

  qem::RcEnsemble again =
      qem::generate_ensemble(base, qem::RcMode::Standard, {}, 8, 4242);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(qem::circuit_to_text(again.members[i].circuit) ==
          qem::circuit_to_text(ens.members[i].circuit));
  }
}

TEST_CASE("written ensembles can be read back gate for gate") {
  namespace fs = std::filesystem;
  Circuit base = sample_circuit();
  qem::RcEnsemble ens = qem::generate_ensemble(base, qem::RcMode::Crosstalk,
                                               qem::linear_neighbor_map(3), 3, 77);
  fs::path dir = fs::temp_directory_path() / "qem_test_ensemble";
  fs::remove_all(dir);
  fs::create_directories(dir);
  qem::write_ensemble(ens, dir.string());

  CHECK(fs::exists(dir / "manifest.json"));
  for (std::size_t i = 0; i < 3; ++i) {
    fs::path member = dir / ("member_" + std::to_string(i) + ".txt");
    REQUIRE(fs::exists(member));
    std::ifstream f(member);
    std::stringstream buf;
    buf << f.rdbuf();
    Circuit back = qem::circuit_from_text(buf.str());
    CHECK(qem::circuit_to_text(back) == qem::circuit_to_text(ens.members[i].circuit));
  }
  fs::remove_all(dir);
}

TEST_CASE("mode names round-trip and reject unknown strings") {
  for (qem::RcMode mode : {qem::RcMode::None, qem::RcMode::Standard, qem::RcMode::Crosstalk}) {
    CHECK(qem::rc_mode_from_name(qem::rc_mode_name(mode)) == mode);
  }
  CHECK_THROWS_AS(qem::rc_mode_from_name("fancy"), std::invalid_argument);
}

TEST_CASE("exhaustive dressing average equals the twirled channel") {
  // One noisy cnot, averaged over all 16 pauli dressings by explicit
  // construction, must match simulating under the twirl-averaged channel.
  qem::Rng rng(39);
  qem::KrausChannel noise = qem::random_cptp_channel(2, 3, rng);

  qem::NoiseModel noisy;
  noisy.junctions[{0, 1}] = qem::JunctionNoise{qem::Channel{noise}, -1};

  Circuit pre(2);
  pre.add(Gate::u1(0, 1.1, 0.2, -0.4));
  pre.add(Gate::u1(1, 0.6, -0.9, 0.3));

  ComplexMatrix acc = ComplexMatrix::Zero(4, 4);
  for (PauliOp p : kOps) {
    for (PauliOp q : kOps) {
      qem::Correction corr = qem::correction_for(p, q);
      Circuit c = pre;
      c.add(qem::pauli_twirl_gate(0, p));
      c.add(qem::pauli_twirl_gate(1, q));
      c.add(Gate::cnot(0, 1));
      c.add(qem::pauli_twirl_gate(0, corr.r));
      c.add(qem::pauli_twirl_gate(1, corr.s));
      acc += qem::simulate(c, noisy).mat;
    }
  }
  acc /= 16.0;

  qem::NoiseModel averaged;
  averaged.junctions[{0, 1}] =
      qem::JunctionNoise{qem::Channel{qem::pauli_twirl_average(noise)}, -1};
  Circuit bare = pre;
  bare.add(Gate::cnot(0, 1));
  ComplexMatrix direct = qem::simulate(bare, averaged).mat;
  CHECK(max_abs(acc - direct) < 1e-12);
}
