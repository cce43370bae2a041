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
#include <string>
#include <vector>

#include "qem/bcs.hpp"
#include "qem/circuit.hpp"
#include "qem/linalg.hpp"

using qem::BcsParams;
using qem::Complex;
using qem::ComplexMatrix;
using qem::DensityMatrix;
using qem::PauliString;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

BcsParams paper_like_params(int n_steps = 15) {
  BcsParams p;
  p.levels = {-1.0, 0.0, 1.0};
  p.g = 0.5;
  p.dt = 0.2;
  p.n_steps = n_steps;
  return p;
}

// Pairing Hamiltonian assembled term by term from Pauli strings, kept
// separate from the library construction on purpose.
ComplexMatrix reference_hamiltonian(const BcsParams& p) {
  int n = p.n_levels();
  Eigen::Index dim = Eigen::Index(1) << n;
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (int j = 0; j < n; ++j) {
    PauliString z = PauliString::identity(n);
    z.factors[j] = qem::PauliOp::Z;
    h -= (p.levels[j] - p.g / 2.0) * qem::pauli_to_matrix(z);
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      PauliString xx = PauliString::identity(n);
      xx.factors[j] = qem::PauliOp::X;
      xx.factors[k] = qem::PauliOp::X;
      PauliString yy = PauliString::identity(n);
      yy.factors[j] = qem::PauliOp::Y;
      yy.factors[k] = qem::PauliOp::Y;
      h -= (p.g / 2.0) * (qem::pauli_to_matrix(xx) + qem::pauli_to_matrix(yy));
    }
  }
  return h;
}

double gap_equation_rhs(const BcsParams& p, double delta) {
  double s = 0.0;
  for (double e : p.levels) s += 1.0 / (2.0 * std::sqrt(e * e + delta * delta));
  return p.g * s;
}

// Bisection on the monotone gap equation, independent of the library solver.
double reference_gap(const BcsParams& p) {
  double lo = 1e-12;
  double hi = 1.0;
  while (gap_equation_rhs(p, hi) > 1.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (gap_equation_rhs(p, mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ComplexMatrix permutation_unitary(const std::vector<int>& perm) {
  int n = static_cast<int>(perm.size());
  Eigen::Index dim = Eigen::Index(1) << n;
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    Eigen::Index mapped = 0;
    for (int p = 0; p < n; ++p) {
      if ((k >> p) & 1) mapped |= Eigen::Index(1) << perm[static_cast<std::size_t>(p)];
    }
    m(mapped, k) = 1.0;
  }
  return m;
}

DensityMatrix prep_state(const qem::MeanFieldState& mf) {
  qem::Circuit prep = qem::prep_circuit(mf);
  ComplexMatrix u = qem::circuit_unitary(prep);
  Eigen::Index dim = u.rows();
  ComplexMatrix rho0 = ComplexMatrix::Zero(dim, dim);
  rho0(0, 0) = 1.0;
  int n = 0;
  while ((Eigen::Index(1) << n) < dim) ++n;
  return DensityMatrix(n, u * rho0 * u.adjoint());
}

}  // namespace

TEST_CASE("hamiltonian matches a term-by-term reference") {
  for (BcsParams p : {paper_like_params(), BcsParams{{0.3, -0.7}, 1.1, 0.1, 1}}) {
    ComplexMatrix h = qem::build_hamiltonian(p);
    CHECK(max_abs(h - reference_hamiltonian(p)) < 1e-12);
    CHECK(max_abs(h - h.adjoint()) < 1e-12);
  }
}

TEST_CASE("hamiltonian is diagonal without pairing") {
  BcsParams p{{-1.0, 0.0, 1.0}, 0.0, 0.2, 1};
  ComplexMatrix h = qem::build_hamiltonian(p);
  ComplexMatrix off = h - ComplexMatrix(h.diagonal().asDiagonal());
  CHECK(max_abs(off) == 0.0);
}

TEST_CASE("total magnetization commutes with the hamiltonian") {
  BcsParams p = paper_like_params();
  ComplexMatrix h = qem::build_hamiltonian(p);
  Eigen::Index dim = h.rows();
  ComplexMatrix mz = ComplexMatrix::Zero(dim, dim);
  for (int j = 0; j < p.n_levels(); ++j) {
    PauliString z = PauliString::identity(p.n_levels());
    z.factors[j] = qem::PauliOp::Z;
    mz += qem::pauli_to_matrix(z);
  }
  CHECK(max_abs(h * mz - mz * h) < 1e-12);
}

TEST_CASE("gap solver satisfies the self-consistency equation") {
  BcsParams p = paper_like_params();
  double delta = qem::solve_gap(p);
  CHECK(std::abs(delta - 0.46) < 0.01);
  CHECK(std::abs(gap_equation_rhs(p, delta) - 1.0) < 1e-10);
  CHECK(std::abs(delta - reference_gap(p)) < 1e-9);

  BcsParams stronger = p;
  stronger.g = 1.0;
  CHECK(qem::solve_gap(stronger) > delta);

  BcsParams single{{0.0}, 0.5, 0.2, 1};
  CHECK(qem::solve_gap(single) == doctest::Approx(0.25).epsilon(1e-10));

  BcsParams hopeless{{-1.0, 1.0}, 0.01, 0.2, 1};
  CHECK_THROWS(qem::solve_gap(hopeless));
}

TEST_CASE("mean field angles reproduce the occupation algebra") {
  BcsParams p = paper_like_params();
  double delta = qem::solve_gap(p);
  qem::MeanFieldState mf = qem::mean_field_angles(p, delta);
  CHECK(mf.phi == doctest::Approx(0.0));
  REQUIRE(mf.thetas.size() == 3);
  for (double t : mf.thetas) {
    CHECK(t >= 0.0);
    CHECK(t <= M_PI);
  }
  CHECK(mf.thetas[1] == doctest::Approx(M_PI / 2.0).epsilon(1e-12));

  BcsParams far{{1e9, 0.0}, 0.5, 0.2, 1};
  qem::MeanFieldState far_mf = qem::mean_field_angles(far, delta);
  CHECK(far_mf.thetas[0] < 1e-8);

  // The prepared state's polarization per level must equal eps/E.
  DensityMatrix rho = prep_state(mf);
  for (int j = 0; j < 3; ++j) {
    PauliString z = PauliString::identity(3);
    z.factors[j] = qem::PauliOp::Z;
    double expect = p.levels[j] / std::sqrt(p.levels[j] * p.levels[j] + delta * delta);
    CHECK(qem::expectation(rho, z) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("preparation circuit builds the intended product state") {
  qem::MeanFieldState closed;
  closed.delta = 0.1;
  closed.thetas = {0.0, 0.0};
  closed.phi = 0.0;
  DensityMatrix rho = prep_state(closed);
  CHECK(std::abs(rho.mat(0, 0) - Complex(1.0, 0.0)) < 1e-12);

  qem::MeanFieldState equator;
  equator.delta = 0.1;
  equator.thetas = {M_PI / 2.0};
  equator.phi = 0.0;
  DensityMatrix one = prep_state(equator);
  CHECK(qem::expectation(one, PauliString::from_label("X")) == doctest::Approx(1.0).epsilon(1e-10));

  // Against an explicit tensor product of Bloch vectors.
  qem::MeanFieldState mf;
  mf.delta = 0.3;
  mf.thetas = {0.4, 1.9, 2.6};
  mf.phi = 0.0;
  DensityMatrix circ = prep_state(mf);
  ComplexMatrix prod = ComplexMatrix::Ones(1, 1);
  for (int j = 2; j >= 0; --j) {
    Eigen::Vector2cd psi(std::cos(mf.thetas[static_cast<std::size_t>(j)] / 2.0),
                         std::sin(mf.thetas[static_cast<std::size_t>(j)] / 2.0));
    prod = qem::kron(prod, ComplexMatrix(psi * psi.adjoint()));
  }
  CHECK(max_abs(circ.mat - prod) < 1e-10);
}

TEST_CASE("interaction block equals the pair-hopping exponential") {
  double alpha = 0.37;
  qem::Circuit block = qem::interaction_block(alpha, 0, 1, 2);
  CHECK(qem::count_cnots(block) == 2);

  ComplexMatrix gen = qem::pauli_to_matrix(PauliString::from_label("XX")) +
                      qem::pauli_to_matrix(PauliString::from_label("YY"));
  ComplexMatrix target = qem::hermitian_evolve(gen, alpha / 2.0);
  CHECK(qem::unitary_phase_distance(qem::circuit_unitary(block), target) < 1e-10);

  qem::Circuit four = qem::interaction_block(alpha, 0, 1, 2, qem::BlockForm::FourCnot);
  CHECK(qem::count_cnots(four) <= 4);
  CHECK(qem::unitary_phase_distance(qem::circuit_unitary(four), target) < 1e-10);

  qem::Circuit trivial = qem::interaction_block(0.0, 0, 1, 2);
  CHECK(qem::unitary_phase_distance(qem::circuit_unitary(trivial),
                                    ComplexMatrix::Identity(4, 4)) < 1e-10);

  // Quarter-turn angle moves the excitation across the pair completely.
  ComplexMatrix hop = qem::circuit_unitary(qem::interaction_block(M_PI / 2.0, 0, 1, 2));
  Eigen::Vector4cd e1 = Eigen::Vector4cd::Zero();
  e1(1) = 1.0;
  CHECK(std::abs((hop * e1)(2)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("trotter step counts cnots and respects the chain") {
  BcsParams p = paper_like_params();
  auto sched = qem::TrotterSchedule::initial(3);
  qem::Circuit step = qem::trotter_step(p, sched);
  CHECK(qem::count_cnots(step) == 9);
  CHECK(qem::validate(step, qem::CouplingMap::linear(3)).empty());

  BcsParams free_p = p;
  free_p.g = 0.0;
  auto sched2 = qem::TrotterSchedule::initial(3);
  qem::Circuit free_step = qem::trotter_step(free_p, sched2);
  CHECK(qem::count_cnots(free_step) == 0);
}

TEST_CASE("one step approaches the exact propagator as dt shrinks") {
  // A single step equals the bit relabeling times e^{-i dt H} up to the
  // first-order splitting error, so the distance falls quadratically in dt.
  auto step_error = [](double dt) {
    BcsParams p = paper_like_params();
    p.dt = dt;
    auto sched = qem::TrotterSchedule::initial(3);
    qem::LayoutTracker start = sched.layout;
    qem::Circuit step = qem::trotter_step(p, sched);
    ComplexMatrix perm = permutation_unitary(qem::position_permutation(start, sched.layout));

    ComplexMatrix h = qem::build_hamiltonian(p);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    ComplexMatrix phases = ComplexMatrix::Zero(h.rows(), h.cols());
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
      phases(k, k) = std::exp(qem::Complex{0.0, -dt * es.eigenvalues()(k)});
    }
    ComplexMatrix propagator = es.eigenvectors() * phases * es.eigenvectors().adjoint();
    return qem::unitary_phase_distance(qem::circuit_unitary(step), perm * propagator);
  };
  double coarse = step_error(2e-3);
  double fine = step_error(1e-3);
  CHECK(coarse < 1e-4);
  CHECK(coarse / fine > 3.0);
  CHECK(coarse / fine < 5.0);
}

TEST_CASE("full trotter circuit tracks layouts and cnot budget") {
  BcsParams p = paper_like_params();
  qem::MeanFieldState mf = qem::mean_field_angles(p, qem::solve_gap(p));
  qem::TrotterCircuit tc = qem::build_trotter_circuit(p, mf, p.n_steps);
  CHECK(qem::count_cnots(tc.circuit) == 135);
  CHECK(tc.step_gate_begin.size() == static_cast<std::size_t>(p.n_steps));
  CHECK(tc.layout_after_step.size() == static_cast<std::size_t>(p.n_steps));
  CHECK(qem::validate(tc.circuit, qem::CouplingMap::linear(3)).empty());
  for (const auto& layout : tc.layout_after_step) CHECK_NOTHROW(layout.check_bijection());
  CHECK(tc.final_layout.log_to_phys == tc.layout_after_step.back().log_to_phys);

  // The single-qubit-stripped circuit reduces to the relabeling the tracker
  // reports: interaction cnot pairs cancel, swap triples remain.
  qem::Circuit skeleton = qem::strip_single_qubit_gates(tc.circuit);
  ComplexMatrix u = qem::circuit_unitary(skeleton);
  ComplexMatrix perm = permutation_unitary(
      qem::position_permutation(qem::LayoutTracker::identity(3), tc.final_layout));
  CHECK(qem::unitary_phase_distance(u, perm) < 1e-9);
}

TEST_CASE("exact evolution starts at the prep state and conserves charges") {
  BcsParams p = paper_like_params();
  qem::MeanFieldState mf = qem::mean_field_angles(p, qem::solve_gap(p));
  std::vector<double> times = {0.0, 0.5, 1.0, 2.0, 3.0};
  std::vector<DensityMatrix> states = qem::exact_evolution(p, mf, times);
  REQUIRE(states.size() == times.size());

  DensityMatrix rho0 = prep_state(mf);
  CHECK(max_abs(states[0].mat - rho0.mat) < 1e-10);

  ComplexMatrix h = qem::build_hamiltonian(p);
  double e0 = (states[0].mat * h).trace().real();
  PauliString z_total[3];
  double mz0 = 0.0;
  for (int j = 0; j < 3; ++j) {
    z_total[j] = PauliString::identity(3);
    z_total[j].factors[j] = qem::PauliOp::Z;
    mz0 += qem::expectation(states[0], z_total[j]);
  }
  for (const DensityMatrix& rho : states) {
    rho.check_valid();
    CHECK(std::abs((rho.mat * h).trace().real() - e0) < 1e-9);
    double mz = 0.0;
    for (int j = 0; j < 3; ++j) mz += qem::expectation(rho, z_total[j]);
    CHECK(std::abs(mz - mz0) < 1e-9);
  }
}

TEST_CASE("occupations freeze when pairing is off") {
  BcsParams p = paper_like_params();
  p.g = 0.0;
  qem::MeanFieldState mf;
  mf.delta = 0.0;
  mf.thetas = {0.7, 1.3, 2.2};
  mf.phi = 0.0;
  std::vector<DensityMatrix> states = qem::exact_evolution(p, mf, {0.0, 1.5, 3.0});
  for (int j = 0; j < 3; ++j) {
    PauliString z = PauliString::identity(3);
    z.factors[j] = qem::PauliOp::Z;
    double first = qem::expectation(states[0], z);
    for (const DensityMatrix& rho : states) {
      CHECK(qem::expectation(rho, z) == doctest::Approx(first).epsilon(1e-9));
    }
  }
}

TEST_CASE("trotterized dynamics stay near the exact oracle") {
  BcsParams p = paper_like_params();
  qem::MeanFieldState mf = qem::mean_field_angles(p, qem::solve_gap(p));
  qem::TrotterCircuit tc = qem::build_trotter_circuit(p, mf, p.n_steps);

  std::vector<double> times;
  for (int t = 1; t <= p.n_steps; ++t) times.push_back(p.dt * t);
  std::vector<DensityMatrix> exact = qem::exact_evolution(p, mf, times);

  ComplexMatrix rho = ComplexMatrix::Zero(8, 8);
  rho(0, 0) = 1.0;
  double worst = 0.0;
  std::size_t gi = 0;
  for (int t = 1; t <= p.n_steps; ++t) {
    std::size_t end = t < p.n_steps ? tc.step_gate_begin[static_cast<std::size_t>(t)]
                                    : tc.circuit.gates.size();
    qem::Circuit chunk(3);
    chunk.gates.assign(tc.circuit.gates.begin() + static_cast<std::ptrdiff_t>(gi),
                       tc.circuit.gates.begin() + static_cast<std::ptrdiff_t>(end));
    ComplexMatrix u = qem::circuit_unitary(chunk);
    rho = u * rho * u.adjoint();
    gi = end;

    PauliString x0 = PauliString::identity(3);
    x0.factors[tc.layout_after_step[static_cast<std::size_t>(t - 1)].phys_of(0)] =
        qem::PauliOp::X;
    double approx = qem::expectation(DensityMatrix(3, rho), x0);
    double truth = qem::expectation(exact[static_cast<std::size_t>(t - 1)],
                                    PauliString::from_label("XII"));
    worst = std::max(worst, std::abs(approx - truth));
  }
  // First-order stepping at dt = 0.2 drifts visibly but stays bounded.
  CHECK(worst > 1e-4);
  CHECK(worst < 0.35);
}
