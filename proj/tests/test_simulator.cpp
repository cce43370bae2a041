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

#include "qem/channels.hpp"
#include "qem/circuit.hpp"
#include "qem/linalg.hpp"
#include "qem/rng.hpp"
#include "qem/simulator.hpp"

using qem::Basis;
using qem::Circuit;
using qem::Complex;
using qem::ComplexMatrix;
using qem::DensityMatrix;
using qem::Gate;
using qem::NoiseModel;

namespace {

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

NoiseModel noiseless() {
  NoiseModel nm;
  nm.strict = false;
  return nm;
}

}  // namespace

TEST_CASE("noiseless simulation applies the circuit unitary") {
  Circuit flip(1);
  flip.add(Gate::x(0));
  DensityMatrix one = qem::simulate(flip, noiseless());
  CHECK(std::abs(one.mat(1, 1) - Complex(1.0, 0.0)) < 1e-14);

  Circuit bell(2);
  bell.add(Gate::u1(0, M_PI / 2.0, 0.0, M_PI));
  bell.add(Gate::cnot(0, 1));
  DensityMatrix rho = qem::simulate(bell, noiseless());
  CHECK(rho.mat(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rho.mat(3, 3).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rho.mat(0, 3).real() == doctest::Approx(0.5).epsilon(1e-12));
  rho.check_valid();
}

TEST_CASE("junction noise fires after each matching cnot") {
  double lambda = 0.2;
  NoiseModel nm;
  nm.junctions[{0, 1}] =
      qem::JunctionNoise{qem::Channel{qem::DepolarizingChannel{2, lambda}}, -1};

  Circuit c(2);
  c.add(Gate::u1(0, 0.7, 0.1, 0.2));
  c.add(Gate::cnot(0, 1));
  DensityMatrix noisy = qem::simulate(c, nm);
  DensityMatrix clean = qem::simulate(c, noiseless());
  ComplexMatrix expect =
      (1.0 - lambda) * clean.mat + lambda * qem::mix_qubits(clean.mat, 2, {0, 1});
  CHECK(max_abs(noisy.mat - expect) < 1e-13);
}

TEST_CASE("strict models refuse unassigned junctions") {
  NoiseModel nm;
  nm.junctions[{0, 1}] =
      qem::JunctionNoise{qem::Channel{qem::DepolarizingChannel{2, 0.1}}, -1};
  Circuit c(3);
  c.add(Gate::cnot(1, 2));
  CHECK_THROWS_AS(qem::simulate(c, nm), std::runtime_error);
  nm.strict = false;
  DensityMatrix rho = qem::simulate(c, nm);
  CHECK(std::abs(rho.mat(0, 0) - Complex(1.0, 0.0)) < 1e-14);
}

TEST_CASE("single-qubit depolarizing follows every one-qubit gate") {
  NoiseModel nm = noiseless();
  nm.lambda_single = 0.1;
  Circuit c(1);
  c.add(Gate::x(0));
  DensityMatrix rho = qem::simulate(c, nm);
  ComplexMatrix flipped = ComplexMatrix::Zero(2, 2);
  flipped(1, 1) = 1.0;
  ComplexMatrix expect =
      0.9 * flipped + 0.1 * 0.5 * ComplexMatrix::Identity(2, 2);
  CHECK(max_abs(rho.mat - expect) < 1e-13);
}

TEST_CASE("chained quasi-local junctions mix pair, neighbor and register") {
  double lc = 0.06, ln = 0.03, lg = 0.01;
  NoiseModel nm = qem::chain3_quasi_local(lc, 0.0, ln, 0.0, lg);

  Circuit c(3);
  c.add(Gate::u1(0, 1.0, 0.0, 0.0));
  c.add(Gate::u1(2, 0.5, 0.2, 0.1));
  c.add(Gate::cnot(0, 1));
  DensityMatrix noisy = qem::simulate(c, nm);
  DensityMatrix clean = qem::simulate(c, noiseless());
  ComplexMatrix expect = (1.0 - lc - ln - lg) * clean.mat +
                         lc * qem::mix_qubits(clean.mat, 3, {0, 1}) +
                         ln * qem::mix_qubits(clean.mat, 3, {2}) +
                         lg * qem::mix_qubits(clean.mat, 3, {0, 1, 2});
  CHECK(max_abs(noisy.mat - expect) < 1e-13);

  // The other junction points its neighbor term at qubit 0.
  NoiseModel nm2 = qem::chain3_quasi_local(0.0, lc, 0.0, ln, lg);
  Circuit c2(3);
  c2.add(Gate::u1(1, 0.9, 0.3, 0.0));
  c2.add(Gate::cnot(1, 2));
  DensityMatrix noisy2 = qem::simulate(c2, nm2);
  DensityMatrix clean2 = qem::simulate(c2, noiseless());
  ComplexMatrix expect2 = (1.0 - lc - ln - lg) * clean2.mat +
                          lc * qem::mix_qubits(clean2.mat, 3, {1, 2}) +
                          ln * qem::mix_qubits(clean2.mat, 3, {0}) +
                          lg * qem::mix_qubits(clean2.mat, 3, {0, 1, 2});
  CHECK(max_abs(noisy2.mat - expect2) < 1e-13);
}

TEST_CASE("snapshots equal prefix simulations") {
  NoiseModel nm = qem::chain3_quasi_local(0.02, 0.01, 0.01, 0.0, 0.005);
  Circuit c(3);
  c.add(Gate::u1(0, 0.4, 0.0, 0.0));
  c.add(Gate::cnot(0, 1));
  c.add(Gate::u1(1, 0.8, 0.1, 0.0));
  c.add(Gate::cnot(1, 2));
  c.add(Gate::x(2));

  std::vector<std::size_t> at = {0, 2, 5};
  std::vector<DensityMatrix> snaps = qem::simulate_snapshots(c, nm, at);
  // One snapshot per requested prefix plus the full-circuit state.
  REQUIRE(snaps.size() == 4);
  for (std::size_t i = 0; i < at.size(); ++i) {
    Circuit prefix(3);
    prefix.gates.assign(c.gates.begin(), c.gates.begin() + static_cast<std::ptrdiff_t>(at[i]));
    DensityMatrix direct = qem::simulate(prefix, nm);
    CHECK(max_abs(snaps[i].mat - direct.mat) < 1e-13);
  }
  CHECK(max_abs(snaps[3].mat - qem::simulate(c, nm).mat) < 1e-13);

  CHECK_THROWS_AS(qem::simulate_snapshots(c, nm, {3, 1}), std::invalid_argument);
  CHECK_THROWS_AS(qem::simulate_snapshots(c, nm, {6}), std::invalid_argument);
}

TEST_CASE("bitstrings round-trip with the first measured qubit leftmost") {
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(qem::index_of_bitstring(qem::bitstring_of_index(k, 3)) == k);
  }
  CHECK(qem::bitstring_of_index(1, 3) == "100");
  CHECK(qem::bitstring_of_index(4, 3) == "001");
  CHECK_THROWS_AS(qem::index_of_bitstring("01x"), std::invalid_argument);
}

TEST_CASE("readout confusion of symmetric flips is a product matrix") {
  qem::ReadoutModel rm = qem::ReadoutModel::symmetric(3, 0.02);
  Eigen::MatrixXd one = qem::readout_confusion(rm, {1});
  CHECK(one(0, 0) == doctest::Approx(0.98));
  CHECK(one(0, 1) == doctest::Approx(0.02));
  CHECK(one(1, 0) == doctest::Approx(0.02));
  CHECK(one(1, 1) == doctest::Approx(0.98));

  Eigen::MatrixXd two = qem::readout_confusion(rm, {0, 2});
  REQUIRE(two.rows() == 4);
  for (int col = 0; col < 4; ++col) {
    CHECK(two.col(col).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Flipping both bits costs two factors of the flip probability.
  CHECK(two(3, 0) == doctest::Approx(0.02 * 0.02));
  CHECK(two(0, 0) == doctest::Approx(0.98 * 0.98));

  qem::ReadoutModel ideal;
  CHECK(ideal.ideal());
  qem::ReadoutModel bad;
  bad.p01 = {1.5, 0.0};
  bad.p10 = {0.0, 0.0};
  CHECK_THROWS_AS(bad.check(2), std::invalid_argument);
}

TEST_CASE("sampling matches the analytic outcome distribution") {
  Circuit c(2);
  c.add(Gate::u1(0, 0.9, 0.0, 0.0));
  c.add(Gate::cnot(0, 1));
  c.measure_basis = {Basis::Z, Basis::Z};
  DensityMatrix rho = qem::simulate(c, noiseless());

  std::vector<int> measured;
  std::vector<double> p = qem::outcome_distribution(rho, c.measure_basis, &measured);
  CHECK(measured == std::vector<int>{0, 1});
  double total = 0.0;
  for (double v : p) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  qem::Rng rng(11);
  qem::Counts counts = qem::sample_counts(rho, c.measure_basis, 200000,
                                          Eigen::MatrixXd(), rng);
  CHECK_NOTHROW(counts.check());
  std::vector<double> freq = qem::distribution_from_counts(counts);
  CHECK(qem::total_variation(freq, p) < 0.01);

  // Expectation helpers agree with the density-matrix value exactly on the
  // same sampled data.
  double direct = qem::expectation_from_counts(counts, {0, 1});
  double via_dist = qem::expectation_from_distribution(freq, counts.measured, {0, 1});
  CHECK(direct == doctest::Approx(via_dist).epsilon(1e-14));
  double truth = qem::expectation(rho, qem::PauliString::from_label("ZZ"));
  CHECK(std::abs(direct - truth) < 0.01);
}

TEST_CASE("x-basis measurement rotates before sampling") {
  Circuit c(1);
  c.add(Gate::u1(0, M_PI / 2.0, 0.0, M_PI));  // |+> state
  c.measure_basis = {Basis::X};
  DensityMatrix rho = qem::simulate(c, noiseless());
  std::vector<double> p = qem::outcome_distribution(rho, c.measure_basis);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic for a fixed generator") {
  Circuit c(2);
  c.add(Gate::u1(0, 1.2, 0.0, 0.0));
  c.add(Gate::cnot(0, 1));
  c.measure_basis = {Basis::Z, Basis::Z};
  DensityMatrix rho = qem::simulate(c, noiseless());
  qem::Rng a(99);
  qem::Rng b(99);
  qem::Counts ca = qem::sample_counts(rho, c.measure_basis, 5000, Eigen::MatrixXd(), a);
  qem::Counts cb = qem::sample_counts(rho, c.measure_basis, 5000, Eigen::MatrixXd(), b);
  CHECK(ca.histogram == cb.histogram);
}

TEST_CASE("calibration estimates converge to the true confusion") {
  qem::ReadoutModel rm = qem::ReadoutModel::symmetric(2, 0.03);
  std::vector<int> measured = {0, 1};
  Eigen::MatrixXd truth = qem::readout_confusion(rm, measured);

  qem::Rng rng(21);
  Eigen::MatrixXd full =
      qem::calibration_confusion(rm, measured, 200000, qem::CalibrationMode::Full, rng);
  CHECK((full - truth).cwiseAbs().maxCoeff() < 0.01);

  qem::Rng rng2(22);
  Eigen::MatrixXd per_qubit = qem::calibration_confusion(rm, measured, 200000,
                                                         qem::CalibrationMode::PerQubit, rng2);
  CHECK((per_qubit - truth).cwiseAbs().maxCoeff() < 0.01);
  for (int col = 0; col < 4; ++col) {
    CHECK(full.col(col).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(per_qubit.col(col).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("unfolding inverts a known response exactly in the shot-free limit") {
  qem::ReadoutModel rm = qem::ReadoutModel::symmetric(2, 0.04);
  std::vector<int> measured = {0, 1};
  Eigen::MatrixXd confusion = qem::readout_confusion(rm, measured);

  std::vector<double> truth = {0.55, 0.05, 0.25, 0.15};
  Eigen::Map<const Eigen::VectorXd> tv(truth.data(), 4);
  Eigen::VectorXd smeared = confusion * tv;
  std::vector<double> observed(smeared.data(), smeared.data() + 4);

  std::vector<double> unfolded = qem::unfold(observed, confusion, 200);
  CHECK(qem::total_variation(unfolded, truth) < 1e-6);
  CHECK(qem::total_variation(observed, truth) > 0.01);
}

TEST_CASE("total variation is a bounded metric") {
  std::vector<double> a = {1.0, 0.0};
  std::vector<double> b = {0.0, 1.0};
  CHECK(qem::total_variation(a, b) == doctest::Approx(1.0));
  CHECK(qem::total_variation(a, a) == doctest::Approx(0.0));
  CHECK_THROWS(qem::total_variation(a, std::vector<double>{1.0, 0.0, 0.0}));
}

TEST_CASE("counts serialize to json and back") {
  qem::Counts counts;
  counts.shots = 10;
  counts.measured = {0, 2};
  counts.histogram = {{"00", 4LL}, {"10", 5LL}, {"11", 1LL}};
  qem::Counts back = qem::counts_from_json(qem::counts_to_json(counts));
  CHECK(back.shots == counts.shots);
  CHECK(back.measured == counts.measured);
  CHECK(back.histogram == counts.histogram);
}
