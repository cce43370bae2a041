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

#ifndef QEM_SIMULATOR_HPP_
#define QEM_SIMULATOR_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qem/channels.hpp"
#include "qem/circuit.hpp"
#include "qem/linalg.hpp"
#include "qem/rng.hpp"

namespace qem {

// Noise attached to one physical junction, applied after every CNOT acting
// there. For channels wider than the pair, `neighbor` names the third qubit;
// the channel's local qubit order is (junction min, junction max, neighbor).
struct JunctionNoise {
  Channel channel = DepolarizingChannel{2, 0.0};
  int neighbor = -1;
};

// Independent classical bit flips at measurement: p01[q] = P(read 1 | true 0)
// and p10[q] = P(read 0 | true 1). Empty vectors mean ideal readout.
struct ReadoutModel {
  std::vector<double> p01;
  std::vector<double> p10;

  bool ideal() const { return p01.empty() && p10.empty(); }
  static ReadoutModel symmetric(int n_qubits, double flip);
  void check(int n_qubits) const;
};

struct NoiseModel {
  std::map<std::pair<int, int>, JunctionNoise> junctions;  // key (min, max)
  // Strict mode treats a CNOT on an unassigned junction as an error;
  // permissive mode treats it as noiseless.
  bool strict = true;
  // Depolarizing strength attached to every single-qubit gate. The modeled
  // hardware keeps this at zero; nonzero values let users probe how much a
  // small 1-qubit error would shift results.
  double lambda_single = 0.0;
  ReadoutModel readout;

  void check(int n_qubits) const;
};

// Standard 3-qubit linear-chain model: a quasi-local channel on junction
// (0,1) with neighbor 2 and on junction (1,2) with neighbor 0, sharing one
// global rate.
NoiseModel chain3_quasi_local(double lc01, double lc12, double ln01, double ln12,
                              double lg);

// Density-matrix execution from |0...0> (or a caller-supplied state):
// single-qubit gates act noiselessly, every CNOT is followed by its
// junction's channel.
DensityMatrix simulate(const Circuit& c, const NoiseModel& nm);
DensityMatrix simulate_from(const Circuit& c, const NoiseModel& nm, DensityMatrix rho);

// Same execution with a state snapshot taken before each listed gate index
// plus one of the final state (snapshot i covers gates [0, at[i])). Indices
// must be nondecreasing. Lets a multi-step circuit yield all intermediate
// states in one pass.
std::vector<DensityMatrix> simulate_snapshots(const Circuit& c, const NoiseModel& nm,
                                              const std::vector<std::size_t>& at);

// Measurement histogram over the measured qubits. Bitstring keys list the
// measured qubits in ascending order, leftmost character first, '0'/'1' per
// qubit.
struct Counts {
  long long shots = 0;
  std::vector<int> measured;  // ascending qubit ids
  std::map<std::string, long long> histogram;

  void check() const;  // histogram totals must equal shots
};

std::string bitstring_of_index(std::size_t k, int m);
std::size_t index_of_bitstring(const std::string& s);

// Exact product-form confusion matrix of a readout model restricted to the
// measured qubits; columns indexed by true states, measured[0] is the least
// significant bit.
Eigen::MatrixXd readout_confusion(const ReadoutModel& rm, const std::vector<int>& measured);

// Rotates every measured qubit's basis onto Z, takes the diagonal outcome
// distribution, pushes it through the confusion matrix (pass an empty 0x0
// matrix for ideal readout) and draws shots. Measured qubits are those with
// a basis other than None.
Counts sample_counts(const DensityMatrix& rho, const std::vector<Basis>& bases,
                     long long shots, const Eigen::MatrixXd& confusion, Rng& rng);

// Exact outcome distribution (no shot noise, no readout error) in the same
// ordering as sample_counts histograms.
std::vector<double> outcome_distribution(const DensityMatrix& rho,
                                         const std::vector<Basis>& bases,
                                         std::vector<int>* measured_out = nullptr);

// Histogram to frequency vector indexed by bitstring integer.
std::vector<double> distribution_from_counts(const Counts& counts);

// +/-1-product expectation of a bit subset. `qubits` must be a subset of
// counts.measured.
double expectation_from_counts(const Counts& counts, const std::vector<int>& qubits);

// Same expectation taken from a frequency vector indexed like
// distribution_from_counts output (useful after unfolding).
double expectation_from_distribution(const std::vector<double>& dist,
                                     const std::vector<int>& measured,
                                     const std::vector<int>& qubits);

// Confusion-matrix estimation by basis-state preparations through the true
// readout model. Full mode runs 2^m preparations; per-qubit mode runs 2m and
// returns the tensor product of the per-qubit 2x2 estimates.
enum class CalibrationMode { Full, PerQubit };

Eigen::MatrixXd calibration_confusion(const ReadoutModel& truth,
                                      const std::vector<int>& measured,
                                      long long shots_per_prep, CalibrationMode mode,
                                      Rng& rng);

// Iterative Bayesian unfolding of a measured distribution through a
// column-stochastic confusion matrix. Starts from the uniform prior (or the
// given one), runs `iterations` rounds with early stop when successive
// iterates differ by less than 1e-8 in total variation. Mass is conserved
// exactly at every iteration. Throws when the matrix is ill-conditioned,
// reporting the condition estimate.
std::vector<double> unfold(const std::vector<double>& measured_dist,
                           const Eigen::MatrixXd& confusion, int iterations = 20,
                           const std::vector<double>* prior = nullptr);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

nlohmann::json counts_to_json(const Counts& counts);
Counts counts_from_json(const nlohmann::json& j);

}  // namespace qem

#endif  // QEM_SIMULATOR_HPP_
