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

#ifndef QEM_MITIGATION_HPP_
#define QEM_MITIGATION_HPP_

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/linalg.hpp"

namespace qem {

// Noise-estimation circuit: the CNOT skeleton of a source circuit wrapped in
// a random product state and its inverse. Noiselessly it implements exactly
// the skeleton's qubit permutation, so from |0...0> every Z observable reads
// +1, and its measured decay estimates the CNOT noise of the source circuit.
struct NecCircuit {
  Circuit circuit;            // prep + skeleton + inverse, all qubits Z-measured
  std::vector<int> bit_perm;  // skeleton permutation: qubit q ends at bit_perm[q]
  int n_cnots = 0;
};

// Strips the source circuit to its CNOT skeleton, recovers the skeleton's
// qubit permutation from its unitary, prepends seeded Haar-random one-qubit
// preparations and appends their inverses at the permuted positions. Throws
// when the skeleton is not a pure qubit permutation.
NecCircuit build_nec(const Circuit& c, std::uint64_t seed);

// Closed-form noisy NEC expectation under per-junction 2-qubit depolarizing
// noise of strength eps applied after every CNOT: a factor (1 - eps) for
// each CNOT whose pair overlaps the tracked positions of the measured
// qubits, with tracking relabeled through SWAP units. Accepts the full NEC
// or its bare skeleton; throws when the CNOT sequence does not decompose
// into interaction pairs and SWAP triples.
double nec_prefactor(const Circuit& c, const std::map<std::pair<int, int>, double>& eps,
                     const std::vector<int>& measured);

struct MitigationResult {
  double value = 0.0;
  double sigma = 0.0;
  bool reliable = true;
};

// value = o_noisy / e_noisy with uncertainty
//   sigma_m^2 = (o^2 sigma_e^2 + e^2 sigma_o^2) / e^4.
// A denominator below the floor is clamped to the floor magnitude and the
// result flagged unreliable instead of being rejected.
MitigationResult mitigate(double o_noisy, double e_noisy, double sigma_o, double sigma_e,
                          double denominator_floor = 1e-3);

// The uncertainty alone; throws when e is exactly zero.
double mitigation_uncertainty(double o, double e, double sigma_o, double sigma_e);

struct EnsembleStats {
  double mean = 0.0;
  double sigma = 0.0;  // standard error of the mean estimator
};

// Mean over twirl configurations and its total uncertainty: a shot-noise
// term summing (1 - v_r^2)/(N_s N_t^2) plus the across-config sample
// variance divided by N_t. Requires at least two values.
EnsembleStats ensemble_statistics(const std::vector<double>& per_config_values,
                                  long long shots);

// One-error enumeration behind the first-order noisy-expectation formula:
// for each CNOT in turn, the state right after it is replaced by the
// maximally mixed marginal on the junction pair (or on the junction's
// neighbor) and the circuit finishes noiselessly.
struct FirstOrderTerms {
  double base = 0.0;          // noiseless expectation
  double pair_sum = 0.0;      // sum over CNOTs of the pair-mixed expectations
  double neighbor_sum = 0.0;  // sum over CNOTs of the neighbor-mixed expectations
  int n_cnot = 0;
};

FirstOrderTerms one_error_terms(const Circuit& c,
                                const std::map<std::pair<int, int>, int>& neighbor_of,
                                const PauliString& obs);

// First-order expansion of the noisy expectation for uniform per-CNOT rates:
//   (1 - lambda_glob)^n [ base (1 - n (lc + ln)) + lc pair_sum + ln neighbor_sum ].
// Accuracy degrades beyond roughly lambda = 0.05 (second-order terms grow);
// a note is printed to stderr in that regime.
double first_order_prediction(const FirstOrderTerms& terms, double lambda_cnot,
                              double lambda_neigh, double lambda_glob);

}  // namespace qem

#endif  // QEM_MITIGATION_HPP_
