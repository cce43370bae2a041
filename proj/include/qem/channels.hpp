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

#ifndef QEM_CHANNELS_HPP_
#define QEM_CHANNELS_HPP_

#include <variant>
#include <vector>

#include <json.hpp>

#include "qem/linalg.hpp"
#include "qem/rng.hpp"

namespace qem {

// Completely positive trace-preserving map as a Kraus operator set.
struct KrausChannel {
  int n_qubits = 0;
  std::vector<ComplexMatrix> kraus;

  static KrausChannel identity(int n);
  // Throws std::invalid_argument when sum M^dagger M deviates from the
  // identity by more than tol.
  void check_cptp(double tol = kHermTol) const;
};

// Probabilistic Pauli application, diagonal in the Pauli basis. Label index
// is base 4 with qubit 0 as the least significant digit (0=I,1=X,2=Y,3=Z).
struct PauliChannel {
  int n_qubits = 0;
  std::vector<double> probs;  // size 4^n

  static PauliChannel identity(int n);
  static std::size_t label_count(int n) { return std::size_t(1) << (2 * n); }
  PauliString label_of(std::size_t index) const;
  static std::size_t index_of(const PauliString& p);  // phase ignored
  // Throws when probabilities are negative beyond 1e-12 or do not sum to 1
  // within 1e-12.
  void check() const;
  KrausChannel to_kraus() const;
};

// E(rho) = (1 - lambda) rho + lambda I/2^n (x) Tr(rho); the parameter may
// exceed 1 up to 4^n/(4^n - 1), where the channel stays CPTP.
struct DepolarizingChannel {
  int n_qubits = 0;
  double lambda = 0.0;

  void check() const;
  PauliChannel to_pauli() const;
};

// Three-term depolarizing mixture attached to a CNOT junction: the active
// pair (i, j), the spectator neighbor k, and the whole triple.
//   E(rho) = (1 - lc - ln - lg) rho + lc I_ij/4 (x) Tr_ij(rho)
//          + ln I_k/2 (x) Tr_k(rho) + lg I_ijk/8 (x) Tr_ijk(rho)
struct QuasiLocalChannel {
  double lambda_cnot = 0.0;
  double lambda_neigh = 0.0;
  double lambda_glob = 0.0;
  int pair_a = 0;
  int pair_b = 1;
  int neighbor = 2;

  void check() const;  // lambdas >= 0 and their sum <= 1
  // Same channel as a 3-qubit Pauli channel in the local qubit order
  // (pair_a, pair_b, neighbor) -> (0, 1, 2).
  PauliChannel to_pauli_local() const;
};

using Channel = std::variant<KrausChannel, PauliChannel, DepolarizingChannel, QuasiLocalChannel>;

int channel_n_qubits(const Channel& ch);

// Applies the channel to the listed target qubits (targets[0] is the
// channel's local qubit 0). QuasiLocalChannel instead acts on its stored
// indices and the target list must be empty or match them.
DensityMatrix apply_channel(const DensityMatrix& rho, const Channel& ch,
                            const std::vector<int>& targets);

// In-place variant used by the simulator hot path.
void apply_channel_inplace(ComplexMatrix& rho, int n_qubits, const Channel& ch,
                           const std::vector<int>& targets);

// ---------------------------------------------------------------------------
// Twirl averaging (exact transforms over the full twirl groups)
// ---------------------------------------------------------------------------

// Pauli-twirled channel via the trace formula
//   prob(p) = (1/4^n) sum_M |Tr(M p)|^2.
PauliChannel pauli_twirl_average(const KrausChannel& ch);

// Brute-force counterpart: averages Ad_w^dag o E o Ad_w over all 4^n Pauli
// configurations w, returned as a Kraus mixture. Test oracle for the trace
// formula.
KrausChannel pauli_twirl_operational(const KrausChannel& ch);

// Combined Pauli (active qubits) + direction-averaged pi/2-rotation
// (neighbors) twirl via
//   prob(p) = (1/4^n) (1/3^{#neighbors}) sum_M sum_R |Tr(M R p R^dag)|^2
// with R ranging over per-neighbor axis choices. The result is a Pauli
// channel whose coefficients depend on neighbor labels only through
// identity vs non-identity.
PauliChannel crosstalk_twirl_average(const KrausChannel& ch,
                                     const std::vector<int>& neighbors);

// Brute-force counterpart over the exhaustive group: per active qubit all 4
// Paulis, per neighbor all 4 Paulis times 3 rotation axes.
KrausChannel crosstalk_twirl_operational(const KrausChannel& ch,
                                         const std::vector<int>& neighbors);

// Marginal of a twirled Pauli channel on one qubit, which for crosstalk
// twirling takes depolarizing form: lambda = 4 q / 3 with q the total
// non-identity weight on that qubit.
DepolarizingChannel marginal_on_neighbor(const PauliChannel& ch, int neighbor);

// Marginal on the two listed qubits (a 15-parameter 2-qubit Pauli channel).
PauliChannel marginal_on_active_pair(const PauliChannel& ch, int qubit_a, int qubit_b);

// One-qubit marginal as a Pauli channel (helper for marginal assertions).
PauliChannel marginal_on_qubit(const PauliChannel& ch, int qubit);

// ---------------------------------------------------------------------------
// Pauli transfer matrix
// ---------------------------------------------------------------------------

// R[i][j] = (1/2^n) Tr(P_i E(P_j)); real for CPTP maps. Twirled channels
// are diagonal here, which makes twirl assertions literal.
Eigen::MatrixXd ptm(const Channel& ch);

// Frobenius norm of the PTM difference; zero iff the channels agree as maps.
double ptm_distance(const Channel& a, const Channel& b);

// Random CPTP channel: Gaussian Kraus operators renormalized through
// S^{-1/2} with S = sum M^dag M. Full-measure coverage of channel space.
KrausChannel random_cptp_channel(int n_qubits, int n_kraus, Rng& rng);

// Axis rotations R_axis(angle) = exp(-i angle sigma_axis / 2); axis is
// 0=X, 1=Y, 2=Z.
ComplexMatrix axis_rotation(int axis, double angle);

// JSON round-trip: {"type": ..., "n_qubits": ..., parameters or Kraus
// matrices as [re, im] pair arrays}.
nlohmann::json channel_to_json(const Channel& ch);
Channel channel_from_json(const nlohmann::json& j);

}  // namespace qem

#endif  // QEM_CHANNELS_HPP_
