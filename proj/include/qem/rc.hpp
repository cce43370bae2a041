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

#ifndef QEM_RC_HPP_
#define QEM_RC_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qem/circuit.hpp"
#include "qem/linalg.hpp"

namespace qem {

// Post-CNOT correction pair: r (x) s times phase equals CNOT (p (x) q) CNOT.
struct Correction {
  PauliOp r = PauliOp::I;
  PauliOp s = PauliOp::I;
  Complex phase{1.0, 0.0};
};

// Computed by conjugating the 4x4 embedding of p (x) q with CNOT and
// matching the result against the Pauli group, never by table lookup.
Correction correction_for(PauliOp p, PauliOp q);

// Dressing drawn for a single CNOT: the active-pair twirl with its derived
// correction, plus one Pauli + rotation-axis pair per idle neighbor.
struct CnotDress {
  std::size_t base_gate_index = 0;  // position of the CNOT in the base circuit
  PauliOp p = PauliOp::I;           // pre-gate on the control
  PauliOp q = PauliOp::I;           // pre-gate on the target
  PauliOp r = PauliOp::I;           // correction on the control
  PauliOp s = PauliOp::I;           // correction on the target
  Complex phase{1.0, 0.0};          // conjugation phase, dropped in the circuit

  struct Neighbor {
    int qubit = 0;
    PauliOp pauli = PauliOp::I;
    int axis = 0;  // 0 = X, 1 = Y, 2 = Z
  };
  std::vector<Neighbor> neighbors;  // drawn independently per neighbor
};

struct TwirlConfig {
  std::vector<CnotDress> cnots;
};

// Stable content digest of a drawn configuration (hex), used in manifests.
std::string config_digest(const TwirlConfig& config);

// Junction (min, max) -> idle qubits dressed whenever a CNOT acts there.
using NeighborMap = std::map<std::pair<int, int>, std::vector<int>>;

// Neighbor assignment on a linear chain: every junction gets all remaining
// qubits of the register.
NeighborMap linear_neighbor_map(int n_qubits);

struct DressedCircuit {
  Circuit circuit;
  TwirlConfig config;
};

// Native-gate encodings of the twirl alphabet. Identity draws become
// explicit U1(0,0,0) placeholders so gate counts stay config-independent.
Gate pauli_twirl_gate(int qubit, PauliOp op);
Gate axis_rotation_gate(int qubit, int axis, double angle);

// Standard randomized compiling: around every CNOT, a uniformly drawn Pauli
// pair before and its computed correction after, fenced by barriers. The
// dressed unitary equals the base unitary up to a global phase.
DressedCircuit twirl_standard(const Circuit& c, std::uint64_t seed);

// Crosstalk extension: additionally dresses each junction neighbor with a
// Pauli followed by a pi/2 axis rotation before the CNOT, and the exact
// inverses after. Throws when a mapped neighbor is an active qubit of its
// own CNOT.
DressedCircuit twirl_crosstalk(const Circuit& c, const NeighborMap& neighbors,
                               std::uint64_t seed);

enum class RcMode { None, Standard, Crosstalk };

std::string rc_mode_name(RcMode mode);
RcMode rc_mode_from_name(const std::string& name);

struct RcEnsemble {
  RcMode mode = RcMode::Standard;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> member_seeds;  // split(master, i)
  std::vector<DressedCircuit> members;
};

// count independently dressed copies with per-member seeds derived from the
// master seed; bit-identical across runs and independent of threading.
RcEnsemble generate_ensemble(const Circuit& c, RcMode mode, const NeighborMap& neighbors,
                             int count, std::uint64_t master_seed);

// Writes member_<i>.txt circuit files plus manifest.json into an existing
// directory.
void write_ensemble(const RcEnsemble& ensemble, const std::string& dir);

}  // namespace qem

#endif  // QEM_RC_HPP_
