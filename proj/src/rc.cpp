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

#include "qem/rc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "qem/rng.hpp"

namespace qem {

namespace {

// The sixteen corrections depend only on gate identities, so they are
// computed once and reused; the computation itself stays conjugation-based.
struct CorrectionTable {
  Correction entries[16];
};

Correction compute_correction(PauliOp p, PauliOp q) {
  // Local CNOT convention: control is bit 0, so p (x) q embeds as kron(Q, P).
  ComplexMatrix c = cnot_matrix();
  ComplexMatrix m = c * kron(pauli_op_matrix(q), pauli_op_matrix(p)) * c;
  for (int r = 0; r < 4; ++r) {
    for (int s = 0; s < 4; ++s) {
      ComplexMatrix b = kron(pauli_op_matrix(static_cast<PauliOp>(s)),
                             pauli_op_matrix(static_cast<PauliOp>(r)));
      // Find the scale at b's first nonzero entry, then check proportionality.
      Complex scale{0.0, 0.0};
      for (Eigen::Index i = 0; i < 4 && scale == Complex{0.0, 0.0}; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
          if (std::abs(b(i, j)) > 0.5) {
            scale = m(i, j) / b(i, j);
            break;
          }
        }
      }
      if (std::abs(std::abs(scale) - 1.0) > 1e-12) continue;
      if ((m - scale * b).cwiseAbs().maxCoeff() < 1e-12) {
        return Correction{static_cast<PauliOp>(r), static_cast<PauliOp>(s), scale};
      }
    }
  }
  throw std::logic_error("correction_for: conjugated Pauli pair did not match the Pauli group");
}

const CorrectionTable& correction_table() {
  static const CorrectionTable table = [] {
    CorrectionTable t;
    for (int p = 0; p < 4; ++p) {
      for (int q = 0; q < 4; ++q) {
        t.entries[p * 4 + q] =
            compute_correction(static_cast<PauliOp>(p), static_cast<PauliOp>(q));
      }
    }
    return t;
  }();
  return table;
}

PauliOp draw_pauli(Rng& rng) { return static_cast<PauliOp>(rng.uniform_int(4)); }

std::pair<int, int> junction_of(const Gate& g) {
  return {std::min(g.control(), g.target()), std::max(g.control(), g.target())};
}

// Shared dressing pass; `neighbors` is null for the standard twirl.
DressedCircuit dress(const Circuit& c, const NeighborMap* neighbors, std::uint64_t seed) {
  Rng rng(seed);
  DressedCircuit out;
  out.circuit = Circuit(c.n_qubits);
  out.circuit.measure_basis = c.measure_basis;

  for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
    const Gate& g = c.gates[gi];
    if (g.kind != GateKind::CNOT) {
      out.circuit.add(g);
      continue;
    }

    CnotDress dress_record;
    dress_record.base_gate_index = gi;
    dress_record.p = draw_pauli(rng);
    dress_record.q = draw_pauli(rng);
    Correction corr = correction_for(dress_record.p, dress_record.q);
    dress_record.r = corr.r;
    dress_record.s = corr.s;
    dress_record.phase = corr.phase;

    std::vector<int> dressed_qubits = {g.control(), g.target()};
    if (neighbors != nullptr) {
      auto it = neighbors->find(junction_of(g));
      if (it != neighbors->end()) {
        for (int nb : it->second) {
          if (nb == g.control() || nb == g.target()) {
            throw std::invalid_argument(
                "twirl_crosstalk: neighbor " + std::to_string(nb) +
                " collides with an active qubit of its own CNOT");
          }
          if (nb < 0 || nb >= c.n_qubits) {
            throw std::invalid_argument("twirl_crosstalk: neighbor index out of range");
          }
          CnotDress::Neighbor rec;
          rec.qubit = nb;
          rec.pauli = draw_pauli(rng);
          rec.axis = rng.uniform_int(3);
          dress_record.neighbors.push_back(rec);
          dressed_qubits.push_back(nb);
        }
      }
    }

    // Pre layer: active Pauli pair plus, per neighbor, Pauli then rotation.
    out.circuit.add(Gate::barrier(dressed_qubits));
    out.circuit.add(pauli_twirl_gate(g.control(), dress_record.p));
    out.circuit.add(pauli_twirl_gate(g.target(), dress_record.q));
    for (const auto& nb : dress_record.neighbors) {
      out.circuit.add(pauli_twirl_gate(nb.qubit, nb.pauli));
      out.circuit.add(axis_rotation_gate(nb.qubit, nb.axis, M_PI / 2.0));
    }
    out.circuit.add(Gate::barrier(dressed_qubits));

    out.circuit.add(g);

    // Post layer: exact inverses on neighbors, computed correction on the pair.
    out.circuit.add(Gate::barrier(dressed_qubits));
    for (const auto& nb : dress_record.neighbors) {
      out.circuit.add(axis_rotation_gate(nb.qubit, nb.axis, -M_PI / 2.0));
      out.circuit.add(pauli_twirl_gate(nb.qubit, nb.pauli));
    }
    out.circuit.add(pauli_twirl_gate(g.control(), dress_record.r));
    out.circuit.add(pauli_twirl_gate(g.target(), dress_record.s));
    out.circuit.add(Gate::barrier(dressed_qubits));

    out.config.cnots.push_back(std::move(dress_record));
  }
  return out;
}

}  // namespace

Correction correction_for(PauliOp p, PauliOp q) {
  return correction_table().entries[static_cast<int>(p) * 4 + static_cast<int>(q)];
}

std::string config_digest(const TwirlConfig& config) {
  // FNV-1a over a canonical byte rendering of the draws.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (const CnotDress& d : config.cnots) {
    mix(d.base_gate_index);
    mix(static_cast<std::uint64_t>(d.p) | (static_cast<std::uint64_t>(d.q) << 8) |
        (static_cast<std::uint64_t>(d.r) << 16) | (static_cast<std::uint64_t>(d.s) << 24));
    for (const auto& nb : d.neighbors) {
      mix(static_cast<std::uint64_t>(nb.qubit));
      mix(static_cast<std::uint64_t>(nb.pauli) | (static_cast<std::uint64_t>(nb.axis) << 8));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

NeighborMap linear_neighbor_map(int n_qubits) {
  if (n_qubits < 2) throw std::invalid_argument("linear_neighbor_map: need at least two qubits");
  NeighborMap map;
  for (int a = 0; a + 1 < n_qubits; ++a) {
    std::vector<int> nbs;
    for (int q = 0; q < n_qubits; ++q) {
      if (q != a && q != a + 1) nbs.push_back(q);
    }
    map[{a, a + 1}] = std::move(nbs);
  }
  return map;
}

Gate pauli_twirl_gate(int qubit, PauliOp op) {
  switch (op) {
    case PauliOp::I: return Gate::u1(qubit, 0.0, 0.0, 0.0);
    case PauliOp::X: return Gate::x(qubit);
    // U1(pi, pi/2, pi/2) is exactly Y; RZ(pi) is Z up to the global phase -i.
    case PauliOp::Y: return Gate::u1(qubit, M_PI, M_PI / 2.0, M_PI / 2.0);
    case PauliOp::Z: return Gate::rz(qubit, M_PI);
  }
  throw std::logic_error("pauli_twirl_gate: unreachable");
}

Gate axis_rotation_gate(int qubit, int axis, double angle) {
  switch (axis) {
    case 0: return Gate::u1(qubit, angle, -M_PI / 2.0, M_PI / 2.0);  // Rx
    case 1: return Gate::u1(qubit, angle, 0.0, 0.0);                 // Ry
    case 2: return Gate::rz(qubit, angle);                           // Rz
    default:
      throw std::invalid_argument("axis_rotation_gate: axis must be 0, 1 or 2");
  }
}

DressedCircuit twirl_standard(const Circuit& c, std::uint64_t seed) {
  return dress(c, nullptr, seed);
}

DressedCircuit twirl_crosstalk(const Circuit& c, const NeighborMap& neighbors,
                               std::uint64_t seed) {
  return dress(c, &neighbors, seed);
}

std::string rc_mode_name(RcMode mode) {
  switch (mode) {
    case RcMode::None: return "none";
    case RcMode::Standard: return "standard";
    case RcMode::Crosstalk: return "crosstalk";
  }
  throw std::logic_error("rc_mode_name: unreachable");
}

RcMode rc_mode_from_name(const std::string& name) {
  if (name == "none") return RcMode::None;
  if (name == "standard") return RcMode::Standard;
  if (name == "crosstalk") return RcMode::Crosstalk;
  throw std::invalid_argument("rc_mode_from_name: unknown mode \"" + name + "\"");
}

RcEnsemble generate_ensemble(const Circuit& c, RcMode mode, const NeighborMap& neighbors,
                             int count, std::uint64_t master_seed) {
  if (count < 1) throw std::invalid_argument("generate_ensemble: count must be >= 1");
  if (mode == RcMode::None) {
    throw std::invalid_argument("generate_ensemble: mode must be standard or crosstalk");
  }
  RcEnsemble out;
  out.mode = mode;
  out.master_seed = master_seed;
  out.member_seeds.reserve(count);
  out.members.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::uint64_t seed = Rng::split(master_seed, static_cast<std::uint64_t>(i));
    out.member_seeds.push_back(seed);
    out.members.push_back(mode == RcMode::Standard ? twirl_standard(c, seed)
                                                   : twirl_crosstalk(c, neighbors, seed));
  }
  return out;
}

void write_ensemble(const RcEnsemble& ensemble, const std::string& dir) {
  std::filesystem::path base(dir);
  if (!std::filesystem::is_directory(base)) {
    throw std::invalid_argument("write_ensemble: not a directory: " + dir);
  }
  nlohmann::json manifest;
  manifest["master_seed"] = ensemble.master_seed;
  manifest["mode"] = rc_mode_name(ensemble.mode);
  manifest["count"] = ensemble.members.size();
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    std::string name = "member_" + std::to_string(i) + ".txt";
    std::ofstream f(base / name);
    if (!f) throw std::runtime_error("write_ensemble: cannot open " + name);
    f << circuit_to_text(ensemble.members[i].circuit);
    members.push_back({{"file", name},
                       {"seed", ensemble.member_seeds[i]},
                       {"config_digest", config_digest(ensemble.members[i].config)}});
  }
  manifest["members"] = std::move(members);
  std::ofstream mf(base / "manifest.json");
  if (!mf) throw std::runtime_error("write_ensemble: cannot open manifest.json");
  mf << manifest.dump(2) << "\n";
}

}  // namespace qem
