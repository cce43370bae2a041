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

#include "qem/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

#include "qem/rng.hpp"

namespace qem {

namespace {

// Reads the skeleton's basis permutation sigma from its unitary and checks
// that sigma is induced by a permutation of the qubits.
std::vector<int> extract_bit_permutation(const Circuit& skeleton) {
  ComplexMatrix u = circuit_unitary(skeleton);
  Eigen::Index dim = u.rows();
  int n = skeleton.n_qubits;

  std::vector<Eigen::Index> sigma(dim, -1);
  for (Eigen::Index col = 0; col < dim; ++col) {
    Eigen::Index hit = -1;
    for (Eigen::Index row = 0; row < dim; ++row) {
      double a = std::abs(u(row, col));
      if (a > 0.5) {
        if (std::abs(u(row, col) - Complex{1.0, 0.0}) > 1e-10 || hit >= 0) {
          hit = -2;
          break;
        }
        hit = row;
      } else if (a > 1e-10) {
        hit = -2;
        break;
      }
    }
    if (hit < 0) {
      throw std::invalid_argument(
          "build_nec: skeleton unitary is not a basis permutation; layout unknown");
    }
    sigma[col] = hit;
  }

  std::vector<int> perm(n, -1);
  for (int q = 0; q < n; ++q) {
    Eigen::Index image = sigma[Eigen::Index(1) << q];
    if (image <= 0 || (image & (image - 1)) != 0) {
      throw std::invalid_argument(
          "build_nec: skeleton permutation does not act qubit-wise; layout unknown");
    }
    int p = 0;
    while ((Eigen::Index(1) << p) != image) ++p;
    perm[q] = p;
  }
  // The single-bit images determine the map only if sigma is linear; verify
  // against every basis state.
  for (Eigen::Index x = 0; x < dim; ++x) {
    Eigen::Index expect = 0;
    for (int q = 0; q < n; ++q) {
      if ((x >> q) & 1) expect |= Eigen::Index(1) << perm[q];
    }
    if (sigma[x] != expect) {
      throw std::invalid_argument(
          "build_nec: skeleton permutation does not act qubit-wise; layout unknown");
    }
  }
  return perm;
}

struct SkeletonUnit {
  int a = 0;  // junction pair, a < b
  int b = 0;
  int n_cnots = 0;  // 2 for an interaction pair, 3 for a SWAP
  bool is_swap = false;
};

std::vector<SkeletonUnit> parse_units(const std::vector<Gate>& cnots) {
  std::vector<SkeletonUnit> units;
  std::size_t i = 0;
  while (i < cnots.size()) {
    int c0 = cnots[i].control();
    int t0 = cnots[i].target();
    // SWAP pattern (a,b), (b,a), (a,b) takes precedence; an interaction
    // pair repeats the same orientation, so the two cannot be confused.
    if (i + 2 < cnots.size() && cnots[i + 1].control() == t0 && cnots[i + 1].target() == c0 &&
        cnots[i + 2].control() == c0 && cnots[i + 2].target() == t0) {
      units.push_back({std::min(c0, t0), std::max(c0, t0), 3, true});
      i += 3;
      continue;
    }
    if (i + 1 < cnots.size() && cnots[i + 1].control() == c0 && cnots[i + 1].target() == t0) {
      units.push_back({std::min(c0, t0), std::max(c0, t0), 2, false});
      i += 2;
      continue;
    }
    throw std::invalid_argument(
        "nec_prefactor: CNOT sequence does not decompose into interaction pairs and SWAPs");
  }
  return units;
}

}  // namespace

NecCircuit build_nec(const Circuit& c, std::uint64_t seed) {
  Circuit skeleton = strip_single_qubit_gates(c);
  NecCircuit out;
  out.bit_perm = extract_bit_permutation(skeleton);
  out.n_cnots = count_cnots(skeleton);

  int n = c.n_qubits;
  Rng rng(seed);
  std::vector<ComplexMatrix> preps(n);
  for (int q = 0; q < n; ++q) {
    // Haar-random pure state: normalized complex Gaussian pair as the first
    // column, completed to a unitary.
    Complex a = rng.normal_complex();
    Complex b = rng.normal_complex();
    double norm = std::sqrt(std::norm(a) + std::norm(b));
    a /= norm;
    b /= norm;
    ComplexMatrix v(2, 2);
    v << a, -std::conj(b), b, std::conj(a);
    preps[q] = v;
  }

  Circuit nec(n);
  std::vector<int> all(n);
  for (int q = 0; q < n; ++q) all[q] = q;
  for (int q = 0; q < n; ++q) {
    auto ang = u1_angles_from_unitary(preps[q]);
    nec.add(Gate::u1(q, ang[0], ang[1], ang[2]));
  }
  nec.add(Gate::barrier(all));
  for (const Gate& g : skeleton.gates) nec.add(g);
  nec.add(Gate::barrier(all));
  for (int q = 0; q < n; ++q) {
    auto ang = u1_angles_from_unitary(ComplexMatrix(preps[q].adjoint()));
    nec.add(Gate::u1(out.bit_perm[q], ang[0], ang[1], ang[2]));
  }
  nec.measure_basis.assign(n, Basis::Z);
  out.circuit = std::move(nec);
  return out;
}

double nec_prefactor(const Circuit& c, const std::map<std::pair<int, int>, double>& eps,
                     const std::vector<int>& measured) {
  Circuit skeleton = strip_single_qubit_gates(c);
  std::vector<Gate> cnots;
  for (const Gate& g : skeleton.gates) {
    if (g.kind == GateKind::CNOT) cnots.push_back(g);
  }
  std::vector<SkeletonUnit> units = parse_units(cnots);

  std::set<int> tracked;
  for (int q : measured) {
    if (q < 0 || q >= c.n_qubits) {
      throw std::invalid_argument("nec_prefactor: measured qubit out of range");
    }
    tracked.insert(q);
  }

  // Heisenberg pullback from the measurement: per CNOT the depolarizing term
  // contributes (1 - eps) while the observable is traceless on the junction
  // pair, which holds exactly when the tracked positions touch the pair;
  // SWAP units relabel the tracked positions.
  double factor = 1.0;
  for (auto it = units.rbegin(); it != units.rend(); ++it) {
    bool touches = tracked.count(it->a) > 0 || tracked.count(it->b) > 0;
    if (touches) {
      auto e = eps.find({it->a, it->b});
      if (e == eps.end()) {
        throw std::invalid_argument("nec_prefactor: no noise rate for junction (" +
                                    std::to_string(it->a) + ", " + std::to_string(it->b) + ")");
      }
      factor *= std::pow(1.0 - e->second, it->n_cnots);
    }
    if (it->is_swap) {
      bool has_a = tracked.count(it->a) > 0;
      bool has_b = tracked.count(it->b) > 0;
      if (has_a != has_b) {
        if (has_a) {
          tracked.erase(it->a);
          tracked.insert(it->b);
        } else {
          tracked.erase(it->b);
          tracked.insert(it->a);
        }
      }
    }
  }
  return factor;
}

MitigationResult mitigate(double o_noisy, double e_noisy, double sigma_o, double sigma_e,
                          double denominator_floor) {
  if (denominator_floor <= 0.0) {
    throw std::invalid_argument("mitigate: denominator floor must be positive");
  }
  MitigationResult out;
  double e = e_noisy;
  if (std::abs(e) < denominator_floor) {
    out.reliable = false;
    e = std::copysign(denominator_floor, e == 0.0 ? 1.0 : e);
  }
  out.value = o_noisy / e;
  out.sigma = mitigation_uncertainty(o_noisy, e, sigma_o, sigma_e);
  return out;
}

double mitigation_uncertainty(double o, double e, double sigma_o, double sigma_e) {
  if (e == 0.0) throw std::invalid_argument("mitigation_uncertainty: zero denominator");
  double e2 = e * e;
  return std::sqrt(o * o * sigma_e * sigma_e + e2 * sigma_o * sigma_o) / e2;
}

EnsembleStats ensemble_statistics(const std::vector<double>& per_config_values,
                                  long long shots) {
  std::size_t n_t = per_config_values.size();
  if (n_t < 2) {
    throw std::invalid_argument("ensemble_statistics: need at least two configurations");
  }
  if (shots < 1) throw std::invalid_argument("ensemble_statistics: shots must be >= 1");

  double mean = 0.0;
  for (double v : per_config_values) mean += v;
  mean /= static_cast<double>(n_t);

  double shot_term = 0.0;
  double var_sample = 0.0;
  for (double v : per_config_values) {
    shot_term += std::max(0.0, 1.0 - v * v);
    var_sample += (v - mean) * (v - mean);
  }
  shot_term /= static_cast<double>(shots) * static_cast<double>(n_t) * static_cast<double>(n_t);
  var_sample /= static_cast<double>(n_t - 1);

  EnsembleStats out;
  out.mean = mean;
  out.sigma = std::sqrt(shot_term + var_sample / static_cast<double>(n_t));
  return out;
}

FirstOrderTerms one_error_terms(const Circuit& c,
                                const std::map<std::pair<int, int>, int>& neighbor_of,
                                const PauliString& obs) {
  // Replays the circuit noiselessly; `mix_at` = k inserts the error after
  // the k-th CNOT, on the pair or on its neighbor.
  auto run = [&](int mix_at, bool on_neighbor) {
    DensityMatrix rho = DensityMatrix::zero_state(c.n_qubits);
    int cnot_index = 0;
    for (const Gate& g : c.gates) {
      if (g.kind == GateKind::BARRIER) continue;
      apply_matrix_inplace(rho.mat, rho.n_qubits, gate_matrix(g), g.qubits);
      if (g.kind != GateKind::CNOT) continue;
      if (cnot_index == mix_at) {
        int a = std::min(g.control(), g.target());
        int b = std::max(g.control(), g.target());
        if (on_neighbor) {
          auto it = neighbor_of.find({a, b});
          if (it == neighbor_of.end()) {
            throw std::invalid_argument("one_error_terms: no neighbor for junction (" +
                                        std::to_string(a) + ", " + std::to_string(b) + ")");
          }
          rho.mat = mix_qubits(rho.mat, rho.n_qubits, {it->second});
        } else {
          rho.mat = mix_qubits(rho.mat, rho.n_qubits, {a, b});
        }
      }
      ++cnot_index;
    }
    return expectation(rho, obs);
  };

  FirstOrderTerms out;
  out.n_cnot = count_cnots(c);
  out.base = run(-1, false);
  for (int k = 0; k < out.n_cnot; ++k) {
    out.pair_sum += run(k, false);
    out.neighbor_sum += run(k, true);
  }
  return out;
}

double first_order_prediction(const FirstOrderTerms& terms, double lambda_cnot,
                              double lambda_neigh, double lambda_glob) {
  if (lambda_cnot > 0.05 || lambda_neigh > 0.05 || lambda_glob > 0.05) {
    std::cerr << "first_order_prediction: rate above 0.05, first-order accuracy degrades\n";
  }
  double n = static_cast<double>(terms.n_cnot);
  double bracket = terms.base * (1.0 - n * (lambda_cnot + lambda_neigh)) +
                   lambda_cnot * terms.pair_sum + lambda_neigh * terms.neighbor_sum;
  return std::pow(1.0 - lambda_glob, n) * bracket;
}

}  // namespace qem
