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

#include "qem/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace qem {

namespace {

std::pair<int, int> junction_key(const Gate& g) {
  return {std::min(g.control(), g.target()), std::max(g.control(), g.target())};
}

void apply_junction_noise(ComplexMatrix& rho, int n, const JunctionNoise& jn,
                          const std::pair<int, int>& key) {
  int width = channel_n_qubits(jn.channel);
  std::vector<int> targets;
  if (std::holds_alternative<QuasiLocalChannel>(jn.channel)) {
    targets.clear();  // the channel carries its own indices
  } else if (width == 2) {
    targets = {key.first, key.second};
  } else if (width == 3) {
    if (jn.neighbor < 0) {
      throw std::invalid_argument("simulate: 3-qubit junction channel needs a neighbor index");
    }
    targets = {key.first, key.second, jn.neighbor};
  } else {
    throw std::invalid_argument("simulate: junction channel must act on 2 or 3 qubits");
  }
  apply_channel_inplace(rho, n, jn.channel, targets);
}

}  // namespace

ReadoutModel ReadoutModel::symmetric(int n_qubits, double flip) {
  ReadoutModel rm;
  rm.p01.assign(n_qubits, flip);
  rm.p10.assign(n_qubits, flip);
  rm.check(n_qubits);
  return rm;
}

void ReadoutModel::check(int n_qubits) const {
  if (ideal()) return;
  if (static_cast<int>(p01.size()) != n_qubits || static_cast<int>(p10.size()) != n_qubits) {
    throw std::invalid_argument("ReadoutModel: flip vectors must cover every qubit");
  }
  for (int q = 0; q < n_qubits; ++q) {
    if (!(p01[q] >= 0.0 && p01[q] <= 1.0 && p10[q] >= 0.0 && p10[q] <= 1.0)) {
      throw std::invalid_argument("ReadoutModel: flip probability outside [0, 1] on qubit " +
                                  std::to_string(q));
    }
  }
}

void NoiseModel::check(int n_qubits) const {
  for (const auto& [key, jn] : junctions) {
    if (key.first < 0 || key.second >= n_qubits || key.first >= key.second) {
      throw std::invalid_argument("NoiseModel: junction (" + std::to_string(key.first) + ", " +
                                  std::to_string(key.second) + ") malformed or out of range");
    }
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, KrausChannel>) {
            c.check_cptp();
          } else if constexpr (std::is_same_v<T, PauliChannel>) {
            c.check();
          } else if constexpr (std::is_same_v<T, DepolarizingChannel>) {
            c.check();
          } else {
            c.check();
            if (std::set<int>{c.pair_a, c.pair_b} != std::set<int>{key.first, key.second}) {
              throw std::invalid_argument(
                  "NoiseModel: quasi-local channel pair does not match its junction");
            }
            if (jn.neighbor >= 0 && jn.neighbor != c.neighbor) {
              throw std::invalid_argument(
                  "NoiseModel: quasi-local channel neighbor does not match the junction record");
            }
          }
        },
        jn.channel);
    if (jn.neighbor >= n_qubits) {
      throw std::invalid_argument("NoiseModel: neighbor index out of range");
    }
  }
  if (lambda_single < 0.0 || lambda_single > 1.0) {
    throw std::invalid_argument("NoiseModel: lambda_single outside [0, 1]");
  }
  readout.check(n_qubits);
}

NoiseModel chain3_quasi_local(double lc01, double lc12, double ln01, double ln12,
                              double lg) {
  NoiseModel nm;
  QuasiLocalChannel j01{lc01, ln01, lg, 0, 1, 2};
  QuasiLocalChannel j12{lc12, ln12, lg, 1, 2, 0};
  nm.junctions[{0, 1}] = JunctionNoise{j01, 2};
  nm.junctions[{1, 2}] = JunctionNoise{j12, 0};
  nm.check(3);
  return nm;
}

DensityMatrix simulate(const Circuit& c, const NoiseModel& nm) {
  return simulate_from(c, nm, DensityMatrix::zero_state(c.n_qubits));
}

DensityMatrix simulate_from(const Circuit& c, const NoiseModel& nm, DensityMatrix rho) {
  nm.check(c.n_qubits);
  if (rho.n_qubits != c.n_qubits) {
    throw std::invalid_argument("simulate_from: state and circuit qubit counts differ");
  }
  DepolarizingChannel single{1, nm.lambda_single};
  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::BARRIER) continue;
    if (g.is_single_qubit()) {
      apply_matrix_inplace(rho.mat, rho.n_qubits, gate_matrix(g), g.qubits);
      if (nm.lambda_single > 0.0) {
        apply_channel_inplace(rho.mat, rho.n_qubits, Channel{single}, {g.qubits[0]});
      }
      continue;
    }
    apply_matrix_inplace(rho.mat, rho.n_qubits, gate_matrix(g), g.qubits);
    auto key = junction_key(g);
    auto it = nm.junctions.find(key);
    if (it == nm.junctions.end()) {
      if (nm.strict) {
        throw std::runtime_error("simulate: no channel assigned to junction (" +
                                 std::to_string(key.first) + ", " + std::to_string(key.second) +
                                 ") in strict mode");
      }
      continue;
    }
    apply_junction_noise(rho.mat, rho.n_qubits, it->second, key);
  }
  return rho;
}

std::vector<DensityMatrix> simulate_snapshots(const Circuit& c, const NoiseModel& nm,
                                              const std::vector<std::size_t>& at) {
  nm.check(c.n_qubits);
  for (std::size_t i = 1; i < at.size(); ++i) {
    if (at[i] < at[i - 1]) {
      throw std::invalid_argument("simulate_snapshots: snapshot indices must be nondecreasing");
    }
  }
  DensityMatrix rho = DensityMatrix::zero_state(c.n_qubits);
  DepolarizingChannel single{1, nm.lambda_single};
  std::vector<DensityMatrix> out;
  out.reserve(at.size() + 1);
  std::size_t next = 0;
  for (std::size_t gi = 0; gi <= c.gates.size(); ++gi) {
    while (next < at.size() && at[next] == gi) {
      out.push_back(rho);
      ++next;
    }
    if (gi == c.gates.size()) break;
    const Gate& g = c.gates[gi];
    if (g.kind == GateKind::BARRIER) continue;
    apply_matrix_inplace(rho.mat, rho.n_qubits, gate_matrix(g), g.qubits);
    if (g.is_single_qubit()) {
      if (nm.lambda_single > 0.0) {
        apply_channel_inplace(rho.mat, rho.n_qubits, Channel{single}, {g.qubits[0]});
      }
      continue;
    }
    auto key = junction_key(g);
    auto it = nm.junctions.find(key);
    if (it == nm.junctions.end()) {
      if (nm.strict) {
        throw std::runtime_error("simulate: no channel assigned to junction (" +
                                 std::to_string(key.first) + ", " + std::to_string(key.second) +
                                 ") in strict mode");
      }
      continue;
    }
    apply_junction_noise(rho.mat, rho.n_qubits, it->second, key);
  }
  if (next != at.size()) {
    throw std::invalid_argument("simulate_snapshots: snapshot index beyond the gate list");
  }
  out.push_back(std::move(rho));
  return out;
}

void Counts::check() const {
  long long total = 0;
  for (const auto& [key, v] : histogram) {
    if (v < 0) throw std::invalid_argument("Counts: negative count for " + key);
    if (static_cast<int>(key.size()) != static_cast<int>(measured.size())) {
      throw std::invalid_argument("Counts: bitstring length mismatch for " + key);
    }
    total += v;
  }
  if (total != shots) {
    throw std::invalid_argument("Counts: histogram totals " + std::to_string(total) +
                                " but shots = " + std::to_string(shots));
  }
}

std::string bitstring_of_index(std::size_t k, int m) {
  std::string s(m, '0');
  for (int j = 0; j < m; ++j) {
    if ((k >> j) & 1u) s[j] = '1';
  }
  return s;
}

std::size_t index_of_bitstring(const std::string& s) {
  std::size_t k = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] == '1') {
      k |= std::size_t(1) << j;
    } else if (s[j] != '0') {
      throw std::invalid_argument("index_of_bitstring: invalid character in \"" + s + "\"");
    }
  }
  return k;
}

Eigen::MatrixXd readout_confusion(const ReadoutModel& rm, const std::vector<int>& measured) {
  std::size_t dim = std::size_t(1) << measured.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(1, 1);
  // kron builds most-significant-first, so walk measured qubits from the top.
  for (std::size_t j = measured.size(); j-- > 0;) {
    int q = measured[j];
    double f01 = rm.ideal() ? 0.0 : rm.p01[q];
    double f10 = rm.ideal() ? 0.0 : rm.p10[q];
    Eigen::MatrixXd local(2, 2);
    local << 1.0 - f01, f10, f01, 1.0 - f10;
    Eigen::MatrixXd next(a.rows() * 2, a.cols() * 2);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        next.block(r * a.rows(), c * a.cols(), a.rows(), a.cols()) = local(r, c) * a;
      }
    }
    a.swap(next);
  }
  if (a.rows() != static_cast<Eigen::Index>(dim)) {
    throw std::logic_error("readout_confusion: dimension bookkeeping failed");
  }
  return a;
}

std::vector<double> outcome_distribution(const DensityMatrix& rho,
                                         const std::vector<Basis>& bases,
                                         std::vector<int>* measured_out) {
  if (static_cast<int>(bases.size()) != rho.n_qubits) {
    throw std::invalid_argument("outcome_distribution: basis list must cover every qubit");
  }
  std::vector<int> measured;
  for (int q = 0; q < rho.n_qubits; ++q) {
    if (bases[q] != Basis::None) measured.push_back(q);
  }
  if (measured.empty()) {
    throw std::invalid_argument("outcome_distribution: no measured qubits");
  }

  // Rotate each measured axis onto Z, then read the diagonal.
  Circuit rot(rho.n_qubits);
  rot.measure_basis = bases;
  rot = append_basis_rotation(rot);
  ComplexMatrix work = rho.mat;
  for (const Gate& g : rot.gates) {
    apply_matrix_inplace(work, rho.n_qubits, gate_matrix(g), g.qubits);
  }

  std::size_t m = measured.size();
  std::vector<double> p(std::size_t(1) << m, 0.0);
  Eigen::Index dim = work.rows();
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    double v = work(idx, idx).real();
    std::size_t k = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if ((idx >> measured[j]) & 1) k |= std::size_t(1) << j;
    }
    p[k] += v;
  }
  double total = 0.0;
  for (double& v : p) {
    if (v < 0.0) {
      if (v < -1e-8) {
        throw std::runtime_error("outcome_distribution: negative probability " +
                                 std::to_string(v));
      }
      v = 0.0;
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-8) {
    throw std::runtime_error("outcome_distribution: probabilities sum to " +
                             std::to_string(total));
  }
  for (double& v : p) v /= total;
  if (measured_out != nullptr) *measured_out = measured;
  return p;
}

Counts sample_counts(const DensityMatrix& rho, const std::vector<Basis>& bases,
                     long long shots, const Eigen::MatrixXd& confusion, Rng& rng) {
  if (shots < 1) throw std::invalid_argument("sample_counts: shots must be >= 1");
  std::vector<int> measured;
  std::vector<double> p = outcome_distribution(rho, bases, &measured);

  if (confusion.size() != 0) {
    if (confusion.rows() != static_cast<Eigen::Index>(p.size()) ||
        confusion.cols() != static_cast<Eigen::Index>(p.size())) {
      throw std::invalid_argument("sample_counts: confusion matrix dimension mismatch");
    }
    Eigen::VectorXd pv(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) pv(i) = p[i];
    Eigen::VectorXd mv = confusion * pv;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::max(0.0, mv(i));
    double total = 0.0;
    for (double v : p) total += v;
    for (double& v : p) v /= total;
  }

  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  Counts counts;
  counts.shots = shots;
  counts.measured = measured;
  int m = static_cast<int>(measured.size());
  for (long long s = 0; s < shots; ++s) {
    double u = rng.uniform();
    std::size_t k = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (k >= p.size()) k = p.size() - 1;
    counts.histogram[bitstring_of_index(k, m)] += 1;
  }
  return counts;
}

std::vector<double> distribution_from_counts(const Counts& counts) {
  counts.check();
  std::vector<double> p(std::size_t(1) << counts.measured.size(), 0.0);
  for (const auto& [key, v] : counts.histogram) {
    p[index_of_bitstring(key)] = static_cast<double>(v) / static_cast<double>(counts.shots);
  }
  return p;
}

double expectation_from_counts(const Counts& counts, const std::vector<int>& qubits) {
  counts.check();
  std::vector<int> bit_pos;
  for (int q : qubits) {
    auto it = std::find(counts.measured.begin(), counts.measured.end(), q);
    if (it == counts.measured.end()) {
      throw std::invalid_argument("expectation_from_counts: qubit " + std::to_string(q) +
                                  " was not measured");
    }
    bit_pos.push_back(static_cast<int>(it - counts.measured.begin()));
  }
  double acc = 0.0;
  for (const auto& [key, v] : counts.histogram) {
    int sign = 1;
    for (int b : bit_pos) {
      if (key[b] == '1') sign = -sign;
    }
    acc += sign * static_cast<double>(v);
  }
  return acc / static_cast<double>(counts.shots);
}

double expectation_from_distribution(const std::vector<double>& dist,
                                     const std::vector<int>& measured,
                                     const std::vector<int>& qubits) {
  if (dist.size() != (std::size_t(1) << measured.size())) {
    throw std::invalid_argument("expectation_from_distribution: size mismatch");
  }
  std::size_t mask = 0;
  for (int q : qubits) {
    auto it = std::find(measured.begin(), measured.end(), q);
    if (it == measured.end()) {
      throw std::invalid_argument("expectation_from_distribution: qubit " +
                                  std::to_string(q) + " was not measured");
    }
    mask |= std::size_t(1) << (it - measured.begin());
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    int parity = std::popcount(k & mask) & 1;
    acc += (parity ? -1.0 : 1.0) * dist[k];
  }
  return acc;
}

Eigen::MatrixXd calibration_confusion(const ReadoutModel& truth,
                                      const std::vector<int>& measured,
                                      long long shots_per_prep, CalibrationMode mode,
                                      Rng& rng) {
  if (measured.empty()) throw std::invalid_argument("calibration_confusion: no measured qubits");
  if (shots_per_prep < 1) {
    throw std::invalid_argument("calibration_confusion: shots_per_prep must be >= 1");
  }
  int m = static_cast<int>(measured.size());

  auto flip_sample = [&](int qubit, bool true_bit) {
    double p_flip = true_bit ? (truth.ideal() ? 0.0 : truth.p10[qubit])
                             : (truth.ideal() ? 0.0 : truth.p01[qubit]);
    bool flipped = rng.uniform() < p_flip;
    return flipped ? !true_bit : true_bit;
  };

  if (mode == CalibrationMode::Full) {
    std::size_t dim = std::size_t(1) << m;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t prep = 0; prep < dim; ++prep) {
      for (long long s = 0; s < shots_per_prep; ++s) {
        std::size_t read = 0;
        for (int j = 0; j < m; ++j) {
          if (flip_sample(measured[j], (prep >> j) & 1u)) read |= std::size_t(1) << j;
        }
        a(read, prep) += 1.0;
      }
    }
    a /= static_cast<double>(shots_per_prep);
    return a;
  }

  // Per-qubit mode: two preparations per qubit, then the product structure.
  ReadoutModel estimate;
  int n_total = static_cast<int>(std::max(truth.p01.size(), truth.p10.size()));
  n_total = std::max(n_total, *std::max_element(measured.begin(), measured.end()) + 1);
  estimate.p01.assign(n_total, 0.0);
  estimate.p10.assign(n_total, 0.0);
  for (int j = 0; j < m; ++j) {
    long long flips0 = 0;
    for (long long s = 0; s < shots_per_prep; ++s) {
      if (flip_sample(measured[j], false)) ++flips0;
    }
    long long flips1 = 0;
    for (long long s = 0; s < shots_per_prep; ++s) {
      if (!flip_sample(measured[j], true)) ++flips1;
    }
    estimate.p01[measured[j]] = static_cast<double>(flips0) / shots_per_prep;
    estimate.p10[measured[j]] = static_cast<double>(flips1) / shots_per_prep;
  }
  return readout_confusion(estimate, measured);
}

std::vector<double> unfold(const std::vector<double>& measured_dist,
                           const Eigen::MatrixXd& confusion, int iterations,
                           const std::vector<double>* prior) {
  std::size_t dim = measured_dist.size();
  if (dim == 0) throw std::invalid_argument("unfold: empty distribution");
  if (confusion.rows() != static_cast<Eigen::Index>(dim) ||
      confusion.cols() != static_cast<Eigen::Index>(dim)) {
    throw std::invalid_argument("unfold: confusion matrix dimension mismatch");
  }
  for (Eigen::Index c = 0; c < confusion.cols(); ++c) {
    double col = confusion.col(c).sum();
    if (confusion.col(c).minCoeff() < -1e-12 || std::abs(col - 1.0) > 1e-6) {
      throw std::invalid_argument("unfold: confusion matrix column " + std::to_string(c) +
                                  " is not a probability vector (sum " + std::to_string(col) +
                                  ")");
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(confusion);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > 1e8) {
    throw std::runtime_error("unfold: confusion matrix ill-conditioned (condition estimate " +
                             std::to_string(smin > 0.0 ? smax / smin
                                                       : std::numeric_limits<double>::infinity()) +
                             ")");
  }

  std::vector<double> t(dim);
  if (prior != nullptr) {
    if (prior->size() != dim) throw std::invalid_argument("unfold: prior dimension mismatch");
    double total = 0.0;
    for (double v : *prior) {
      if (v < 0.0) throw std::invalid_argument("unfold: negative prior entry");
      total += v;
    }
    if (total <= 0.0) throw std::invalid_argument("unfold: prior has no mass");
    for (std::size_t i = 0; i < dim; ++i) t[i] = (*prior)[i] / total;
  } else {
    std::fill(t.begin(), t.end(), 1.0 / static_cast<double>(dim));
  }

  std::vector<double> next(dim, 0.0);
  for (int it = 0; it < iterations; ++it) {
    // Bayes update: t_i <- t_i sum_j A_ji m_j / (A t)_j.
    std::vector<double> at(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < dim; ++l) acc += confusion(j, l) * t[l];
      at[j] = acc;
    }
    for (std::size_t i = 0; i < dim; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        if (at[j] <= 0.0) continue;
        acc += confusion(j, i) * measured_dist[j] / at[j];
      }
      next[i] = t[i] * acc;
    }
    double tv = total_variation(t, next);
    t.swap(next);
    if (tv < 1e-8) break;
  }
  return t;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return 0.5 * acc;
}

nlohmann::json counts_to_json(const Counts& counts) {
  counts.check();
  nlohmann::json j;
  j["shots"] = counts.shots;
  j["measured"] = counts.measured;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [key, v] : counts.histogram) hist[key] = v;
  j["histogram"] = std::move(hist);
  return j;
}

Counts counts_from_json(const nlohmann::json& j) {
  Counts counts;
  counts.shots = j.at("shots").get<long long>();
  counts.measured = j.at("measured").get<std::vector<int>>();
  for (const auto& [key, v] : j.at("histogram").items()) {
    counts.histogram[key] = v.get<long long>();
  }
  counts.check();
  return counts;
}

}  // namespace qem
