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

#include "qem/channels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qem {

namespace {

constexpr Complex kI{0.0, 1.0};

std::vector<int> all_qubits(int n) {
  std::vector<int> qs(n);
  for (int q = 0; q < n; ++q) qs[q] = q;
  return qs;
}

void check_local_size(int n_qubits, const std::vector<int>& targets, const char* who) {
  if (static_cast<int>(targets.size()) != n_qubits) {
    throw std::invalid_argument(std::string(who) + ": channel acts on " +
                                std::to_string(n_qubits) + " qubits but " +
                                std::to_string(targets.size()) + " targets were given");
  }
}

// Core application on a bare matrix; linear, so valid for any operator, not
// just states. `n` is the register size, `targets` the embedding.
void apply_to_matrix(ComplexMatrix& rho, int n, const Channel& ch,
                     const std::vector<int>& targets);

void apply_kraus(ComplexMatrix& rho, int n, const KrausChannel& ch,
                 const std::vector<int>& targets) {
  check_local_size(ch.n_qubits, targets, "apply_channel");
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  for (const ComplexMatrix& m : ch.kraus) {
    accumulate_matrix_conjugation(out, rho, n, m, targets);
  }
  rho.swap(out);
}

void apply_pauli(ComplexMatrix& rho, int n, const PauliChannel& ch,
                 const std::vector<int>& targets) {
  check_local_size(ch.n_qubits, targets, "apply_channel");
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  for (std::size_t idx = 0; idx < ch.probs.size(); ++idx) {
    double p = ch.probs[idx];
    if (p <= 0.0) continue;
    ComplexMatrix m = std::sqrt(p) * pauli_to_matrix(ch.label_of(idx));
    accumulate_matrix_conjugation(out, rho, n, m, targets);
  }
  rho.swap(out);
}

void apply_depolarizing(ComplexMatrix& rho, int n, const DepolarizingChannel& ch,
                        const std::vector<int>& targets) {
  check_local_size(ch.n_qubits, targets, "apply_channel");
  ComplexMatrix mixed = mix_qubits(rho, n, targets);
  rho = (1.0 - ch.lambda) * rho + ch.lambda * mixed;
}

void apply_quasi_local(ComplexMatrix& rho, int n, const QuasiLocalChannel& ch,
                       const std::vector<int>& targets) {
  if (!targets.empty()) {
    std::vector<int> expect = {ch.pair_a, ch.pair_b, ch.neighbor};
    if (targets != expect) {
      throw std::invalid_argument(
          "apply_channel: quasi-local channel acts on its stored qubit indices; "
          "pass an empty target list or exactly (pair_a, pair_b, neighbor)");
    }
  }
  double rest = 1.0 - ch.lambda_cnot - ch.lambda_neigh - ch.lambda_glob;
  ComplexMatrix out = rest * rho;
  if (ch.lambda_cnot != 0.0) {
    out += ch.lambda_cnot * mix_qubits(rho, n, {ch.pair_a, ch.pair_b});
  }
  if (ch.lambda_neigh != 0.0) {
    out += ch.lambda_neigh * mix_qubits(rho, n, {ch.neighbor});
  }
  if (ch.lambda_glob != 0.0) {
    out += ch.lambda_glob * mix_qubits(rho, n, {ch.pair_a, ch.pair_b, ch.neighbor});
  }
  rho.swap(out);
}

void apply_to_matrix(ComplexMatrix& rho, int n, const Channel& ch,
                     const std::vector<int>& targets) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, KrausChannel>) {
          apply_kraus(rho, n, c, targets);
        } else if constexpr (std::is_same_v<T, PauliChannel>) {
          apply_pauli(rho, n, c, targets);
        } else if constexpr (std::is_same_v<T, DepolarizingChannel>) {
          apply_depolarizing(rho, n, c, targets);
        } else {
          apply_quasi_local(rho, n, c, targets);
        }
      },
      ch);
}

// Enumerates per-neighbor axis assignments as base-3 digit strings.
std::vector<std::vector<int>> axis_assignments(int n_neighbors) {
  int count = 1;
  for (int i = 0; i < n_neighbors; ++i) count *= 3;
  std::vector<std::vector<int>> out;
  out.reserve(count);
  for (int code = 0; code < count; ++code) {
    std::vector<int> axes(n_neighbors);
    int c = code;
    for (int i = 0; i < n_neighbors; ++i) {
      axes[i] = c % 3;
      c /= 3;
    }
    out.push_back(std::move(axes));
  }
  return out;
}

ComplexMatrix embedded_neighbor_rotation(int n, const std::vector<int>& neighbors,
                                         const std::vector<int>& axes, double angle) {
  Eigen::Index dim = Eigen::Index(1) << n;
  ComplexMatrix r = ComplexMatrix::Identity(dim, dim);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    left_multiply_embedded(r, n, axis_rotation(axes[i], angle), {neighbors[i]});
  }
  return r;
}

void check_neighbors(int n, const std::vector<int>& neighbors, const char* who) {
  std::vector<int> sorted = neighbors;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= n) {
      throw std::invalid_argument(std::string(who) + ": neighbor index out of range");
    }
    if (i > 0 && sorted[i] == sorted[i - 1]) {
      throw std::invalid_argument(std::string(who) + ": duplicate neighbor index");
    }
  }
}

}  // namespace

KrausChannel KrausChannel::identity(int n) {
  Eigen::Index dim = Eigen::Index(1) << n;
  return KrausChannel{n, {ComplexMatrix::Identity(dim, dim)}};
}

void KrausChannel::check_cptp(double tol) const {
  if (n_qubits < 1) throw std::invalid_argument("KrausChannel: need at least one qubit");
  if (kraus.empty()) throw std::invalid_argument("KrausChannel: empty Kraus set");
  Eigen::Index dim = Eigen::Index(1) << n_qubits;
  ComplexMatrix sum = ComplexMatrix::Zero(dim, dim);
  for (const ComplexMatrix& m : kraus) {
    if (m.rows() != dim || m.cols() != dim) {
      throw std::invalid_argument("KrausChannel: operator dimension mismatch");
    }
    sum += m.adjoint() * m;
  }
  double dev = (sum - ComplexMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (dev > tol) {
    throw std::invalid_argument("KrausChannel: sum of M^dag M deviates from identity by " +
                                std::to_string(dev));
  }
}

PauliChannel PauliChannel::identity(int n) {
  PauliChannel ch;
  ch.n_qubits = n;
  ch.probs.assign(label_count(n), 0.0);
  ch.probs[0] = 1.0;
  return ch;
}

PauliString PauliChannel::label_of(std::size_t index) const {
  PauliString p = PauliString::identity(n_qubits);
  for (int q = 0; q < n_qubits; ++q) {
    p.factors[q] = static_cast<PauliOp>((index >> (2 * q)) & 3u);
  }
  return p;
}

std::size_t PauliChannel::index_of(const PauliString& p) {
  std::size_t idx = 0;
  for (int q = 0; q < p.n_qubits; ++q) {
    idx |= std::size_t(static_cast<unsigned>(p.factors[q])) << (2 * q);
  }
  return idx;
}

void PauliChannel::check() const {
  if (probs.size() != label_count(n_qubits)) {
    throw std::invalid_argument("PauliChannel: probability vector has wrong length");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (p < -1e-12) {
      throw std::invalid_argument("PauliChannel: negative probability " + std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("PauliChannel: probabilities sum to " + std::to_string(sum));
  }
}

KrausChannel PauliChannel::to_kraus() const {
  KrausChannel out;
  out.n_qubits = n_qubits;
  for (std::size_t idx = 0; idx < probs.size(); ++idx) {
    if (probs[idx] <= 0.0) continue;
    out.kraus.push_back(std::sqrt(probs[idx]) * pauli_to_matrix(label_of(idx)));
  }
  if (out.kraus.empty()) {
    throw std::invalid_argument("PauliChannel::to_kraus: all probabilities vanish");
  }
  return out;
}

void DepolarizingChannel::check() const {
  if (n_qubits < 1) throw std::invalid_argument("DepolarizingChannel: need at least one qubit");
  double labels = static_cast<double>(PauliChannel::label_count(n_qubits));
  double max_lambda = labels / (labels - 1.0);
  if (!(lambda >= 0.0 && lambda <= max_lambda + 1e-12)) {
    throw std::invalid_argument("DepolarizingChannel: lambda " + std::to_string(lambda) +
                                " outside [0, " + std::to_string(max_lambda) + "]");
  }
}

PauliChannel DepolarizingChannel::to_pauli() const {
  check();
  PauliChannel out;
  out.n_qubits = n_qubits;
  std::size_t labels = PauliChannel::label_count(n_qubits);
  out.probs.assign(labels, lambda / static_cast<double>(labels));
  out.probs[0] += 1.0 - lambda;
  return out;
}

void QuasiLocalChannel::check() const {
  if (pair_a == pair_b || pair_a == neighbor || pair_b == neighbor) {
    throw std::invalid_argument("QuasiLocalChannel: pair and neighbor indices must be distinct");
  }
  if (pair_a < 0 || pair_b < 0 || neighbor < 0) {
    throw std::invalid_argument("QuasiLocalChannel: negative qubit index");
  }
  double sum = lambda_cnot + lambda_neigh + lambda_glob;
  if (lambda_cnot < 0.0 || lambda_neigh < 0.0 || lambda_glob < 0.0 || sum > 1.0 + 1e-12) {
    throw std::invalid_argument("QuasiLocalChannel: rates must be nonnegative with sum <= 1");
  }
}

PauliChannel QuasiLocalChannel::to_pauli_local() const {
  check();
  // Each depolarizing term is 1/4^k of every Pauli on its support: the pair
  // term spreads lc/16 over labels acting trivially on the neighbor, the
  // neighbor term ln/4 over labels trivial on the pair, the global term
  // lg/64 over all 64, and the untouched weight sits on the identity.
  PauliChannel out;
  out.n_qubits = 3;
  out.probs.assign(64, 0.0);
  double rest = 1.0 - lambda_cnot - lambda_neigh - lambda_glob;
  for (std::size_t idx = 0; idx < 64; ++idx) {
    unsigned d0 = idx & 3u;
    unsigned d1 = (idx >> 2) & 3u;
    unsigned d2 = (idx >> 4) & 3u;
    double p = lambda_glob / 64.0;
    if (d2 == 0) p += lambda_cnot / 16.0;
    if (d0 == 0 && d1 == 0) p += lambda_neigh / 4.0;
    if (idx == 0) p += rest;
    out.probs[idx] = p;
  }
  return out;
}

int channel_n_qubits(const Channel& ch) {
  return std::visit(
      [](const auto& c) -> int {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuasiLocalChannel>) {
          return 3;
        } else {
          return c.n_qubits;
        }
      },
      ch);
}

DensityMatrix apply_channel(const DensityMatrix& rho, const Channel& ch,
                            const std::vector<int>& targets) {
  DensityMatrix out = rho;
  apply_to_matrix(out.mat, out.n_qubits, ch, targets);
  return out;
}

void apply_channel_inplace(ComplexMatrix& rho, int n_qubits, const Channel& ch,
                           const std::vector<int>& targets) {
  apply_to_matrix(rho, n_qubits, ch, targets);
}

PauliChannel pauli_twirl_average(const KrausChannel& ch) {
  ch.check_cptp();
  int n = ch.n_qubits;
  double dim = std::pow(2.0, n);
  PauliChannel out;
  out.n_qubits = n;
  std::size_t labels = PauliChannel::label_count(n);
  out.probs.assign(labels, 0.0);
  for (std::size_t idx = 0; idx < labels; ++idx) {
    ComplexMatrix pm = pauli_to_matrix(out.label_of(idx));
    double s = 0.0;
    for (const ComplexMatrix& m : ch.kraus) {
      s += std::norm((pm * m).trace());
    }
    out.probs[idx] = s / (dim * dim);
  }
  return out;
}

KrausChannel pauli_twirl_operational(const KrausChannel& ch) {
  ch.check_cptp();
  int n = ch.n_qubits;
  std::size_t labels = PauliChannel::label_count(n);
  double weight = 1.0 / std::sqrt(static_cast<double>(labels));
  KrausChannel out;
  out.n_qubits = n;
  out.kraus.reserve(labels * ch.kraus.size());
  PauliChannel indexer;
  indexer.n_qubits = n;
  for (std::size_t widx = 0; widx < labels; ++widx) {
    ComplexMatrix w = pauli_to_matrix(indexer.label_of(widx));
    for (const ComplexMatrix& m : ch.kraus) {
      // Pauli matrices are Hermitian, so conjugation by w^dag is w m w.
      out.kraus.push_back(weight * (w * m * w));
    }
  }
  return out;
}

PauliChannel crosstalk_twirl_average(const KrausChannel& ch,
                                     const std::vector<int>& neighbors) {
  ch.check_cptp();
  int n = ch.n_qubits;
  check_neighbors(n, neighbors, "crosstalk_twirl_average");
  std::size_t labels = PauliChannel::label_count(n);
  auto assignments = axis_assignments(static_cast<int>(neighbors.size()));
  // 1/4^n from the Pauli-coefficient normalization |Tr(P M)/2^n|^2 plus the
  // 1/3^{#neighbors} rotation average.
  double norm = static_cast<double>(labels) * static_cast<double>(assignments.size());

  std::vector<ComplexMatrix> rotations;
  rotations.reserve(assignments.size());
  for (const auto& axes : assignments) {
    rotations.push_back(embedded_neighbor_rotation(n, neighbors, axes, M_PI / 2.0));
  }

  PauliChannel out;
  out.n_qubits = n;
  out.probs.assign(labels, 0.0);
  for (std::size_t idx = 0; idx < labels; ++idx) {
    ComplexMatrix pm = pauli_to_matrix(out.label_of(idx));
    double s = 0.0;
    for (const ComplexMatrix& r : rotations) {
      ComplexMatrix rotated = r * pm * r.adjoint();
      for (const ComplexMatrix& m : ch.kraus) {
        s += std::norm((m * rotated).trace());
      }
    }
    out.probs[idx] = s / norm;
  }
  return out;
}

KrausChannel crosstalk_twirl_operational(const KrausChannel& ch,
                                         const std::vector<int>& neighbors) {
  ch.check_cptp();
  int n = ch.n_qubits;
  check_neighbors(n, neighbors, "crosstalk_twirl_operational");
  std::size_t labels = PauliChannel::label_count(n);
  auto assignments = axis_assignments(static_cast<int>(neighbors.size()));
  double weight = 1.0 / std::sqrt(static_cast<double>(labels) *
                                  static_cast<double>(assignments.size()));

  KrausChannel out;
  out.n_qubits = n;
  out.kraus.reserve(labels * assignments.size() * ch.kraus.size());
  PauliChannel indexer;
  indexer.n_qubits = n;
  for (const auto& axes : assignments) {
    ComplexMatrix r = embedded_neighbor_rotation(n, neighbors, axes, M_PI / 2.0);
    for (std::size_t widx = 0; widx < labels; ++widx) {
      ComplexMatrix w = pauli_to_matrix(indexer.label_of(widx));
      ComplexMatrix g = r * w;  // twirl Pauli first, then the neighbor rotation
      for (const ComplexMatrix& m : ch.kraus) {
        out.kraus.push_back(weight * (g.adjoint() * m * g));
      }
    }
  }
  return out;
}

DepolarizingChannel marginal_on_neighbor(const PauliChannel& ch, int neighbor) {
  if (neighbor < 0 || neighbor >= ch.n_qubits) {
    throw std::invalid_argument("marginal_on_neighbor: qubit index out of range");
  }
  double q = 0.0;
  for (std::size_t idx = 0; idx < ch.probs.size(); ++idx) {
    if (((idx >> (2 * neighbor)) & 3u) != 0) q += ch.probs[idx];
  }
  return DepolarizingChannel{1, 4.0 * q / 3.0};
}

PauliChannel marginal_on_qubit(const PauliChannel& ch, int qubit) {
  if (qubit < 0 || qubit >= ch.n_qubits) {
    throw std::invalid_argument("marginal_on_qubit: qubit index out of range");
  }
  PauliChannel out;
  out.n_qubits = 1;
  out.probs.assign(4, 0.0);
  for (std::size_t idx = 0; idx < ch.probs.size(); ++idx) {
    out.probs[(idx >> (2 * qubit)) & 3u] += ch.probs[idx];
  }
  return out;
}

PauliChannel marginal_on_active_pair(const PauliChannel& ch, int qubit_a, int qubit_b) {
  if (qubit_a < 0 || qubit_a >= ch.n_qubits || qubit_b < 0 || qubit_b >= ch.n_qubits ||
      qubit_a == qubit_b) {
    throw std::invalid_argument("marginal_on_active_pair: bad qubit pair");
  }
  PauliChannel out;
  out.n_qubits = 2;
  out.probs.assign(16, 0.0);
  for (std::size_t idx = 0; idx < ch.probs.size(); ++idx) {
    unsigned da = (idx >> (2 * qubit_a)) & 3u;
    unsigned db = (idx >> (2 * qubit_b)) & 3u;
    out.probs[da | (db << 2)] += ch.probs[idx];
  }
  return out;
}

namespace {

Eigen::MatrixXd ptm_of_pauli(const PauliChannel& ch) {
  std::size_t labels = PauliChannel::label_count(ch.n_qubits);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(labels, labels);
  for (std::size_t j = 0; j < labels; ++j) {
    PauliString pj = ch.label_of(j);
    double diag = 0.0;
    for (std::size_t k = 0; k < labels; ++k) {
      if (ch.probs[k] == 0.0) continue;
      PauliString pk = ch.label_of(k);
      diag += pk.commutes_with(pj) ? ch.probs[k] : -ch.probs[k];
    }
    r(j, j) = diag;
  }
  return r;
}

Eigen::MatrixXd ptm_of_kraus(const KrausChannel& ch) {
  int n = ch.n_qubits;
  std::size_t labels = PauliChannel::label_count(n);
  double dim = std::pow(2.0, n);
  PauliChannel indexer;
  indexer.n_qubits = n;
  std::vector<int> targets = all_qubits(n);
  Eigen::MatrixXd r(labels, labels);
  for (std::size_t j = 0; j < labels; ++j) {
    ComplexMatrix image = pauli_to_matrix(indexer.label_of(j));
    apply_to_matrix(image, n, Channel{ch}, targets);
    for (std::size_t i = 0; i < labels; ++i) {
      Complex t = (pauli_to_matrix(indexer.label_of(i)) * image).trace();
      if (std::abs(t.imag()) > 1e-9) {
        throw std::runtime_error("ptm: transfer-matrix entry has imaginary part " +
                                 std::to_string(t.imag()));
      }
      r(i, j) = t.real() / dim;
    }
  }
  return r;
}

}  // namespace

Eigen::MatrixXd ptm(const Channel& ch) {
  return std::visit(
      [](const auto& c) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, KrausChannel>) {
          return ptm_of_kraus(c);
        } else if constexpr (std::is_same_v<T, PauliChannel>) {
          return ptm_of_pauli(c);
        } else if constexpr (std::is_same_v<T, DepolarizingChannel>) {
          return ptm_of_pauli(c.to_pauli());
        } else {
          return ptm_of_pauli(c.to_pauli_local());
        }
      },
      ch);
}

double ptm_distance(const Channel& a, const Channel& b) {
  Eigen::MatrixXd ra = ptm(a);
  Eigen::MatrixXd rb = ptm(b);
  if (ra.rows() != rb.rows()) {
    throw std::invalid_argument("ptm_distance: channels act on different qubit counts");
  }
  return (ra - rb).norm();
}

KrausChannel random_cptp_channel(int n_qubits, int n_kraus, Rng& rng) {
  if (n_qubits < 1 || n_kraus < 1) {
    throw std::invalid_argument("random_cptp_channel: need at least one qubit and one operator");
  }
  Eigen::Index dim = Eigen::Index(1) << n_qubits;
  std::vector<ComplexMatrix> raw(n_kraus);
  ComplexMatrix s = ComplexMatrix::Zero(dim, dim);
  for (ComplexMatrix& m : raw) {
    m.resize(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = rng.normal_complex();
    }
    s += m.adjoint() * m;
  }
  // s is positive definite almost surely; s^{-1/2} renormalizes the set to
  // exact trace preservation.
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(s);
  ComplexMatrix inv_sqrt = es.eigenvectors() *
                           es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                           es.eigenvectors().adjoint();
  KrausChannel out;
  out.n_qubits = n_qubits;
  for (ComplexMatrix& m : raw) out.kraus.push_back(m * inv_sqrt);
  out.check_cptp(1e-9);
  return out;
}

ComplexMatrix axis_rotation(int axis, double angle) {
  ComplexMatrix sigma;
  switch (axis) {
    case 0: sigma = pauli_x(); break;
    case 1: sigma = pauli_y(); break;
    case 2: sigma = pauli_z(); break;
    default:
      throw std::invalid_argument("axis_rotation: axis must be 0, 1 or 2");
  }
  return std::cos(angle / 2.0) * pauli_i2() - kI * std::sin(angle / 2.0) * sigma;
}

namespace {

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back({m(r, c).real(), m(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ComplexMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("channel_from_json: matrix must be a nonempty array");
  }
  Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const nlohmann::json& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument("channel_from_json: ragged matrix rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const nlohmann::json& cell = row.at(c);
      if (!cell.is_array() || cell.size() != 2) {
        throw std::invalid_argument("channel_from_json: matrix entry must be [re, im]");
      }
      m(r, c) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  return m;
}

}  // namespace

nlohmann::json channel_to_json(const Channel& ch) {
  return std::visit(
      [](const auto& c) -> nlohmann::json {
        using T = std::decay_t<decltype(c)>;
        nlohmann::json j;
        if constexpr (std::is_same_v<T, KrausChannel>) {
          j["type"] = "kraus";
          j["n_qubits"] = c.n_qubits;
          nlohmann::json ops = nlohmann::json::array();
          for (const ComplexMatrix& m : c.kraus) ops.push_back(matrix_to_json(m));
          j["kraus"] = std::move(ops);
        } else if constexpr (std::is_same_v<T, PauliChannel>) {
          j["type"] = "pauli";
          j["n_qubits"] = c.n_qubits;
          j["probs"] = c.probs;
        } else if constexpr (std::is_same_v<T, DepolarizingChannel>) {
          j["type"] = "depolarizing";
          j["n_qubits"] = c.n_qubits;
          j["lambda"] = c.lambda;
        } else {
          j["type"] = "quasi_local";
          j["lambda_cnot"] = c.lambda_cnot;
          j["lambda_neigh"] = c.lambda_neigh;
          j["lambda_glob"] = c.lambda_glob;
          j["pair"] = {c.pair_a, c.pair_b};
          j["neighbor"] = c.neighbor;
        }
        return j;
      },
      ch);
}

Channel channel_from_json(const nlohmann::json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "kraus") {
    KrausChannel ch;
    ch.n_qubits = j.at("n_qubits").get<int>();
    for (const nlohmann::json& m : j.at("kraus")) ch.kraus.push_back(matrix_from_json(m));
    ch.check_cptp(1e-8);
    return ch;
  }
  if (type == "pauli") {
    PauliChannel ch;
    ch.n_qubits = j.at("n_qubits").get<int>();
    ch.probs = j.at("probs").get<std::vector<double>>();
    ch.check();
    return ch;
  }
  if (type == "depolarizing") {
    DepolarizingChannel ch;
    ch.n_qubits = j.at("n_qubits").get<int>();
    ch.lambda = j.at("lambda").get<double>();
    ch.check();
    return ch;
  }
  if (type == "quasi_local") {
    QuasiLocalChannel ch;
    ch.lambda_cnot = j.at("lambda_cnot").get<double>();
    ch.lambda_neigh = j.at("lambda_neigh").get<double>();
    ch.lambda_glob = j.at("lambda_glob").get<double>();
    const nlohmann::json& pair = j.at("pair");
    if (!pair.is_array() || pair.size() != 2) {
      throw std::invalid_argument("channel_from_json: \"pair\" must be a two-element array");
    }
    ch.pair_a = pair.at(0).get<int>();
    ch.pair_b = pair.at(1).get<int>();
    ch.neighbor = j.at("neighbor").get<int>();
    ch.check();
    return ch;
  }
  throw std::invalid_argument("channel_from_json: unknown channel type \"" + type + "\"");
}

}  // namespace qem
