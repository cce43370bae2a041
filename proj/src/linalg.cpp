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

#include "qem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qem {

namespace {

const Complex kI{0.0, 1.0};

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Single-Pauli product c = a * b as (phase, c). Encodes the Pauli algebra
// X*Y = iZ (cyclic), p*p = I.
void pauli_product(PauliOp a, PauliOp b, Complex& phase, PauliOp& out) {
  if (a == PauliOp::I) {
    out = b;
    phase = 1.0;
    return;
  }
  if (b == PauliOp::I) {
    out = a;
    phase = 1.0;
    return;
  }
  if (a == b) {
    out = PauliOp::I;
    phase = 1.0;
    return;
  }
  // Distinct non-identity factors: result is the third axis with phase
  // +i for a cyclic (X,Y), (Y,Z), (Z,X) pair and -i otherwise.
  const int ia = static_cast<int>(a), ib = static_cast<int>(b);
  out = static_cast<PauliOp>(6 - ia - ib);  // 1+2+3 = 6
  const bool cyclic = (ib - ia + 3) % 3 == 1;
  phase = cyclic ? kI : -kI;
}

}  // namespace

ComplexMatrix pauli_i2() { return ComplexMatrix::Identity(2, 2); }

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

char pauli_op_char(PauliOp op) {
  switch (op) {
    case PauliOp::I: return 'I';
    case PauliOp::X: return 'X';
    case PauliOp::Y: return 'Y';
    case PauliOp::Z: return 'Z';
  }
  throw std::invalid_argument("pauli_op_char: bad enum value");
}

PauliOp pauli_op_from_char(char c) {
  switch (c) {
    case 'I': return PauliOp::I;
    case 'X': return PauliOp::X;
    case 'Y': return PauliOp::Y;
    case 'Z': return PauliOp::Z;
    default: break;
  }
  throw std::invalid_argument(std::string("pauli_op_from_char: bad label '") + c + "'");
}

ComplexMatrix pauli_op_matrix(PauliOp op) {
  switch (op) {
    case PauliOp::I: return pauli_i2();
    case PauliOp::X: return pauli_x();
    case PauliOp::Y: return pauli_y();
    case PauliOp::Z: return pauli_z();
  }
  throw std::invalid_argument("pauli_op_matrix: bad enum value");
}

PauliString PauliString::identity(int n) {
  PauliString p;
  p.n_qubits = n;
  p.factors.assign(static_cast<std::size_t>(n), PauliOp::I);
  return p;
}

PauliString PauliString::from_label(const std::string& label, Complex phase) {
  PauliString p;
  p.n_qubits = static_cast<int>(label.size());
  p.factors.reserve(label.size());
  for (char c : label) p.factors.push_back(pauli_op_from_char(c));
  p.phase = phase;
  return p;
}

std::string PauliString::label() const {
  std::string s;
  s.reserve(factors.size());
  for (PauliOp op : factors) s.push_back(pauli_op_char(op));
  return s;
}

bool PauliString::is_identity_label() const {
  return std::all_of(factors.begin(), factors.end(),
                     [](PauliOp op) { return op == PauliOp::I; });
}

PauliString PauliString::times(const PauliString& rhs) const {
  require(n_qubits == rhs.n_qubits, "PauliString::times: size mismatch");
  PauliString out;
  out.n_qubits = n_qubits;
  out.factors.resize(factors.size());
  Complex phase = this->phase * rhs.phase;
  for (std::size_t q = 0; q < factors.size(); ++q) {
    Complex f;
    pauli_product(factors[q], rhs.factors[q], f, out.factors[q]);
    phase *= f;
  }
  out.phase = phase;
  return out;
}

bool PauliString::commutes_with(const PauliString& rhs) const {
  require(n_qubits == rhs.n_qubits, "PauliString::commutes_with: size mismatch");
  int anticommuting = 0;
  for (std::size_t q = 0; q < factors.size(); ++q) {
    const PauliOp a = factors[q], b = rhs.factors[q];
    if (a != PauliOp::I && b != PauliOp::I && a != b) ++anticommuting;
  }
  return anticommuting % 2 == 0;
}

DensityMatrix DensityMatrix::zero_state(int n) {
  const Eigen::Index d = Eigen::Index(1) << n;
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  m(0, 0) = 1.0;
  return {n, std::move(m)};
}

DensityMatrix DensityMatrix::maximally_mixed(int n) {
  const Eigen::Index d = Eigen::Index(1) << n;
  return {n, ComplexMatrix::Identity(d, d) / static_cast<double>(d)};
}

void DensityMatrix::check_valid() const {
  if (mat.rows() != mat.cols() || mat.rows() != (Eigen::Index(1) << n_qubits))
    throw std::runtime_error("DensityMatrix: dimension does not match n_qubits");
  const double herm = (mat - mat.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermTol)
    throw std::runtime_error("DensityMatrix: not Hermitian, deviation " + std::to_string(herm));
  const double tr_err = std::abs(mat.trace() - Complex(1.0, 0.0));
  if (tr_err > kTraceTol)
    throw std::runtime_error("DensityMatrix: trace deviates from 1 by " + std::to_string(tr_err));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(mat, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -kPsdSlack)
    throw std::runtime_error("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

ComplexMatrix pauli_to_matrix(const PauliString& p) {
  ComplexMatrix m = ComplexMatrix::Identity(1, 1);
  // Build from the most significant factor down so qubit 0 lands on the
  // least significant index bits.
  for (int q = p.n_qubits - 1; q >= 0; --q)
    m = kron(m, pauli_op_matrix(p.factors[static_cast<std::size_t>(q)]));
  return p.phase * m;
}

EmbedIndex embed_index(int n_qubits, const std::vector<int>& qubits) {
  const int k = static_cast<int>(qubits.size());
  require(k >= 1 && k <= n_qubits, "embed_index: bad subset size");
  std::uint64_t used = 0;
  for (int q : qubits) {
    require(q >= 0 && q < n_qubits, "embed_index: qubit index out of range");
    require(!(used >> q & 1), "embed_index: duplicate qubit index");
    used |= std::uint64_t(1) << q;
  }

  EmbedIndex idx;
  idx.offsets.resize(std::size_t(1) << k);
  for (std::int64_t m = 0; m < (std::int64_t(1) << k); ++m) {
    std::int64_t off = 0;
    for (int t = 0; t < k; ++t)
      if (m >> t & 1) off |= std::int64_t(1) << qubits[static_cast<std::size_t>(t)];
    idx.offsets[static_cast<std::size_t>(m)] = off;
  }

  std::vector<int> rest;
  for (int q = 0; q < n_qubits; ++q)
    if (!(used >> q & 1)) rest.push_back(q);
  idx.rest_offsets.resize(std::size_t(1) << rest.size());
  for (std::int64_t r = 0; r < (std::int64_t(1) << rest.size()); ++r) {
    std::int64_t off = 0;
    for (std::size_t t = 0; t < rest.size(); ++t)
      if (r >> t & 1) off |= std::int64_t(1) << rest[t];
    idx.rest_offsets[static_cast<std::size_t>(r)] = off;
  }
  return idx;
}

namespace {

// rho <- M_emb rho (left action only).
void transform_rows(ComplexMatrix& rho, const ComplexMatrix& m, const EmbedIndex& idx) {
  const auto dim = static_cast<Eigen::Index>(idx.offsets.size());
  Eigen::VectorXcd v(dim), w(dim);
  for (Eigen::Index c = 0; c < rho.cols(); ++c) {
    for (const std::int64_t base : idx.rest_offsets) {
      for (Eigen::Index t = 0; t < dim; ++t)
        v(t) = rho(base + idx.offsets[static_cast<std::size_t>(t)], c);
      w.noalias() = m * v;
      for (Eigen::Index t = 0; t < dim; ++t)
        rho(base + idx.offsets[static_cast<std::size_t>(t)], c) = w(t);
    }
  }
}

// rho <- rho M_emb^dagger (right action only).
void transform_cols(ComplexMatrix& rho, const ComplexMatrix& m, const EmbedIndex& idx) {
  const auto dim = static_cast<Eigen::Index>(idx.offsets.size());
  const ComplexMatrix mc = m.conjugate();
  Eigen::VectorXcd v(dim), w(dim);
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    for (const std::int64_t base : idx.rest_offsets) {
      for (Eigen::Index t = 0; t < dim; ++t)
        v(t) = rho(r, base + idx.offsets[static_cast<std::size_t>(t)]);
      w.noalias() = mc * v;
      for (Eigen::Index t = 0; t < dim; ++t)
        rho(r, base + idx.offsets[static_cast<std::size_t>(t)]) = w(t);
    }
  }
}

}  // namespace

void apply_matrix_inplace(ComplexMatrix& rho, int n_qubits, const ComplexMatrix& m,
                          const std::vector<int>& qubits) {
  const EmbedIndex idx = embed_index(n_qubits, qubits);
  require(m.rows() == m.cols() &&
              m.rows() == static_cast<Eigen::Index>(idx.offsets.size()),
          "apply_matrix_inplace: matrix dimension does not match qubit count");
  transform_rows(rho, m, idx);
  transform_cols(rho, m, idx);
}

void accumulate_matrix_conjugation(ComplexMatrix& out, const ComplexMatrix& rho,
                                   int n_qubits, const ComplexMatrix& m,
                                   const std::vector<int>& qubits) {
  ComplexMatrix tmp = rho;
  apply_matrix_inplace(tmp, n_qubits, m, qubits);
  out += tmp;
}

void left_multiply_embedded(ComplexMatrix& acc, int n_qubits, const ComplexMatrix& m,
                            const std::vector<int>& qubits) {
  const EmbedIndex idx = embed_index(n_qubits, qubits);
  require(m.rows() == m.cols() &&
              m.rows() == static_cast<Eigen::Index>(idx.offsets.size()),
          "left_multiply_embedded: matrix dimension does not match qubit count");
  transform_rows(acc, m, idx);
}

ComplexMatrix mix_qubits(const ComplexMatrix& rho, int n_qubits,
                         const std::vector<int>& qubits) {
  const EmbedIndex idx = embed_index(n_qubits, qubits);
  const std::size_t dim = idx.offsets.size();
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  const double inv = 1.0 / static_cast<double>(dim);
  for (const std::int64_t ra : idx.rest_offsets) {
    for (const std::int64_t rb : idx.rest_offsets) {
      Complex s = 0.0;
      for (std::size_t t = 0; t < dim; ++t)
        s += rho(ra + idx.offsets[t], rb + idx.offsets[t]);
      s *= inv;
      for (std::size_t t = 0; t < dim; ++t)
        out(ra + idx.offsets[t], rb + idx.offsets[t]) = s;
    }
  }
  return out;
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const ComplexMatrix& u,
                            const std::vector<int>& qubits) {
  DensityMatrix out = rho;
  apply_matrix_inplace(out.mat, out.n_qubits, u, qubits);
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  require(!keep.empty(), "partial_trace: keep set must not be empty");
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  const EmbedIndex idx = embed_index(rho.n_qubits, sorted);
  const auto dim = static_cast<Eigen::Index>(idx.offsets.size());
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = 0; b < dim; ++b) {
      Complex s = 0.0;
      for (const std::int64_t base : idx.rest_offsets)
        s += rho.mat(base + idx.offsets[static_cast<std::size_t>(a)],
                     base + idx.offsets[static_cast<std::size_t>(b)]);
      out(a, b) = s;
    }
  return {static_cast<int>(sorted.size()), std::move(out)};
}

double expectation(const DensityMatrix& rho, const PauliString& obs) {
  require(rho.n_qubits == obs.n_qubits, "expectation: qubit count mismatch");
  const Eigen::Index d = rho.dim();
  // P is a signed permutation: P|j> = phase_j |k(j)>, so
  // Tr(rho P) = sum_j phase_j rho(j, k(j)).
  Complex tr = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index kj = j;
    Complex phase = obs.phase;
    for (int q = 0; q < obs.n_qubits; ++q) {
      const bool bit = (j >> q) & 1;
      switch (obs.factors[static_cast<std::size_t>(q)]) {
        case PauliOp::I: break;
        case PauliOp::X: kj ^= Eigen::Index(1) << q; break;
        case PauliOp::Y: kj ^= Eigen::Index(1) << q; phase *= bit ? -kI : kI; break;
        case PauliOp::Z: phase *= bit ? -1.0 : 1.0; break;
      }
    }
    tr += phase * rho.mat(j, kj);
  }
  if (std::abs(tr.imag()) > 1e-8)
    throw std::runtime_error("expectation: imaginary part " + std::to_string(tr.imag()) +
                             " signals a corrupted state");
  return tr.real();
}

ComplexMatrix hermitian_evolve(const ComplexMatrix& h, double t) {
  const double herm = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermTol)
    throw std::invalid_argument("hermitian_evolve: input not Hermitian, deviation " +
                                std::to_string(herm));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(Complex(0.0, -es.eigenvalues()(i) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double unitary_phase_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("unitary_phase_distance: dimension mismatch");
  // For b = e^{i phi} a the trace of a^dag b is e^{i phi} times the dimension,
  // so its argument recovers the aligning phase.
  Complex overlap = (a.adjoint() * b).trace();
  if (std::abs(overlap) < 1e-14) return (b - a).cwiseAbs().maxCoeff();
  Complex phase = overlap / std::abs(overlap);
  return (b - phase * a).cwiseAbs().maxCoeff();
}

}  // namespace qem
