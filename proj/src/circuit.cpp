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

#include "qem/circuit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qem {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_angles_finite(const std::vector<double>& params) {
  for (double p : params)
    require(std::isfinite(p), "Gate: angle is not finite");
}

}  // namespace

Gate Gate::rz(int q, double theta) {
  Gate g;
  g.kind = GateKind::RZ;
  g.qubits = {q};
  g.params = {theta};
  check_angles_finite(g.params);
  return g;
}

Gate Gate::sx(int q) {
  Gate g;
  g.kind = GateKind::SX;
  g.qubits = {q};
  return g;
}

Gate Gate::x(int q) {
  Gate g;
  g.kind = GateKind::X;
  g.qubits = {q};
  return g;
}

Gate Gate::u1(int q, double theta, double phi, double lambda) {
  Gate g;
  g.kind = GateKind::U1;
  g.qubits = {q};
  g.params = {theta, phi, lambda};
  check_angles_finite(g.params);
  return g;
}

Gate Gate::cnot(int control, int target) {
  require(control != target, "Gate::cnot: control equals target");
  Gate g;
  g.kind = GateKind::CNOT;
  g.qubits = {control, target};
  return g;
}

Gate Gate::barrier(std::vector<int> qs) {
  Gate g;
  g.kind = GateKind::BARRIER;
  g.qubits = std::move(qs);
  std::vector<int> sorted = g.qubits;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "Gate::barrier: duplicate qubit");
  return g;
}

bool Gate::is_single_qubit() const {
  return kind == GateKind::RZ || kind == GateKind::SX || kind == GateKind::X ||
         kind == GateKind::U1;
}

int Gate::control() const {
  require(kind == GateKind::CNOT, "Gate::control: not a CNOT");
  return qubits[0];
}

int Gate::target() const {
  require(kind == GateKind::CNOT, "Gate::target: not a CNOT");
  return qubits[1];
}

char basis_char(Basis b) {
  switch (b) {
    case Basis::None: return '-';
    case Basis::X: return 'X';
    case Basis::Y: return 'Y';
    case Basis::Z: return 'Z';
  }
  throw std::invalid_argument("basis_char: bad enum value");
}

Basis basis_from_char(char c) {
  switch (c) {
    case 'X': return Basis::X;
    case 'Y': return Basis::Y;
    case 'Z': return Basis::Z;
    default: break;
  }
  throw std::invalid_argument(std::string("basis_from_char: bad basis '") + c + "'");
}

Circuit::Circuit(int n) : n_qubits(n) {
  require(n >= 1, "Circuit: need at least one qubit");
  measure_basis.assign(static_cast<std::size_t>(n), Basis::None);
}

void Circuit::add(Gate g) {
  for (int q : g.qubits)
    require(q >= 0 && q < n_qubits, "Circuit::add: qubit index out of range");
  gates.push_back(std::move(g));
}

void Circuit::add_all(const std::vector<Gate>& gs) {
  for (const Gate& g : gs) add(g);
}

CouplingMap CouplingMap::linear(int n) {
  CouplingMap m;
  m.n_qubits = n;
  for (int q = 0; q + 1 < n; ++q) m.add_edge(q, q + 1);
  return m;
}

void CouplingMap::add_edge(int a, int b) {
  require(a != b, "CouplingMap: self-loop");
  require(a >= 0 && b >= 0 && a < n_qubits && b < n_qubits,
          "CouplingMap: edge references invalid qubit");
  edges.insert({std::min(a, b), std::max(a, b)});
}

bool CouplingMap::has_edge(int a, int b) const {
  return edges.count({std::min(a, b), std::max(a, b)}) > 0;
}

LayoutTracker LayoutTracker::identity(int n) {
  LayoutTracker t;
  t.log_to_phys.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t.log_to_phys[static_cast<std::size_t>(i)] = i;
  return t;
}

int LayoutTracker::phys_of(int logical) const {
  require(logical >= 0 && logical < n(), "LayoutTracker::phys_of: out of range");
  return log_to_phys[static_cast<std::size_t>(logical)];
}

int LayoutTracker::logical_at(int phys) const {
  for (int l = 0; l < n(); ++l)
    if (log_to_phys[static_cast<std::size_t>(l)] == phys) return l;
  throw std::invalid_argument("LayoutTracker::logical_at: position out of range");
}

void LayoutTracker::apply_swap(int pa, int pb) {
  const int la = logical_at(pa);
  const int lb = logical_at(pb);
  log_to_phys[static_cast<std::size_t>(la)] = pb;
  log_to_phys[static_cast<std::size_t>(lb)] = pa;
}

void LayoutTracker::check_bijection() const {
  std::vector<bool> seen(log_to_phys.size(), false);
  for (int p : log_to_phys) {
    if (p < 0 || p >= n() || seen[static_cast<std::size_t>(p)])
      throw std::runtime_error("LayoutTracker: permutation is not a bijection");
    seen[static_cast<std::size_t>(p)] = true;
  }
}

std::vector<int> position_permutation(const LayoutTracker& before, const LayoutTracker& after) {
  require(before.n() == after.n(), "position_permutation: size mismatch");
  std::vector<int> out(static_cast<std::size_t>(before.n()));
  for (int p = 0; p < before.n(); ++p)
    out[static_cast<std::size_t>(p)] = after.phys_of(before.logical_at(p));
  return out;
}

std::vector<std::pair<int, int>> validate(const Circuit& c, const CouplingMap& map) {
  std::vector<std::pair<int, int>> violations;
  for (const Gate& g : c.gates)
    if (g.kind == GateKind::CNOT && !map.has_edge(g.control(), g.target()))
      violations.emplace_back(g.control(), g.target());
  return violations;
}

std::vector<Gate> decompose_swap(int a, int b) {
  require(a != b, "decompose_swap: identical qubits");
  return {Gate::cnot(a, b), Gate::cnot(b, a), Gate::cnot(a, b)};
}

Circuit strip_single_qubit_gates(const Circuit& c) {
  Circuit out(c.n_qubits);
  out.measure_basis = c.measure_basis;
  for (const Gate& g : c.gates)
    if (g.kind == GateKind::CNOT || g.kind == GateKind::BARRIER) out.add(g);
  return out;
}

int count_cnots(const Circuit& c) {
  int n = 0;
  for (const Gate& g : c.gates)
    if (g.kind == GateKind::CNOT) ++n;
  return n;
}

ComplexMatrix u1_matrix(double theta, double phi, double lambda) {
  const double ct = std::cos(theta / 2.0), st = std::sin(theta / 2.0);
  const Complex el = std::exp(Complex(0.0, lambda));
  const Complex ep = std::exp(Complex(0.0, phi));
  ComplexMatrix m(2, 2);
  m << ct, -el * st, ep * st, ep * el * ct;
  return m;
}

ComplexMatrix rz_matrix(double theta) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = std::exp(Complex(0.0, -theta / 2.0));
  m(1, 1) = std::exp(Complex(0.0, theta / 2.0));
  return m;
}

ComplexMatrix sx_matrix() {
  ComplexMatrix m(2, 2);
  m << Complex(0.5, 0.5), Complex(0.5, -0.5), Complex(0.5, -0.5), Complex(0.5, 0.5);
  return m;
}

ComplexMatrix rx_matrix(double theta) {
  // exp(-i theta X / 2)
  return u1_matrix(theta, -M_PI / 2.0, M_PI / 2.0);
}

ComplexMatrix ry_matrix(double theta) {
  // exp(-i theta Y / 2)
  return u1_matrix(theta, 0.0, 0.0);
}

ComplexMatrix cnot_matrix() {
  // Local bit 0 = control, bit 1 = target.
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = 1.0;
  m(3, 1) = 1.0;
  m(2, 2) = 1.0;
  m(1, 3) = 1.0;
  return m;
}

ComplexMatrix gate_matrix(const Gate& g) {
  switch (g.kind) {
    case GateKind::RZ: return rz_matrix(g.params[0]);
    case GateKind::SX: return sx_matrix();
    case GateKind::X: return pauli_x();
    case GateKind::U1: return u1_matrix(g.params[0], g.params[1], g.params[2]);
    case GateKind::CNOT: return cnot_matrix();
    case GateKind::BARRIER: break;
  }
  throw std::invalid_argument("gate_matrix: barrier has no matrix");
}

ComplexMatrix circuit_unitary(const Circuit& c) {
  require(c.n_qubits <= 6, "circuit_unitary: limited to 6 qubits");
  const Eigen::Index d = Eigen::Index(1) << c.n_qubits;
  ComplexMatrix u = ComplexMatrix::Identity(d, d);
  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::BARRIER) continue;
    left_multiply_embedded(u, c.n_qubits, gate_matrix(g), g.qubits);
  }
  return u;
}

Circuit append_basis_rotation(const Circuit& c) {
  Circuit out = c;
  for (int q = 0; q < c.n_qubits; ++q) {
    switch (c.measure_basis[static_cast<std::size_t>(q)]) {
      case Basis::None:
      case Basis::Z:
        break;
      case Basis::X:
        // Hadamard up to phase: RZ(pi/2) SX RZ(pi/2).
        out.add(Gate::rz(q, M_PI / 2.0));
        out.add(Gate::sx(q));
        out.add(Gate::rz(q, M_PI / 2.0));
        break;
      case Basis::Y:
        // Maps Y eigenstates onto the Z axis: SX then RZ(pi/2).
        out.add(Gate::sx(q));
        out.add(Gate::rz(q, M_PI / 2.0));
        break;
    }
  }
  return out;
}

std::array<double, 3> u1_angles_from_unitary(const ComplexMatrix& v) {
  require(v.rows() == 2 && v.cols() == 2, "u1_angles_from_unitary: need a 2x2 matrix");
  const double unit = (v * v.adjoint() - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff();
  require(unit < 1e-9, "u1_angles_from_unitary: input is not unitary");
  // Strip the global phase so v' is special unitary: v' = [[a, -conj(b)],
  // [b, conj(a)]].
  const Complex det = v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0);
  const Complex root = std::exp(Complex(0.0, -std::arg(det) / 2.0));
  const Complex a = v(0, 0) * root;
  const Complex b = v(1, 0) * root;
  const double theta = 2.0 * std::atan2(std::abs(b), std::abs(a));
  double phi, lambda;
  if (std::abs(b) < 1e-12) {
    phi = -2.0 * std::arg(a);
    lambda = 0.0;
  } else if (std::abs(a) < 1e-12) {
    phi = 2.0 * std::arg(b);
    lambda = 0.0;
  } else {
    phi = std::arg(b) - std::arg(a);
    lambda = -std::arg(b) - std::arg(a);
  }
  return {theta, phi, lambda};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw std::runtime_error("parse_double: bad number '" + s + "'");
  return v;
}

namespace {

std::string qubit_token(int q) { return "q" + std::to_string(q); }

int parse_int(const std::string& s, int line_no) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("circuit_from_text: line " + std::to_string(line_no) +
                             ": bad integer '" + s + "'");
  return v;
}

int parse_qubit_token(const std::string& tok, int line_no) {
  if (tok.size() < 2 || tok[0] != 'q')
    throw std::runtime_error("circuit_from_text: line " + std::to_string(line_no) +
                             ": expected qubit token, got '" + tok + "'");
  int v = 0;
  const auto res = std::from_chars(tok.data() + 1, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v < 0)
    throw std::runtime_error("circuit_from_text: line " + std::to_string(line_no) +
                             ": bad qubit token '" + tok + "'");
  return v;
}

}  // namespace

std::string circuit_to_text(const Circuit& c) {
  std::ostringstream os;
  os << "QUBITS " << c.n_qubits << "\n";
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::RZ:
        os << "RZ " << qubit_token(g.qubits[0]) << ' ' << format_double(g.params[0]) << "\n";
        break;
      case GateKind::SX:
        os << "SX " << qubit_token(g.qubits[0]) << "\n";
        break;
      case GateKind::X:
        os << "X " << qubit_token(g.qubits[0]) << "\n";
        break;
      case GateKind::U1:
        os << "U1 " << qubit_token(g.qubits[0]) << ' ' << format_double(g.params[0]) << ' '
           << format_double(g.params[1]) << ' ' << format_double(g.params[2]) << "\n";
        break;
      case GateKind::CNOT:
        os << "CNOT " << qubit_token(g.qubits[0]) << ' ' << qubit_token(g.qubits[1]) << "\n";
        break;
      case GateKind::BARRIER: {
        os << "BARRIER";
        for (int q : g.qubits) os << ' ' << qubit_token(q);
        os << "\n";
        break;
      }
    }
  }
  for (int q = 0; q < c.n_qubits; ++q) {
    const Basis b = c.measure_basis[static_cast<std::size_t>(q)];
    if (b != Basis::None)
      os << "MEASURE " << qubit_token(q) << ' ' << basis_char(b) << "\n";
  }
  return os.str();
}

Circuit circuit_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  Circuit c;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.empty()) continue;

    auto need = [&](std::size_t n) {
      if (tok.size() != n)
        throw std::runtime_error("circuit_from_text: line " + std::to_string(line_no) +
                                 ": wrong token count for " + tok[0]);
    };

    if (tok[0] == "QUBITS") {
      need(2);
      if (have_header)
        throw std::runtime_error("circuit_from_text: duplicate QUBITS header");
      c = Circuit(parse_int(tok[1], line_no));
      have_header = true;
      continue;
    }
    if (!have_header)
      throw std::runtime_error("circuit_from_text: missing QUBITS header");

    if (tok[0] == "RZ") {
      need(3);
      c.add(Gate::rz(parse_qubit_token(tok[1], line_no), parse_double(tok[2])));
    } else if (tok[0] == "SX") {
      need(2);
      c.add(Gate::sx(parse_qubit_token(tok[1], line_no)));
    } else if (tok[0] == "X") {
      need(2);
      c.add(Gate::x(parse_qubit_token(tok[1], line_no)));
    } else if (tok[0] == "U1") {
      need(5);
      c.add(Gate::u1(parse_qubit_token(tok[1], line_no), parse_double(tok[2]),
                     parse_double(tok[3]), parse_double(tok[4])));
    } else if (tok[0] == "CNOT") {
      need(3);
      c.add(Gate::cnot(parse_qubit_token(tok[1], line_no), parse_qubit_token(tok[2], line_no)));
    } else if (tok[0] == "BARRIER") {
      std::vector<int> qs;
      for (std::size_t i = 1; i < tok.size(); ++i)
        qs.push_back(parse_qubit_token(tok[i], line_no));
      c.add(Gate::barrier(std::move(qs)));
    } else if (tok[0] == "MEASURE") {
      need(3);
      const int q = parse_qubit_token(tok[1], line_no);
      if (q >= c.n_qubits)
        throw std::runtime_error("circuit_from_text: line " + std::to_string(line_no) +
                                 ": MEASURE qubit out of range");
      if (tok[2].size() != 1)
        throw std::runtime_error("circuit_from_text: line " + std::to_string(line_no) +
                                 ": bad basis token '" + tok[2] + "'");
      c.measure_basis[static_cast<std::size_t>(q)] = basis_from_char(tok[2][0]);
    } else {
      throw std::runtime_error("circuit_from_text: line " + std::to_string(line_no) +
                               ": unknown directive '" + tok[0] + "'");
    }
  }
  if (!have_header) throw std::runtime_error("circuit_from_text: empty input");
  return c;
}

}  // namespace qem
