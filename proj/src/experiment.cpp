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

#include "qem/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qem/channels.hpp"
#include "qem/mitigation.hpp"

namespace qem {

namespace {

constexpr std::uint64_t kCalibrationSalt = 1000000;

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const nlohmann::json& member_at(const nlohmann::json& j, const std::string& path,
                                const char* key) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: " + (path.empty() ? std::string("top level") : path) +
                                " must be an object");
  }
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::invalid_argument("config: missing key " + join_path(path, key));
  }
  return *it;
}

double num_at(const nlohmann::json& j, const std::string& path, const char* key) {
  const nlohmann::json& v = member_at(j, path, key);
  if (!v.is_number()) {
    throw std::invalid_argument("config: " + join_path(path, key) + " must be a number");
  }
  return v.get<double>();
}

double opt_num(const nlohmann::json& j, const std::string& path, const char* key,
               double fallback) {
  if (!j.is_object() || j.find(key) == j.end()) return fallback;
  return num_at(j, path, key);
}

long long int_at(const nlohmann::json& j, const std::string& path, const char* key) {
  const nlohmann::json& v = member_at(j, path, key);
  if (!v.is_number_integer()) {
    throw std::invalid_argument("config: " + join_path(path, key) + " must be an integer");
  }
  return v.get<long long>();
}

long long opt_int(const nlohmann::json& j, const std::string& path, const char* key,
                  long long fallback) {
  if (!j.is_object() || j.find(key) == j.end()) return fallback;
  return int_at(j, path, key);
}

bool bool_at(const nlohmann::json& j, const std::string& path, const char* key) {
  const nlohmann::json& v = member_at(j, path, key);
  if (!v.is_boolean()) {
    throw std::invalid_argument("config: " + join_path(path, key) + " must be a boolean");
  }
  return v.get<bool>();
}

std::string str_at(const nlohmann::json& j, const std::string& path, const char* key) {
  const nlohmann::json& v = member_at(j, path, key);
  if (!v.is_string()) {
    throw std::invalid_argument("config: " + join_path(path, key) + " must be a string");
  }
  return v.get<std::string>();
}

void allow_keys(const nlohmann::json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) return;
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument("config: unknown key " + join_path(path, item.key()));
    }
  }
}

// Index-sharded worker pool; each index is processed exactly once and the
// caller aggregates results in index order, so thread count never changes
// any output.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t use = std::max(1, threads);
  use = std::min<std::size_t>(use, n);
  if (use <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < use; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

PauliOp op_of_basis(Basis b) {
  switch (b) {
    case Basis::X:
      return PauliOp::X;
    case Basis::Y:
      return PauliOp::Y;
    case Basis::Z:
      return PauliOp::Z;
    default:
      throw std::invalid_argument("op_of_basis: qubit has no measurement basis");
  }
}

double shot_noise_sigma(double value, long long shots) {
  return std::sqrt(std::max(0.0, 1.0 - value * value) / static_cast<double>(shots));
}

EnsembleStats stats_or_single(const std::vector<double>& values, long long shots) {
  if (values.size() >= 2) return ensemble_statistics(values, shots);
  EnsembleStats s;
  s.mean = values.at(0);
  s.sigma = shot_noise_sigma(s.mean, shots);
  return s;
}

// One simulated execution: run the circuit under the noise model, sample in
// the given bases through the true readout, optionally unfold, and read off
// the +/-1 products at the listed bit positions.
std::vector<double> measure_values(const Circuit& c, const std::vector<Basis>& bases,
                                   const NoiseModel& nm, long long shots,
                                   const Eigen::MatrixXd& sample_conf,
                                   const Eigen::MatrixXd* unfold_conf,
                                   const std::vector<std::vector<int>>& positions,
                                   std::uint64_t shot_seed) {
  DensityMatrix rho = simulate(c, nm);
  Rng rng(shot_seed);
  Counts counts = sample_counts(rho, bases, shots, sample_conf, rng);
  std::vector<double> dist = distribution_from_counts(counts);
  if (unfold_conf != nullptr) dist = unfold(dist, *unfold_conf);
  std::vector<double> out;
  out.reserve(positions.size());
  for (const std::vector<int>& pos : positions) {
    out.push_back(expectation_from_distribution(dist, counts.measured, pos));
  }
  return out;
}

std::string observable_label(const std::string& bases, const std::vector<int>& subset) {
  std::string label;
  for (int q : subset) {
    label.push_back(bases[static_cast<std::size_t>(q)]);
    label += std::to_string(q);
  }
  return label;
}

std::vector<int> subset_from_label(const std::string& label) {
  std::vector<int> subset;
  std::size_t i = 0;
  while (i < label.size()) {
    if (label[i] != 'X' && label[i] != 'Y' && label[i] != 'Z') {
      throw std::invalid_argument("subset_from_label: bad label " + label);
    }
    ++i;
    std::size_t start = i;
    while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i]))) ++i;
    if (i == start) throw std::invalid_argument("subset_from_label: bad label " + label);
    subset.push_back(std::stoi(label.substr(start, i - start)));
  }
  return subset;
}

std::string series_csv(const SeriesResult& s) {
  std::string out =
      "time,observable,raw,rc_mean,rc_stderr,nec_mean,nec_stderr,mitigated,"
      "mitigated_err,trotter_ideal,exact,reliable_flag\n";
  for (const StepRow& r : s.rows) {
    out += format_double(r.time);
    out += ',';
    out += s.observable;
    out += ',';
    out += format_double(r.raw);
    out += ',';
    out += format_double(r.rc_mean);
    out += ',';
    out += format_double(r.rc_stderr);
    out += ',';
    out += format_double(r.nec_mean);
    out += ',';
    out += format_double(r.nec_stderr);
    out += ',';
    out += format_double(r.mitigated);
    out += ',';
    out += format_double(r.mitigated_err);
    out += ',';
    out += format_double(r.trotter_ideal);
    out += ',';
    out += format_double(r.exact);
    out += ',';
    out += r.reliable ? '1' : '0';
    out += '\n';
  }
  return out;
}

nlohmann::json row_json(const StepRow& r) {
  return nlohmann::json{{"step", r.step},
                        {"time", r.time},
                        {"raw", r.raw},
                        {"rc_mean", r.rc_mean},
                        {"rc_stderr", r.rc_stderr},
                        {"nec_mean", r.nec_mean},
                        {"nec_stderr", r.nec_stderr},
                        {"mitigated", r.mitigated},
                        {"mitigated_err", r.mitigated_err},
                        {"trotter_ideal", r.trotter_ideal},
                        {"exact", r.exact},
                        {"reliable", r.reliable}};
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << content;
  if (!out) throw std::runtime_error("write_text_file: write failed for " + path);
}

}  // namespace

std::string rec_mode_name(RecMode mode) {
  switch (mode) {
    case RecMode::None:
      return "none";
    case RecMode::PerQubit:
      return "per_qubit";
    case RecMode::Full:
      return "full";
  }
  throw std::logic_error("rec_mode_name: bad mode");
}

RecMode rec_mode_from_name(const std::string& name) {
  if (name == "none") return RecMode::None;
  if (name == "per_qubit") return RecMode::PerQubit;
  if (name == "full") return RecMode::Full;
  throw std::invalid_argument("rec_mode_from_name: unknown mode " + name);
}

void NoiseSettings::check() const {
  for (int j = 0; j < 2; ++j) {
    if (lambda_cnot[j] < 0.0 || lambda_cnot[j] > 1.0 || lambda_neigh[j] < 0.0 ||
        lambda_neigh[j] > 1.0) {
      throw std::invalid_argument("NoiseSettings: junction rates must lie in [0, 1]");
    }
    if (lambda_cnot[j] + lambda_neigh[j] + lambda_glob > 1.0 + 1e-12) {
      throw std::invalid_argument("NoiseSettings: junction rate sum exceeds 1");
    }
  }
  if (lambda_glob < 0.0 || lambda_glob > 1.0) {
    throw std::invalid_argument("NoiseSettings: lambda_glob must lie in [0, 1]");
  }
  if (!std::isfinite(neighbor_rz_theta)) {
    throw std::invalid_argument("NoiseSettings: neighbor_rz_theta must be finite");
  }
  if (!std::isfinite(pair_zz_theta)) {
    throw std::invalid_argument("NoiseSettings: pair_zz_theta must be finite");
  }
  if (readout_flip01 < 0.0 || readout_flip01 > 0.5 || readout_flip10 < 0.0 ||
      readout_flip10 > 0.5) {
    throw std::invalid_argument("NoiseSettings: readout flips must lie in [0, 0.5]");
  }
}

NoiseModel NoiseSettings::build(int n_qubits) const {
  check();
  bool any_gate_noise = lambda_cnot[0] != 0.0 || lambda_cnot[1] != 0.0 ||
                        lambda_neigh[0] != 0.0 || lambda_neigh[1] != 0.0 ||
                        lambda_glob != 0.0 || neighbor_rz_theta != 0.0 || pair_zz_theta != 0.0;
  NoiseModel nm;
  if (!any_gate_noise) {
    nm.strict = false;
  } else {
    if (n_qubits != 3) {
      throw std::invalid_argument("NoiseSettings: the chain noise model needs exactly 3 qubits");
    }
    if (neighbor_rz_theta == 0.0 && pair_zz_theta == 0.0) {
      nm = chain3_quasi_local(lambda_cnot[0], lambda_cnot[1], lambda_neigh[0],
                              lambda_neigh[1], lambda_glob);
    } else {
      // Compose the depolarizing mixture with the coherent terms: a Z
      // rotation on the spectator and a ZZ over-rotation on the active
      // pair. The unitary multiplies every Kraus operator from the left,
      // so it acts once per CNOT regardless of which mixture term fired.
      ComplexMatrix pair_u = std::cos(pair_zz_theta / 2.0) * ComplexMatrix::Identity(4, 4) -
                             Complex{0.0, 1.0} * std::sin(pair_zz_theta / 2.0) *
                                 kron(pauli_z(), pauli_z());
      for (int j = 0; j < 2; ++j) {
        int a = j;
        int b = j + 1;
        int spectator = (j == 0) ? 2 : 0;
        QuasiLocalChannel q{lambda_cnot[j], lambda_neigh[j], lambda_glob, a, b, spectator};
        q.check();
        KrausChannel k = q.to_pauli_local().to_kraus();
        ComplexMatrix u = kron(axis_rotation(2, neighbor_rz_theta), pair_u);
        for (ComplexMatrix& m : k.kraus) m = u * m;
        k.check_cptp();
        nm.junctions[{a, b}] = JunctionNoise{k, spectator};
      }
    }
  }
  if (!ideal_readout()) {
    nm.readout.p01.assign(static_cast<std::size_t>(n_qubits), readout_flip01);
    nm.readout.p10.assign(static_cast<std::size_t>(n_qubits), readout_flip10);
  }
  return nm;
}

void RunConfig::check() const {
  bcs.check();
  if (bcs.n_steps < 1) throw std::invalid_argument("RunConfig: bcs.n_steps must be >= 1");
  noise.check();
  if (shots < 1) throw std::invalid_argument("RunConfig: shots must be >= 1");
  if (rc.mode != RcMode::None && rc.count < 1) {
    throw std::invalid_argument("RunConfig: rc.count must be >= 1 when twirling is on");
  }
  if (nec.enabled && nec.count < 1) {
    throw std::invalid_argument("RunConfig: nec.count must be >= 1 when enabled");
  }
  if (rec.calibration_shots < 0) {
    throw std::invalid_argument("RunConfig: rec.calibration_shots must be >= 0");
  }
  if (experiments.empty()) {
    throw std::invalid_argument("RunConfig: at least one experiment is required");
  }
  int n = bcs.n_levels();
  std::vector<std::string> names;
  for (const ExperimentSpec& e : experiments) {
    if (e.name.empty()) throw std::invalid_argument("RunConfig: experiment name is empty");
    for (char c : e.name) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') {
        throw std::invalid_argument("RunConfig: experiment name '" + e.name +
                                    "' must be alphanumeric/underscore");
      }
    }
    if (std::find(names.begin(), names.end(), e.name) != names.end()) {
      throw std::invalid_argument("RunConfig: duplicate experiment name " + e.name);
    }
    names.push_back(e.name);
    if (static_cast<int>(e.bases.size()) != n) {
      throw std::invalid_argument("RunConfig: experiment '" + e.name + "' needs " +
                                  std::to_string(n) + " basis characters");
    }
    for (char c : e.bases) {
      if (c != 'X' && c != 'Y' && c != 'Z') {
        throw std::invalid_argument("RunConfig: experiment '" + e.name +
                                    "' basis characters must be X, Y or Z");
      }
    }
    // An empty list is shorthand for every nonempty qubit subset; the run
    // expands it before use.
    std::vector<std::vector<int>> seen;
    for (const std::vector<int>& s : e.observables) {
      if (s.empty()) {
        throw std::invalid_argument("RunConfig: empty observable subset in " + e.name);
      }
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < 0 || s[i] >= n) {
          throw std::invalid_argument("RunConfig: observable qubit out of range in " + e.name);
        }
        if (i > 0 && s[i] <= s[i - 1]) {
          throw std::invalid_argument(
              "RunConfig: observable subsets must be strictly ascending in " + e.name);
        }
      }
      if (std::find(seen.begin(), seen.end(), s) != seen.end()) {
        throw std::invalid_argument("RunConfig: duplicate observable subset in " + e.name);
      }
      seen.push_back(s);
    }
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["bcs"] = {{"levels", bcs.levels}, {"g", bcs.g}, {"dt", bcs.dt}, {"n_steps", bcs.n_steps}};
  j["noise"] = {{"type", "quasi_local"},
                {"lambda_cnot", {noise.lambda_cnot[0], noise.lambda_cnot[1]}},
                {"lambda_neigh", {noise.lambda_neigh[0], noise.lambda_neigh[1]}},
                {"lambda_glob", noise.lambda_glob},
                {"neighbor_rz_theta", noise.neighbor_rz_theta},
                {"pair_zz_theta", noise.pair_zz_theta},
                {"readout_flip01", noise.readout_flip01},
                {"readout_flip10", noise.readout_flip10}};
  j["rc"] = {{"mode", rc_mode_name(rc.mode)}, {"count", rc.count}};
  j["shots"] = shots;
  j["nec"] = {{"enabled", nec.enabled}, {"count", nec.count}};
  j["rec"] = {{"mode", rec_mode_name(rec.mode)}, {"calibration_shots", rec.calibration_shots}};
  nlohmann::json exps = nlohmann::json::array();
  for (const ExperimentSpec& e : experiments) {
    exps.push_back({{"name", e.name}, {"bases", e.bases}, {"observables", e.observables}});
  }
  j["experiments"] = exps;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  allow_keys(j, "", {"bcs", "noise", "rc", "shots", "nec", "rec", "experiments", "seed",
                     "out_dir"});
  RunConfig cfg;

  const nlohmann::json& jb = member_at(j, "", "bcs");
  allow_keys(jb, "bcs", {"levels", "g", "dt", "n_steps"});
  const nlohmann::json& levels = member_at(jb, "bcs", "levels");
  if (!levels.is_array() || levels.empty()) {
    throw std::invalid_argument("config: bcs.levels must be a nonempty array");
  }
  for (const nlohmann::json& v : levels) {
    if (!v.is_number()) throw std::invalid_argument("config: bcs.levels entries must be numbers");
    cfg.bcs.levels.push_back(v.get<double>());
  }
  cfg.bcs.g = num_at(jb, "bcs", "g");
  cfg.bcs.dt = num_at(jb, "bcs", "dt");
  cfg.bcs.n_steps = static_cast<int>(int_at(jb, "bcs", "n_steps"));

  if (j.find("noise") != j.end()) {
    const nlohmann::json& jn = j.at("noise");
    if (!jn.is_object()) throw std::invalid_argument("config: noise must be an object");
    allow_keys(jn, "noise",
               {"type", "lambda_cnot", "lambda_neigh", "lambda_glob", "neighbor_rz_theta",
                "pair_zz_theta", "readout_flip01", "readout_flip10"});
    if (jn.find("type") != jn.end() && str_at(jn, "noise", "type") != "quasi_local") {
      throw std::invalid_argument("config: noise.type must be quasi_local");
    }
    auto pair_at = [&](const char* key, double* dst) {
      if (jn.find(key) == jn.end()) return;
      const nlohmann::json& arr = jn.at(key);
      if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() || !arr[1].is_number()) {
        throw std::invalid_argument(std::string("config: noise.") + key +
                                    " must be an array of two numbers");
      }
      dst[0] = arr[0].get<double>();
      dst[1] = arr[1].get<double>();
    };
    pair_at("lambda_cnot", cfg.noise.lambda_cnot);
    pair_at("lambda_neigh", cfg.noise.lambda_neigh);
    cfg.noise.lambda_glob = opt_num(jn, "noise", "lambda_glob", 0.0);
    cfg.noise.neighbor_rz_theta = opt_num(jn, "noise", "neighbor_rz_theta", 0.0);
    cfg.noise.pair_zz_theta = opt_num(jn, "noise", "pair_zz_theta", 0.0);
    cfg.noise.readout_flip01 = opt_num(jn, "noise", "readout_flip01", 0.0);
    cfg.noise.readout_flip10 = opt_num(jn, "noise", "readout_flip10", 0.0);
  }

  if (j.find("rc") != j.end()) {
    const nlohmann::json& jr = j.at("rc");
    allow_keys(jr, "rc", {"mode", "count"});
    cfg.rc.mode = rc_mode_from_name(str_at(jr, "rc", "mode"));
    cfg.rc.count = static_cast<int>(opt_int(jr, "rc", "count", 1));
  }

  cfg.shots = int_at(j, "", "shots");

  if (j.find("nec") != j.end()) {
    const nlohmann::json& jn = j.at("nec");
    allow_keys(jn, "nec", {"enabled", "count"});
    cfg.nec.enabled = bool_at(jn, "nec", "enabled");
    cfg.nec.count = static_cast<int>(opt_int(jn, "nec", "count", 1));
  }

  if (j.find("rec") != j.end()) {
    const nlohmann::json& jr = j.at("rec");
    allow_keys(jr, "rec", {"mode", "calibration_shots"});
    cfg.rec.mode = rec_mode_from_name(str_at(jr, "rec", "mode"));
    cfg.rec.calibration_shots = opt_int(jr, "rec", "calibration_shots", 0);
  }

  const nlohmann::json& jes = member_at(j, "", "experiments");
  if (!jes.is_array() || jes.empty()) {
    throw std::invalid_argument("config: experiments must be a nonempty array");
  }
  int n = static_cast<int>(cfg.bcs.levels.size());
  for (std::size_t e = 0; e < jes.size(); ++e) {
    std::string path = "experiments[" + std::to_string(e) + "]";
    const nlohmann::json& je = jes[e];
    allow_keys(je, path, {"name", "bases", "observables"});
    ExperimentSpec spec;
    spec.name = str_at(je, path, "name");
    spec.bases = str_at(je, path, "bases");
    if (je.find("observables") != je.end()) {
      const nlohmann::json& jo = je.at("observables");
      if (!jo.is_array()) {
        throw std::invalid_argument("config: " + path + ".observables must be an array");
      }
      for (const nlohmann::json& js : jo) {
        if (!js.is_array()) {
          throw std::invalid_argument("config: " + path +
                                      ".observables entries must be index arrays");
        }
        std::vector<int> subset;
        for (const nlohmann::json& v : js) {
          if (!v.is_number_integer()) {
            throw std::invalid_argument("config: " + path +
                                        ".observables indices must be integers");
          }
          subset.push_back(v.get<int>());
        }
        spec.observables.push_back(std::move(subset));
      }
    } else {
      spec.observables = all_z_subsets(n);
    }
    cfg.experiments.push_back(std::move(spec));
  }

  if (j.find("seed") != j.end()) {
    const nlohmann::json& v = j.at("seed");
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<long long>() < 0)) {
      throw std::invalid_argument("config: seed must be a nonnegative integer");
    }
    cfg.seed = v.get<std::uint64_t>();
  }
  if (j.find("out_dir") != j.end()) cfg.out_dir = str_at(j, "", "out_dir");

  cfg.check();
  return cfg;
}

RunConfig config_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config_from_file: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config_from_file: " + path + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

std::string config_digest(const RunConfig& config) {
  // The digest identifies the physics and sampling setup; where the files
  // land is not part of it, so two runs into different directories match.
  nlohmann::json j = config.to_json();
  j.erase("out_dir");
  return hex64(fnv1a(j.dump()));
}

RunOutput run_experiments(const RunConfig& config_in, int threads) {
  RunConfig config = config_in;
  for (ExperimentSpec& e : config.experiments) {
    if (e.observables.empty()) e.observables = all_z_subsets(config.bcs.n_levels());
  }
  config.check();
  const int n = config.bcs.n_levels();
  const int n_steps = config.bcs.n_steps;
  const long long shots = config.shots;
  NoiseModel nm = config.noise.build(n);
  NoiseModel noiseless;
  noiseless.strict = false;

  double delta = solve_gap(config.bcs);
  MeanFieldState mf = mean_field_angles(config.bcs, delta);
  TrotterCircuit tc = build_trotter_circuit(config.bcs, mf, n_steps);

  // Noiseless references: circuit snapshots after every step, plus the
  // continuous-time evolution at the same times.
  std::vector<std::size_t> at;
  for (int t = 1; t < n_steps; ++t) at.push_back(tc.step_gate_begin[static_cast<std::size_t>(t)]);
  std::vector<DensityMatrix> ideal_states = simulate_snapshots(tc.circuit, noiseless, at);
  std::vector<double> times;
  for (int t = 1; t <= n_steps; ++t) times.push_back(t * config.bcs.dt);
  std::vector<DensityMatrix> exact_states = exact_evolution(config.bcs, mf, times);

  std::vector<int> measured_all(static_cast<std::size_t>(n));
  std::iota(measured_all.begin(), measured_all.end(), 0);
  Eigen::MatrixXd sample_conf;  // 0x0 means ideal readout
  if (!nm.readout.ideal()) sample_conf = readout_confusion(nm.readout, measured_all);

  const bool do_unfold = config.rec.mode != RecMode::None;
  std::uint64_t calibration_seed = Rng::split(config.seed, kCalibrationSalt);
  Eigen::MatrixXd unfold_conf;
  if (do_unfold) {
    ReadoutModel truth = nm.readout.ideal() ? ReadoutModel::symmetric(n, 0.0) : nm.readout;
    if (config.rec.calibration_shots == 0) {
      unfold_conf = readout_confusion(truth, measured_all);
    } else {
      Rng cal_rng(calibration_seed);
      CalibrationMode mode = (config.rec.mode == RecMode::Full) ? CalibrationMode::Full
                                                                : CalibrationMode::PerQubit;
      unfold_conf = calibration_confusion(truth, measured_all, config.rec.calibration_shots,
                                          mode, cal_rng);
    }
  }
  const Eigen::MatrixXd* unfold_ptr = do_unfold ? &unfold_conf : nullptr;
  NeighborMap neighbor_map = linear_neighbor_map(n);

  RunOutput out;
  nlohmann::json exp_seeds = nlohmann::json::array();
  nlohmann::json exp_timings = nlohmann::json::object();
  auto run_start = std::chrono::steady_clock::now();

  for (std::size_t e = 0; e < config.experiments.size(); ++e) {
    const ExperimentSpec& spec = config.experiments[e];
    const std::size_t n_obs = spec.observables.size();
    auto exp_start = std::chrono::steady_clock::now();

    std::uint64_t seed_exp = Rng::split(config.seed, e);
    std::uint64_t seed_raw = Rng::split(seed_exp, 0);
    std::uint64_t seed_ens = Rng::split(seed_exp, 1);
    std::uint64_t seed_nec = Rng::split(seed_exp, 2);
    exp_seeds.push_back({{"name", spec.name},
                         {"experiment", seed_exp},
                         {"raw", seed_raw},
                         {"ensemble", seed_ens},
                         {"nec", seed_nec}});

    std::vector<Basis> bases_logical(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
      bases_logical[static_cast<std::size_t>(q)] =
          basis_from_char(spec.bases[static_cast<std::size_t>(q)]);
    }

    std::vector<SeriesResult> exp_series(n_obs);
    for (std::size_t k = 0; k < n_obs; ++k) {
      exp_series[k].experiment = spec.name;
      exp_series[k].subset = spec.observables[k];
      exp_series[k].observable = observable_label(spec.bases, spec.observables[k]);
      exp_series[k].rows.resize(static_cast<std::size_t>(n_steps));
    }

    for (int t = 1; t <= n_steps; ++t) {
      const LayoutTracker& layout = tc.layout_after_step[static_cast<std::size_t>(t - 1)];

      std::vector<Basis> bases_phys(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        bases_phys[static_cast<std::size_t>(p)] =
            bases_logical[static_cast<std::size_t>(layout.logical_at(p))];
      }
      std::vector<std::vector<int>> positions(n_obs);
      for (std::size_t k = 0; k < n_obs; ++k) {
        for (int q : spec.observables[k]) positions[k].push_back(layout.phys_of(q));
        std::sort(positions[k].begin(), positions[k].end());
      }

      Circuit c_t(n);
      std::size_t gate_end = (t < n_steps) ? tc.step_gate_begin[static_cast<std::size_t>(t)]
                                           : tc.circuit.gates.size();
      c_t.gates.assign(tc.circuit.gates.begin(),
                       tc.circuit.gates.begin() + static_cast<std::ptrdiff_t>(gate_end));

      // Bare circuit, no twirling.
      std::uint64_t seed_raw_t = Rng::split(seed_raw, static_cast<std::uint64_t>(t));
      std::vector<double> raw_vals =
          measure_values(c_t, bases_phys, nm, shots, sample_conf, unfold_ptr, positions,
                         Rng::split(seed_raw_t, 0));

      // Twirled ensemble.
      std::vector<EnsembleStats> rc_stats(n_obs);
      if (config.rc.mode == RcMode::None) {
        for (std::size_t k = 0; k < n_obs; ++k) {
          rc_stats[k].mean = raw_vals[k];
          rc_stats[k].sigma = shot_noise_sigma(raw_vals[k], shots);
        }
      } else {
        const int count = config.rc.count;
        std::uint64_t seed_ens_t = Rng::split(seed_ens, static_cast<std::uint64_t>(t));
        std::vector<std::vector<double>> member_vals(
            n_obs, std::vector<double>(static_cast<std::size_t>(count)));
        parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
          std::uint64_t circuit_seed = Rng::split(seed_ens_t, 2 * i);
          std::uint64_t shot_seed = Rng::split(seed_ens_t, 2 * i + 1);
          DressedCircuit dressed = (config.rc.mode == RcMode::Standard)
                                       ? twirl_standard(c_t, circuit_seed)
                                       : twirl_crosstalk(c_t, neighbor_map, circuit_seed);
          std::vector<double> v = measure_values(dressed.circuit, bases_phys, nm, shots,
                                                 sample_conf, unfold_ptr, positions, shot_seed);
          for (std::size_t k = 0; k < n_obs; ++k) member_vals[k][i] = v[k];
        });
        for (std::size_t k = 0; k < n_obs; ++k) rc_stats[k] = stats_or_single(member_vals[k], shots);
      }

      // Noise-estimation ensemble, measured in the computational basis on
      // the same bit positions.
      std::vector<EnsembleStats> nec_stats(n_obs);
      for (std::size_t k = 0; k < n_obs; ++k) nec_stats[k] = EnsembleStats{1.0, 0.0};
      if (config.nec.enabled) {
        const int count = config.nec.count;
        std::uint64_t seed_nec_t = Rng::split(seed_nec, static_cast<std::uint64_t>(t));
        std::vector<Basis> z_bases(static_cast<std::size_t>(n), Basis::Z);
        std::vector<std::vector<double>> member_vals(
            n_obs, std::vector<double>(static_cast<std::size_t>(count)));
        parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
          std::uint64_t prep_seed = Rng::split(seed_nec_t, 3 * i);
          std::uint64_t twirl_seed = Rng::split(seed_nec_t, 3 * i + 1);
          std::uint64_t shot_seed = Rng::split(seed_nec_t, 3 * i + 2);
          NecCircuit nec = build_nec(c_t, prep_seed);
          Circuit circuit = nec.circuit;
          if (config.rc.mode == RcMode::Standard) {
            circuit = twirl_standard(circuit, twirl_seed).circuit;
          } else if (config.rc.mode == RcMode::Crosstalk) {
            circuit = twirl_crosstalk(circuit, neighbor_map, twirl_seed).circuit;
          }
          std::vector<double> v = measure_values(circuit, z_bases, nm, shots, sample_conf,
                                                 unfold_ptr, positions, shot_seed);
          for (std::size_t k = 0; k < n_obs; ++k) member_vals[k][i] = v[k];
        });
        for (std::size_t k = 0; k < n_obs; ++k) {
          nec_stats[k] = stats_or_single(member_vals[k], shots);
        }
      }

      for (std::size_t k = 0; k < n_obs; ++k) {
        StepRow& row = exp_series[k].rows[static_cast<std::size_t>(t - 1)];
        row.step = t;
        row.time = t * config.bcs.dt;
        row.raw = raw_vals[k];
        row.rc_mean = rc_stats[k].mean;
        row.rc_stderr = rc_stats[k].sigma;
        row.nec_mean = nec_stats[k].mean;
        row.nec_stderr = nec_stats[k].sigma;
        if (config.nec.enabled) {
          MitigationResult mr =
              mitigate(row.rc_mean, row.nec_mean, row.rc_stderr, row.nec_stderr);
          row.mitigated = mr.value;
          row.mitigated_err = mr.sigma;
          row.reliable = mr.reliable;
        } else {
          row.mitigated = row.rc_mean;
          row.mitigated_err = row.rc_stderr;
          row.reliable = true;
        }

        PauliString obs_phys = PauliString::identity(n);
        PauliString obs_logical = PauliString::identity(n);
        for (int q : spec.observables[k]) {
          PauliOp op = op_of_basis(bases_logical[static_cast<std::size_t>(q)]);
          obs_phys.factors[static_cast<std::size_t>(layout.phys_of(q))] = op;
          obs_logical.factors[static_cast<std::size_t>(q)] = op;
        }
        row.trotter_ideal = expectation(ideal_states[static_cast<std::size_t>(t - 1)], obs_phys);
        row.exact = expectation(exact_states[static_cast<std::size_t>(t - 1)], obs_logical);
      }
    }

    for (SeriesResult& s : exp_series) out.series.push_back(std::move(s));
    double exp_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - exp_start)
                        .count();
    exp_timings[spec.name] = exp_ms;
  }

  double total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - run_start)
          .count();

  std::vector<std::string> relative_names;
  for (const SeriesResult& s : out.series) {
    relative_names.push_back("series_" + s.experiment + "_" + s.observable + ".csv");
    relative_names.push_back("series_" + s.experiment + "_" + s.observable + ".json");
  }
  relative_names.push_back("manifest.json");

  // The manifest sits inside the output directory, so recording the
  // directory path would only tie the file to one machine.
  nlohmann::json config_json = config.to_json();
  config_json.erase("out_dir");
  out.manifest = {{"code_version", kVersion},
                  {"config", std::move(config_json)},
                  {"config_digest", config_digest(config)},
                  {"rc_mode", rc_mode_name(config.rc.mode)},
                  {"seeds",
                   {{"root", config.seed},
                    {"calibration", calibration_seed},
                    {"experiments", exp_seeds}}},
                  {"timings_ms", {{"total", total_ms}, {"experiments", exp_timings}}},
                  {"outputs", relative_names}};

  if (!config.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    try {
      for (const SeriesResult& s : out.series) {
        std::string base = config.out_dir + "/series_" + s.experiment + "_" + s.observable;
        write_text_file(base + ".csv", series_csv(s));
        out.files.push_back(base + ".csv");
        nlohmann::json mirror = {{"experiment", s.experiment},
                                 {"observable", s.observable},
                                 {"subset", s.subset},
                                 {"rc_mode", rc_mode_name(config.rc.mode)},
                                 {"shots", shots},
                                 {"twirl_count", config.rc.count},
                                 {"nec_enabled", config.nec.enabled},
                                 {"nec_count", config.nec.count},
                                 {"rec_mode", rec_mode_name(config.rec.mode)},
                                 {"seed", config.seed},
                                 {"rows", nlohmann::json::array()}};
        for (const StepRow& r : s.rows) mirror["rows"].push_back(row_json(r));
        write_text_file(base + ".json", mirror.dump(2) + "\n");
        out.files.push_back(base + ".json");
      }
      write_text_file(config.out_dir + "/manifest.json", out.manifest.dump(2) + "\n");
      out.files.push_back(config.out_dir + "/manifest.json");
    } catch (...) {
      for (const std::string& f : out.files) {
        std::error_code ec;
        fs::remove(f, ec);
      }
      throw;
    }
  }
  return out;
}

TwirlCheckReport twirl_check(int n_channels, std::uint64_t seed) {
  if (n_channels < 0) throw std::invalid_argument("twirl_check: n_channels must be >= 0");
  TwirlCheckReport report;
  report.n_channels = n_channels;
  Rng rng(seed);

  auto max_offdiag = [](const Eigen::MatrixXd& r) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.cols(); ++j) {
        if (i != j) m = std::max(m, std::abs(r(i, j)));
      }
    }
    return m;
  };
  auto max_prob_dev = [](const PauliChannel& a, const PauliChannel& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.probs.size(); ++i) {
      m = std::max(m, std::abs(a.probs[i] - b.probs[i]));
    }
    return m;
  };

  for (int i = 0; i < n_channels; ++i) {
    KrausChannel ch = random_cptp_channel(2, 4, rng);
    PauliChannel closed = pauli_twirl_average(ch);
    KrausChannel op = pauli_twirl_operational(ch);
    report.max_pauli_offdiag = std::max(report.max_pauli_offdiag, max_offdiag(ptm(Channel{op})));
    // Twirl averaging is a projection, so projecting the already averaged
    // channel reads its coefficients back exactly.
    PauliChannel op_probs = pauli_twirl_average(op);
    report.max_pauli_coeff_dev =
        std::max(report.max_pauli_coeff_dev, max_prob_dev(op_probs, closed));
  }

  std::vector<int> neighbors{2};
  for (int i = 0; i < n_channels; ++i) {
    KrausChannel ch = random_cptp_channel(3, 4, rng);
    PauliChannel closed = crosstalk_twirl_average(ch, neighbors);
    KrausChannel op = crosstalk_twirl_operational(ch, neighbors);
    report.max_pauli_offdiag = std::max(report.max_pauli_offdiag, max_offdiag(ptm(Channel{op})));
    PauliChannel op_probs = pauli_twirl_average(op);
    report.max_closed_form_dev =
        std::max(report.max_closed_form_dev, max_prob_dev(op_probs, closed));

    PauliChannel spectator = marginal_on_qubit(op_probs, 2);
    double w1 = spectator.probs[1];
    double w2 = spectator.probs[2];
    double w3 = spectator.probs[3];
    double iso = std::max({std::abs(w1 - w2), std::abs(w1 - w3), std::abs(w2 - w3)});
    report.max_neighbor_pairwise_dev = std::max(report.max_neighbor_pairwise_dev, iso);

    PauliChannel pair_crosstalk = marginal_on_active_pair(op_probs, 0, 1);
    PauliChannel pair_standard = marginal_on_active_pair(pauli_twirl_average(ch), 0, 1);
    report.max_pair_marginal_dev =
        std::max(report.max_pair_marginal_dev, max_prob_dev(pair_crosstalk, pair_standard));
  }

  report.pass = report.max_pauli_offdiag < 1e-10 && report.max_pauli_coeff_dev < 1e-12 &&
                report.max_closed_form_dev < 1e-12 &&
                report.max_neighbor_pairwise_dev < 1e-12 &&
                report.max_pair_marginal_dev < 1e-12;
  return report;
}

std::string twirl_check_text(const TwirlCheckReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "twirl battery: %d random channels per theorem\n"
                "  pauli twirl:     max PTM off-diagonal %.3e (tol 1e-10), "
                "max coefficient deviation %.3e (tol 1e-12)\n"
                "  crosstalk twirl: closed-form deviation %.3e, neighbor isotropy %.3e, "
                "active-pair marginal deviation %.3e (tol 1e-12)\n"
                "  overall: %s\n",
                r.n_channels, r.max_pauli_offdiag, r.max_pauli_coeff_dev,
                r.max_closed_form_dev, r.max_neighbor_pairwise_dev, r.max_pair_marginal_dev,
                r.pass ? "PASS" : "FAIL");
  return std::string(buf);
}

std::vector<SummaryRow> summarize_results(const std::vector<SeriesResult>& series,
                                          const std::string& label_prefix) {
  SummaryRow raw_row{label_prefix + "raw", 0.0, 0, 0};
  SummaryRow mit_row{label_prefix + "mitigated", 0.0, 0, 0};
  auto add_cell = [](SummaryRow& row, double noisy, double ideal) {
    if (std::abs(noisy) < kRelativeErrorFloor) {
      ++row.cells_skipped;
      return;
    }
    row.mean_rel_error += std::abs((noisy - ideal) / noisy);
    ++row.cells_used;
  };
  for (const SeriesResult& s : series) {
    for (const StepRow& r : s.rows) {
      add_cell(raw_row, r.raw, r.trotter_ideal);
      add_cell(mit_row, r.mitigated, r.trotter_ideal);
    }
  }
  if (raw_row.cells_used > 0) raw_row.mean_rel_error /= raw_row.cells_used;
  if (mit_row.cells_used > 0) mit_row.mean_rel_error /= mit_row.cells_used;
  return {raw_row, mit_row};
}

std::vector<SeriesResult> read_series_dir(const std::string& dir, std::string* rc_mode_out) {
  std::ifstream min(dir + "/manifest.json", std::ios::binary);
  if (!min) throw std::invalid_argument("read_series_dir: cannot open " + dir + "/manifest.json");
  nlohmann::json manifest;
  try {
    min >> manifest;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("read_series_dir: bad manifest in " + dir + ": " + e.what());
  }
  if (rc_mode_out != nullptr) {
    *rc_mode_out = manifest.value("rc_mode", std::string("unknown"));
  }

  std::vector<SeriesResult> series;
  for (const nlohmann::json& f : manifest.at("outputs")) {
    std::string name = f.get<std::string>();
    if (name.size() < 5 || name.substr(name.size() - 4) != ".csv") continue;
    std::string stem = name.substr(0, name.size() - 4);
    if (stem.rfind("series_", 0) != 0) continue;
    stem = stem.substr(7);
    std::size_t sep = stem.rfind('_');
    if (sep == std::string::npos) {
      throw std::invalid_argument("read_series_dir: unexpected series name " + name);
    }

    SeriesResult s;
    s.experiment = stem.substr(0, sep);
    s.observable = stem.substr(sep + 1);
    s.subset = subset_from_label(s.observable);

    std::ifstream in(dir + "/" + name, std::ios::binary);
    if (!in) throw std::invalid_argument("read_series_dir: cannot open " + dir + "/" + name);
    std::string line;
    if (!std::getline(in, line)) {
      throw std::invalid_argument("read_series_dir: empty file " + name);
    }
    int step = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, ',')) cols.push_back(col);
      if (cols.size() != 12) {
        throw std::invalid_argument("read_series_dir: bad row in " + name);
      }
      StepRow r;
      r.step = ++step;
      r.time = parse_double(cols[0]);
      r.raw = parse_double(cols[2]);
      r.rc_mean = parse_double(cols[3]);
      r.rc_stderr = parse_double(cols[4]);
      r.nec_mean = parse_double(cols[5]);
      r.nec_stderr = parse_double(cols[6]);
      r.mitigated = parse_double(cols[7]);
      r.mitigated_err = parse_double(cols[8]);
      r.trotter_ideal = parse_double(cols[9]);
      r.exact = parse_double(cols[10]);
      r.reliable = cols[11] == "1";
      s.rows.push_back(r);
    }
    series.push_back(std::move(s));
  }
  if (series.empty()) {
    throw std::invalid_argument("read_series_dir: no series files listed in " + dir);
  }
  return series;
}

nlohmann::json run_fit(const RunConfig& config) {
  config.check();
  if (config.bcs.n_levels() != 3) {
    throw std::invalid_argument("run_fit: the chain noise model needs exactly 3 qubits");
  }
  if (config.noise.neighbor_rz_theta != 0.0 || config.noise.pair_zz_theta != 0.0) {
    throw std::invalid_argument(
        "run_fit: coherent gate errors are outside the fitted rate model");
  }
  Lambda5 truth{config.noise.lambda_cnot[0], config.noise.lambda_cnot[1],
                config.noise.lambda_neigh[0], config.noise.lambda_neigh[1],
                config.noise.lambda_glob};

  double delta = solve_gap(config.bcs);
  MeanFieldState mf = mean_field_angles(config.bcs, delta);
  FitProblem problem;
  problem.bcs = config.bcs;
  problem.mf = mf;
  problem.observables = all_z_subsets(3);
  problem.targets = forward_series(config.bcs, mf, truth, problem.observables);

  FitResult result = fit(problem, config.seed);
  double max_err = 0.0;
  for (int i = 0; i < 5; ++i) {
    max_err = std::max(max_err, std::abs(result.lambdas[i] - truth[i]));
  }
  return nlohmann::json{
      {"lambda_true", {truth[0], truth[1], truth[2], truth[3], truth[4]}},
      {"lambda_fit",
       {result.lambdas[0], result.lambdas[1], result.lambdas[2], result.lambdas[3],
        result.lambdas[4]}},
      {"chi2", result.chi2},
      {"iterations", result.iterations},
      {"converged", result.converged},
      {"max_abs_error", max_err},
      {"targets", "forward_model"},
      {"observables", problem.observables},
      {"n_steps", config.bcs.n_steps}};
}

std::string unfold_demo(double flip, long long shots, std::uint64_t seed) {
  if (flip < 0.0 || flip > 0.5) {
    throw std::invalid_argument("unfold_demo: flip must lie in [0, 0.5]");
  }
  if (shots < 1) throw std::invalid_argument("unfold_demo: shots must be >= 1");

  BcsParams p;
  p.levels = {-1.0, 0.0, 1.0};
  p.g = 0.5;
  p.dt = 0.2;
  p.n_steps = 1;
  MeanFieldState mf = mean_field_angles(p, solve_gap(p));
  TrotterCircuit tc = build_trotter_circuit(p, mf, 1);
  NoiseModel clean;
  clean.strict = false;
  DensityMatrix rho = simulate(tc.circuit, clean);

  std::vector<Basis> z_bases(3, Basis::Z);
  std::vector<int> measured;
  std::vector<double> truth = outcome_distribution(rho, z_bases, &measured);

  ReadoutModel rm = ReadoutModel::symmetric(3, flip);
  Eigen::MatrixXd confusion = readout_confusion(rm, measured);
  Rng rng(seed);
  Counts counts = sample_counts(rho, z_bases, shots, confusion, rng);
  std::vector<double> measured_dist = distribution_from_counts(counts);
  std::vector<double> unfolded = unfold(measured_dist, confusion);

  double tv_before = total_variation(measured_dist, truth);
  double tv_after = total_variation(unfolded, truth);
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "readout unfolding demo: 3 qubits, one Trotter step, flip %.4g, shots %lld\n"
                "  total variation vs truth, uncorrected: %.4e\n"
                "  total variation vs truth, unfolded:    %.4e\n"
                "  improvement factor: %.2f\n",
                flip, shots, tv_before, tv_after,
                tv_after > 0.0 ? tv_before / tv_after : std::numeric_limits<double>::infinity());
  return std::string(buf);
}

}  // namespace qem
