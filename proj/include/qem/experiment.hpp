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

#ifndef QEM_EXPERIMENT_HPP_
#define QEM_EXPERIMENT_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qem/bcs.hpp"
#include "qem/fitting.hpp"
#include "qem/rc.hpp"
#include "qem/simulator.hpp"

namespace qem {

inline constexpr const char* kVersion = "0.1.0";

// Relative-error cells with a noisy value below this magnitude are skipped
// by the summaries; the ratio |(noisy - ideal) / noisy| is unstable there.
inline constexpr double kRelativeErrorFloor = 0.05;

struct RcSettings {
  RcMode mode = RcMode::None;
  int count = 1;  // twirl configurations per time step
};

struct NecSettings {
  bool enabled = false;
  int count = 1;  // random-preparation copies per time step
};

enum class RecMode { None, PerQubit, Full };

std::string rec_mode_name(RecMode mode);
RecMode rec_mode_from_name(const std::string& name);

struct RecSettings {
  RecMode mode = RecMode::None;
  // Shots per calibration preparation; 0 uses the exact confusion matrix of
  // the configured readout model instead of estimating it.
  long long calibration_shots = 0;
};

// Two-junction chain noise description plus optional coherent errors and
// readout flips. neighbor_rz_theta != 0 adds a Z rotation by that angle on
// the junction's spectator qubit alongside each CNOT's depolarizing terms;
// pair_zz_theta != 0 adds a ZZ over-rotation exp(-i theta/2 Z@Z) on the
// active pair, the typical coherent residue of a miscalibrated CNOT.
struct NoiseSettings {
  double lambda_cnot[2] = {0.0, 0.0};   // junctions (0,1) and (1,2)
  double lambda_neigh[2] = {0.0, 0.0};  // spectator rates for those junctions
  double lambda_glob = 0.0;
  double neighbor_rz_theta = 0.0;
  double pair_zz_theta = 0.0;
  double readout_flip01 = 0.0;  // P(read 1 | true 0), every qubit
  double readout_flip10 = 0.0;  // P(read 0 | true 1), every qubit

  bool ideal_readout() const { return readout_flip01 == 0.0 && readout_flip10 == 0.0; }
  NoiseModel build(int n_qubits) const;
  void check() const;
};

// One measurement setting: a per-logical-qubit basis string ("ZZZ", "XXX",
// ...) and the observable subsets read from it. Empty observables default
// to every nonempty subset.
struct ExperimentSpec {
  std::string name;
  std::string bases;
  std::vector<std::vector<int>> observables;
};

struct RunConfig {
  BcsParams bcs;
  NoiseSettings noise;
  RcSettings rc;
  long long shots = 1;
  NecSettings nec;
  RecSettings rec;
  std::vector<ExperimentSpec> experiments;
  std::uint64_t seed = 0;
  std::string out_dir;

  void check() const;
  nlohmann::json to_json() const;
  // Strict parse: unknown keys and type mismatches are reported with their
  // full field path.
  static RunConfig from_json(const nlohmann::json& j);
};

RunConfig config_from_file(const std::string& path);

// FNV-1a digest of the canonical (sorted-key) config dump; stable under key
// reordering in the source file.
std::string config_digest(const RunConfig& config);

struct StepRow {
  int step = 0;
  double time = 0.0;
  double raw = 0.0;
  double rc_mean = 0.0;
  double rc_stderr = 0.0;
  double nec_mean = 1.0;
  double nec_stderr = 0.0;
  double mitigated = 0.0;
  double mitigated_err = 0.0;
  double trotter_ideal = 0.0;
  double exact = 0.0;
  bool reliable = true;
};

struct SeriesResult {
  std::string experiment;
  std::string observable;    // e.g. "Z0Z2"
  std::vector<int> subset;   // logical qubit indices
  std::vector<StepRow> rows; // one per Trotter step
};

struct RunOutput {
  std::vector<SeriesResult> series;
  nlohmann::json manifest;
  std::vector<std::string> files;  // paths written under out_dir
};

// Full pipeline: for every experiment and Trotter depth, simulate the bare
// circuit, the twirled ensemble and the noise-estimation ensemble, push
// samples through readout correction, aggregate, mitigate, and write
// series_<experiment>_<observable>.csv/.json plus manifest.json into
// config.out_dir. Deterministic for a fixed config; threads only change the
// wall time. Partially written files are removed when a stage throws.
RunOutput run_experiments(const RunConfig& config, int threads = 1);

struct TwirlCheckReport {
  int n_channels = 0;
  double max_pauli_offdiag = 0.0;    // exhaustive Pauli twirl, PTM off-diagonal
  double max_pauli_coeff_dev = 0.0;  // exhaustive vs closed-form coefficients
  double max_closed_form_dev = 0.0;  // crosstalk exhaustive vs closed form
  double max_neighbor_pairwise_dev = 0.0;  // neighbor marginal isotropy
  double max_pair_marginal_dev = 0.0;      // active pair vs plain Pauli twirl
  bool pass = true;
};

// Channel-level twirl theorem battery over seeded random CPTP channels:
// Pauli twirling diagonalizes two-qubit channels and matches the trace
// formula; neighbor twirling renders the spectator marginal depolarizing
// without disturbing the active-pair marginal.
TwirlCheckReport twirl_check(int n_channels, std::uint64_t seed);
std::string twirl_check_text(const TwirlCheckReport& report);

struct SummaryRow {
  std::string label;
  double mean_rel_error = 0.0;
  int cells_used = 0;
  int cells_skipped = 0;
};

// Mean of |(noisy - ideal) / noisy| over all steps and observables, one row
// for the raw column and one for the mitigated column.
std::vector<SummaryRow> summarize_results(const std::vector<SeriesResult>& series,
                                          const std::string& label_prefix);

// Reads series files listed by a run directory's manifest back into memory.
std::vector<SeriesResult> read_series_dir(const std::string& dir, std::string* rc_mode_out);

// Synthetic fit workflow: forward-simulate the configured noise, fit the
// five chain rates back from those targets, and return both for comparison.
nlohmann::json run_fit(const RunConfig& config);

// Readout-unfolding walkthrough on a one-step circuit with symmetric flips;
// returns a small text report with before/after total-variation distances.
std::string unfold_demo(double flip, long long shots, std::uint64_t seed);

}  // namespace qem

#endif  // QEM_EXPERIMENT_HPP_
