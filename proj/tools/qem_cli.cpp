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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qem/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const CLI::Option* seed_opt, std::uint64_t seed,
            const std::string& out_dir, int threads) {
  qem::RunConfig cfg = qem::config_from_file(config_path);
  if (seed_opt->count() > 0) cfg.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (cfg.out_dir.empty()) {
    throw std::invalid_argument("run: an output directory is required (config out_dir or --out)");
  }
  qem::RunOutput out = qem::run_experiments(cfg, threads);
  std::printf("run complete: %zu series, %d steps each, %zu files in %s\n", out.series.size(),
              cfg.bcs.n_steps, out.files.size(), cfg.out_dir.c_str());
  for (const qem::SummaryRow& row : qem::summarize_results(out.series, "")) {
    std::printf("  %-10s mean relative error %.4f (%d cells, %d skipped)\n", row.label.c_str(),
                row.mean_rel_error, row.cells_used, row.cells_skipped);
  }
  return 0;
}

int cmd_twirl_check(int channels, std::uint64_t seed) {
  qem::TwirlCheckReport report = qem::twirl_check(channels, seed);
  std::fputs(qem::twirl_check_text(report).c_str(), stdout);
  return report.pass ? 0 : 3;
}

int cmd_fit(const std::string& config_path, const CLI::Option* seed_opt, std::uint64_t seed,
            const std::string& out_dir) {
  qem::RunConfig cfg = qem::config_from_file(config_path);
  if (seed_opt->count() > 0) cfg.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  nlohmann::json result = qem::run_fit(cfg);
  std::printf("fit: chi2 %.3e after %d iterations (%s)\n", result["chi2"].get<double>(),
              result["iterations"].get<int>(),
              result["converged"].get<bool>() ? "converged" : "iteration limit");
  for (int i = 0; i < 5; ++i) {
    std::printf("  lambda[%d]: true %.5f fitted %.5f\n", i,
                result["lambda_true"][i].get<double>(), result["lambda_fit"][i].get<double>());
  }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::string path = cfg.out_dir + "/fit.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("fit: cannot open " + path);
    out << result.dump(2) << "\n";
    std::printf("  wrote %s\n", path.c_str());
  }
  return 0;
}

int cmd_summarize(const std::vector<std::string>& dirs) {
  std::printf("%-40s %-14s %8s %8s\n", "variant", "mean_rel_err", "cells", "skipped");
  for (const std::string& dir : dirs) {
    std::string mode;
    std::vector<qem::SeriesResult> series = qem::read_series_dir(dir, &mode);
    std::string prefix = dir + " [" + mode + "] ";
    for (const qem::SummaryRow& row : qem::summarize_results(series, prefix)) {
      std::printf("%-40s %-14.6f %8d %8d\n", row.label.c_str(), row.mean_rel_error,
                  row.cells_used, row.cells_skipped);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-matrix workbench for twirled circuit experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  int channels = 20;
  double flip = 0.02;
  long long shots = 32000;
  std::vector<std::string> dirs;

  CLI::App* run = app.add_subcommand("run", "Execute the configured experiment grid");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  CLI::Option* run_seed = run->add_option("--seed", seed, "Override the configured seed");
  run->add_option("--out", out_dir, "Override the configured output directory");
  run->add_option("--threads", threads, "Worker threads (speed only, results are identical)");

  CLI::App* twirl = app.add_subcommand("twirl-check", "Run the twirl-theorem battery");
  twirl->add_option("--channels", channels, "Random channels per theorem");
  twirl->add_option("--seed", seed, "Battery seed");

  CLI::App* fit = app.add_subcommand("fit", "Recover chain noise rates from forward targets");
  fit->add_option("--config", config_path, "JSON run configuration")->required();
  CLI::Option* fit_seed = fit->add_option("--seed", seed, "Override the configured seed");
  fit->add_option("--out", out_dir, "Directory for fit.json");

  CLI::App* summarize = app.add_subcommand("summarize", "Relative-error table over run outputs");
  summarize->add_option("dirs", dirs, "Run output directories")->required()->expected(-1);

  CLI::App* demo = app.add_subcommand("unfold-demo", "Readout unfolding walkthrough");
  demo->add_option("--flip", flip, "Symmetric readout flip probability");
  demo->add_option("--shots", shots, "Samples drawn");
  demo->add_option("--seed", seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, run_seed, seed, out_dir, threads);
    if (twirl->parsed()) return cmd_twirl_check(channels, seed);
    if (fit->parsed()) return cmd_fit(config_path, fit_seed, seed, out_dir);
    if (summarize->parsed()) return cmd_summarize(dirs);
    if (demo->parsed()) {
      std::fputs(qem::unfold_demo(flip, shots, seed).c_str(), stdout);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
