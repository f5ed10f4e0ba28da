#pragma once

// Command implementations behind the gjs executable. Each command writes its
// artifacts under an output directory together with a manifest.json.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gjs/dataset.hpp"
#include "gjs/io.hpp"
#include "gjs/vae.hpp"

namespace gjs {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3 };

// Accepts a JSON file, inline JSON, or "mean,variance" for a 1-D Gaussian.
FullGaussian parse_gaussian_arg(const std::string& arg);

struct SweepConfig {
  std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<Family> families{Family::GJSDual};
  std::vector<SkewConvention> conventions{SkewConvention::Primed};
  std::vector<std::uint64_t> seeds{0};
  TrainConfig base;

  void validate() const;
  // Cells in matrix order: family, convention, alpha, seed (seed fastest).
  // Families without a skew (KL, MMD) contribute one cell per seed.
  std::vector<TrainConfig> cells() const;
};

json to_json(const SweepConfig& cfg);
SweepConfig sweep_config_from_json(const json& j);

struct SummaryRow {
  std::string family;
  std::string convention;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double final_train_recon = 0.0;
  double final_test_recon = 0.0;
  double final_div = 0.0;  // training-set divergence after the last epoch
  double log_evidence = 0.0;
};

const std::vector<std::string>& summary_header();
CsvTable summary_table(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> summary_rows_from_csv(const CsvTable& table);

struct RunResult {
  TrainRecord record;
  SummaryRow row;
  VaeModel model;
};

// One training run: init from cfg.seed, train, then a 128-sample evidence
// estimate on the test set (the train set when the test set is empty).
RunResult run_training(const VaeArch& arch, const Dataset& train_data, const Dataset& test_data,
                       const TrainConfig& cfg);

// Runs every cell; results come back in cells() order.
std::vector<RunResult> run_sweep(const VaeArch& arch, const Dataset& train_data, const Dataset& test_data,
                                 const SweepConfig& cfg);

// Full command line (argv[0] excluded). Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gjs
