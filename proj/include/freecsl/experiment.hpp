// experiment.hpp - the experiment harness behind the CLI: flat key-value
// config files, single train/eval runs, and missing-rate sweeps with
// aggregate statistics.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "freecsl/eval.hpp"
#include "freecsl/train.hpp"

namespace freecsl {

struct ExperimentConfig {
  std::string dataset_dir;
  std::string out_dir = "out";
  std::vector<double> rates = {0.1, 0.3, 0.5, 0.7};
  int repeats = 1;
  std::string mode = "freecsl";  // freecsl | ilr | isr
  bool ablations = false;        // sweep the four loss-term combinations
  TrainConfig train;

  void validate() const;
};

// Flat "key = value" file; '#' starts a comment. Unknown keys are an error.
ExperimentConfig parse_experiment_config(const std::string& path);
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

// Output root override: when FREECSL_OUT_ROOT is set, relative output
// directories are resolved beneath it.
std::string resolve_out_dir(const std::string& out_dir);

// One metrics row of results.csv.
struct ResultRow {
  std::string dataset;
  std::string mode;
  double rate = 0.0;
  std::string seed;    // cell seed, or "agg" for aggregate rows
  std::string status;  // ok | failed
  std::optional<MetricReport> metrics;
  std::optional<MetricReport> stds;  // aggregate rows only
};

std::string results_csv_header();
std::string format_result_row(const ResultRow& row);
void append_result_row(const std::string& csv_path, const ResultRow& row);

// --- command implementations (shared by the CLI and the test suites) ---------

// Writes mask.csv for the dataset's shape at the given rate.
void run_mask(const std::string& dataset_dir, double rate, std::uint64_t seed,
              const std::string& out_path);

struct TrainRunResult {
  ModelState state;
  PrototypeSet prototypes;
  std::vector<EpochReport> reports;
};

// Loads + normalizes the dataset (optional external mask), trains warm-up
// then fine-tune, writes checkpoint.bin and epochs.log under out_dir.
TrainRunResult run_train(const ExperimentConfig& config,
                         const std::string& mask_path = "");

struct EvalRunResult {
  ResultRow row;
  std::string sim_csv;
  std::string sim_pgm;
};

// Evaluates a checkpoint, appends one row to results.csv, and writes the
// consensus similarity heatmap for the given tag.
EvalRunResult run_eval(const std::string& checkpoint, const std::string& dataset_dir,
                       const std::string& mask_path, const std::string& mode,
                       const std::string& out_dir, const std::string& tag,
                       std::optional<double> rate = std::nullopt,
                       std::optional<std::uint64_t> seed = std::nullopt, int zeta = 3);

// Full sweep: per (rate, repeat) cell generate a mask, train from scratch,
// evaluate, and append cell rows plus per-rate aggregates to results.csv.
// Failed cells are recorded and the sweep continues. Returns the csv path.
std::string run_sweep(const ExperimentConfig& config);

// Metrics for an already-loaded dataset and trained state under a mode tag.
MetricReport evaluate_mode(const ModelState& state, const MultiViewDataset& dataset,
                           const std::string& mode, std::uint64_t seed, int zeta);

}  // namespace freecsl
