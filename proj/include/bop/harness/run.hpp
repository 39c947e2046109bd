#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bop/ensemble/trainer.hpp"
#include "bop/harness/config.hpp"

namespace bop::harness {

struct TrainResult {
  std::string run_dir;
  int iterations = 0;
  std::uint64_t env_steps = 0;
  std::string final_checkpoint;
};

// Runs a full training session: writes config.snapshot, appends one JSONL
// record per iteration to metrics.jsonl, drops quarter-mark checkpoints and
// a final one.
TrainResult train_run(const RunConfig& cfg, const std::string& out_dir);

struct EvalResult {
  double mean = 0.0;
  double median = 0.0;
  double stderr_mean = 0.0;
  std::vector<double> returns;
};

EvalResult eval_checkpoint(const std::string& checkpoint_path, int episodes,
                           const std::string& selection_mode, std::uint64_t eval_seed);

// metrics.jsonl -> tidy CSV (iteration, metric, head, value).
void plot_data(const std::string& run_dir, std::ostream& out);

struct SweepResult {
  std::vector<std::string> run_dirs;
  std::string csv_path;
};

// One run per (value, seed) with deterministic directory naming, plus an
// aggregated learning-curve CSV.
SweepResult sweep_run(const RunConfig& base, const std::string& axis,
                      const std::vector<std::string>& values,
                      const std::vector<std::uint64_t>& seeds, const std::string& out_dir);

std::string metrics_to_json(const ensemble::IterationMetrics& m, bool evaluated,
                            double eval_return);

}  // namespace bop::harness
