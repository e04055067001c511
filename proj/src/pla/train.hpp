#pragma once

#include <string>
#include <vector>

#include "pla/config.hpp"
#include "pla/data.hpp"
#include "pla/metrics.hpp"
#include "pla/model.hpp"

namespace pla {

enum class SplitPart { train = 0, val = 1, test = 2 };

// Materializes one split. Synthetic data is generated deterministically
// from (split_seed, part); manifest data goes through stratified_split.
Dataset build_split_dataset(const ExperimentConfig& cfg, SplitPart part);

struct EvalOutcome {
  ConfusionMatrix cm;
  // One row per (sample, patch) when the model has attention blocks:
  // sample index, patch index, grid x, grid y, weight (end placement when
  // both are present).
  struct AttentionRow {
    int sample;
    int patch;
    int x, y;
    double weight;
  };
  std::vector<AttentionRow> attention;
};

EvalOutcome evaluate_model(Model<float>& model, const Dataset& ds,
                           const ExperimentConfig& cfg);

// train: writes metrics.csv, config.txt and model.ckpt under out_dir.
void cmd_train(const ExperimentConfig& cfg, const std::string& resolved_text);

// eval: writes metrics_eval.csv (and attention.csv for attention models).
void cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path);

// sweep: one training+evaluation run per (value, seed); writes sweep.csv.
void cmd_sweep(const KvConfig& base, const std::string& axis,
               const std::vector<std::string>& values);

struct GradCheckResult {
  std::string component;
  double max_rel_err;
  double tolerance;
  bool pass;
};

std::vector<GradCheckResult> cmd_gradcheck(const ExperimentConfig& cfg);

// gen-synth: writes images plus manifest.csv; returns the class histogram
// as printable text.
std::string cmd_gen_synth(const ExperimentConfig& cfg,
                          const std::string& resolved_text);

}  // namespace pla
