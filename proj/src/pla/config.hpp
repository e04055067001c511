#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "pla/common.hpp"
#include "pla/data.hpp"
#include "pla/model.hpp"

namespace pla {

enum class Strategy { downsample, single_crop, multi_crop, ordered };
enum class BalancingMode {
  none,
  oversample,
  balanced_batches,
  loss_weighting,
  diagnosis_weighting,
};

// Plain-text key=value configuration with documented defaults.
// Unknown keys are rejected so typos fail loudly.
class KvConfig {
 public:
  KvConfig();
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  // Canonical sorted key=value text, also used for provenance echo.
  std::string resolved_text() const;

 private:
  std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
  // data
  std::string data;  // "synthetic" or "manifest"
  std::string manifest;
  std::string images_dir;
  std::vector<std::string> class_names;
  std::vector<int> benign_classes;
  std::uint64_t split_seed = 1;
  std::vector<int> train_parts;
  int val_part = 2;
  int test_part = 3;
  std::vector<int> synth_train_per_class, synth_val_per_class,
      synth_test_per_class;
  int synth_image_size = 192;
  int synth_distractors = 2;
  double synth_noise = 0.05;
  double synth_signal_amplitude = 0.45;
  double synth_distractor_amplitude = 0.25;
  bool synth_center_signal = false;
  std::array<double, 4> synth_diagnosis_dist = {0.54, 0.05, 0.05, 0.36};
  std::string synth_format = "png";

  // input strategy
  Strategy strategy = Strategy::ordered;
  int input_size = 64;
  int n_crops = 9;
  double p_d = 0.0;
  double single_crop_scale_min = 0.7;
  double single_crop_scale_max = 1.1;

  // model
  std::vector<int> backbone_channels;
  Aggregator aggregator = Aggregator::attention;
  bool attention_initial = false;
  bool attention_end = true;
  int gru_hidden = 128;

  // balancing
  BalancingMode balancing = BalancingMode::none;
  double k = 1.0;
  std::array<double, 4> diag_multipliers = {1.0, 1.2, 1.4, 1.6};
  bool diag_strict = false;

  // training
  int epochs = 5;
  int batch_size = 14;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  bool augment = true;
  bool deterministic = false;
  int sweep_seeds = 3;
  std::string out_dir = "out";
  std::string run_id = "run";
  bool overwrite = false;

  int n_classes() const { return static_cast<int>(class_names.size()); }
};

// Validates cross-field constraints and produces the typed config.
ExperimentConfig resolve_config(const KvConfig& kv);

// Hash over the keys that pin the model architecture; stored in
// checkpoints and checked on load.
std::uint64_t model_config_hash(const ExperimentConfig& cfg);

ModelSpec model_spec_from(const ExperimentConfig& cfg);

}  // namespace pla
