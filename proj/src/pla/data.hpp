#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pla/balancing.hpp"
#include "pla/common.hpp"
#include "pla/image.hpp"

namespace pla {

// Lesion archive class order.
const std::vector<std::string>& default_class_names();

struct SampleRecord {
  std::string image_ref;  // file path, or empty for in-memory datasets
  int label = -1;
  DiagnosisMethod diagnosis_method = DiagnosisMethod::unknown;
  int signal_cell = -1;  // synthetic ground truth; -1 when unknown
};

struct Dataset {
  std::vector<SampleRecord> records;
  std::vector<Image> images;  // parallel to records
  int n_classes = 0;
};

// CSV with header image,label,diagnosis_method; extra columns are kept if
// recognized (signal_cell) and ignored otherwise. Labels may be class
// names or indices.
std::vector<SampleRecord> load_manifest(
    const std::string& path, const std::vector<std::string>& class_names);

// Loads the images referenced by the records (paths resolved against
// base_dir unless absolute).
Dataset load_dataset(const std::vector<SampleRecord>& records,
                     const std::string& base_dir, int n_classes);

// Part assignment per record: parts 0..2 are cross-validation folds,
// part 3 is the held-out test set. Per-class shuffle then round-robin,
// so per-class part sizes differ by at most one.
std::vector<int> stratified_split(const std::vector<SampleRecord>& records,
                                  std::uint64_t seed);

struct AugmentConfig {
  double brightness_lo = 0.85, brightness_hi = 1.15;
  double saturation_lo = 0.85, saturation_hi = 1.15;
};

// Independent 50% flips along both axes, multiplicative brightness, and
// saturation blending toward per-pixel luma. Output clamped to [0,1].
Image augment(const Image& image, const AugmentConfig& cfg, Rng& rng);

struct SyntheticSpec {
  std::vector<int> n_per_class;
  int image_size = 192;
  int crop_size = 64;
  int grid_crops = 9;  // 5, 9 or 16
  bool center_signal = false;  // pin the signal blob to the center cell
  int n_distractors = 2;
  double noise = 0.05;
  double signal_amplitude = 0.45;
  double distractor_amplitude = 0.25;
  // expert_consensus, serial_imaging, confocal_microscopy, histopathology
  std::array<double, 4> diagnosis_dist = {0.54, 0.05, 0.05, 0.36};
  std::uint64_t seed = 0;
};

// Class-discriminative oriented stripe pattern in [-1,1]^3, evaluated at
// patch-local coordinates. Shared with the label-recovery oracle.
std::array<float, 3> synthetic_texture(int label, int n_classes, int x, int y,
                                       int cell_size);

// Background noise plus one class-discriminative blob in a single grid
// cell; the remaining cells receive class-uncorrelated distractor blobs.
Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace pla
