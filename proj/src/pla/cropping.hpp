#pragma once

#include <utility>
#include <vector>

#include "pla/common.hpp"
#include "pla/image.hpp"

namespace pla {

// Fixed crop locations over an image. For n_crops == 5 the order is
// TL, TR, BL, BR, center; for 9 and 16 offsets are row-major over a
// g x g grid with offset round(i*(L-c)/(g-1)) per axis.
struct CropGrid {
  int image_w = 0, image_h = 0;
  int crop_w = 0, crop_h = 0;
  int n_crops = 0;
  std::vector<std::pair<int, int>> offsets;  // (x, y) top-left corners
};

CropGrid make_grid(int image_w, int image_h, int crop_w, int crop_h,
                   int n_crops);

// A batch of ordered crops: raw pixel data of logical shape
// [n_samples, n_crops, crop_h, crop_w, channels] plus the keep-mask
// written by patch dropout.
struct PatchBatch {
  int n_samples = 0;
  int n_crops = 0;
  int crop_w = 0, crop_h = 0, channels = 0;
  std::vector<float> data;
  std::vector<std::pair<int, int>> offsets;  // n_samples * n_crops entries
  std::vector<bool> keep_mask;               // n_samples * n_crops, true = kept

  std::size_t patch_len() const {
    return static_cast<std::size_t>(crop_h) * crop_w * channels;
  }
  float* patch(int sample, int crop) {
    return data.data() +
           (static_cast<std::size_t>(sample) * n_crops + crop) * patch_len();
  }
  const float* patch(int sample, int crop) const {
    return data.data() +
           (static_cast<std::size_t>(sample) * n_crops + crop) * patch_len();
  }
};

// Exact pixel sub-rectangles at the grid offsets, no resampling.
PatchBatch extract_patches(const Image& image, const CropGrid& grid);

// Concatenate single-sample batches along the sample axis.
PatchBatch stack_batches(const std::vector<PatchBatch>& batches);

// Zero each (sample, patch) pair independently with probability p_d.
// If every patch of a sample would be dropped, one uniformly chosen
// patch is restored. Training-time only.
void patch_dropout(PatchBatch& batch, double p_d, Rng& rng);

Image strategy_downsample(const Image& image, int target_w, int target_h);
Image strategy_single_crop_train(const Image& image, int input_size,
                                 double scale_min, double scale_max, Rng& rng);
Image strategy_single_crop_eval(const Image& image, int input_size);
PatchBatch strategy_random_crops_train(const Image& image, int n, int crop_w,
                                       int crop_h, Rng& rng);
PatchBatch strategy_ordered(const Image& image, const CropGrid& grid);

// Arithmetic mean over per-patch probability vectors.
std::vector<double> average_predictions(
    const std::vector<std::vector<double>>& per_patch_probs);

}  // namespace pla
