#include "pla/cropping.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pla {

namespace {

// round-half-up
int round_offset(double x) { return static_cast<int>(std::floor(x + 0.5)); }

std::vector<int> axis_offsets(int extent, int crop, int g) {
  std::vector<int> out;
  for (int i = 0; i < g; ++i)
    out.push_back(round_offset(static_cast<double>(i) * (extent - crop) / (g - 1)));
  return out;
}

}  // namespace

CropGrid make_grid(int image_w, int image_h, int crop_w, int crop_h,
                   int n_crops) {
  require(crop_w > 0 && crop_h > 0 && image_w > 0 && image_h > 0,
          ErrorCode::shape, "make_grid: sizes must be positive");
  require(crop_w <= image_w && crop_h <= image_h, ErrorCode::shape,
          "make_grid: crop larger than image");
  require(n_crops == 5 || n_crops == 9 || n_crops == 16, ErrorCode::config,
          "make_grid: n_crops must be one of {5, 9, 16}");
  CropGrid grid;
  grid.image_w = image_w;
  grid.image_h = image_h;
  grid.crop_w = crop_w;
  grid.crop_h = crop_h;
  grid.n_crops = n_crops;
  int mx = image_w - crop_w;
  int my = image_h - crop_h;
  if (n_crops == 5) {
    grid.offsets = {{0, 0}, {mx, 0}, {0, my}, {mx, my}, {mx / 2, my / 2}};
  } else {
    int g = n_crops == 9 ? 3 : 4;
    auto xs = axis_offsets(image_w, crop_w, g);
    auto ys = axis_offsets(image_h, crop_h, g);
    for (int yi = 0; yi < g; ++yi)
      for (int xi = 0; xi < g; ++xi)
        grid.offsets.emplace_back(xs[static_cast<std::size_t>(xi)],
                                  ys[static_cast<std::size_t>(yi)]);
  }
  std::set<std::pair<int, int>> uniq(grid.offsets.begin(), grid.offsets.end());
  require(uniq.size() == grid.offsets.size(), ErrorCode::shape,
          "make_grid: degenerate grid, offsets collapse");
  return grid;
}

PatchBatch extract_patches(const Image& image, const CropGrid& grid) {
  require(image.width == grid.image_w && image.height == grid.image_h,
          ErrorCode::shape, "extract_patches: image does not match grid");
  PatchBatch batch;
  batch.n_samples = 1;
  batch.n_crops = grid.n_crops;
  batch.crop_w = grid.crop_w;
  batch.crop_h = grid.crop_h;
  batch.channels = image.channels;
  batch.offsets = grid.offsets;
  batch.keep_mask.assign(static_cast<std::size_t>(grid.n_crops), true);
  batch.data.resize(static_cast<std::size_t>(grid.n_crops) * batch.patch_len());
  for (int p = 0; p < grid.n_crops; ++p) {
    auto [ox, oy] = grid.offsets[static_cast<std::size_t>(p)];
    float* dst = batch.patch(0, p);
    for (int y = 0; y < grid.crop_h; ++y)
      for (int x = 0; x < grid.crop_w; ++x)
        for (int c = 0; c < image.channels; ++c)
          *dst++ = image.at(oy + y, ox + x, c);
  }
  return batch;
}

PatchBatch stack_batches(const std::vector<PatchBatch>& batches) {
  require(!batches.empty(), ErrorCode::shape, "stack_batches: empty list");
  PatchBatch out = batches.front();
  for (std::size_t i = 1; i < batches.size(); ++i) {
    const auto& b = batches[i];
    require(b.n_crops == out.n_crops && b.crop_w == out.crop_w &&
                b.crop_h == out.crop_h && b.channels == out.channels,
            ErrorCode::shape, "stack_batches: geometry mismatch");
    out.n_samples += b.n_samples;
    out.data.insert(out.data.end(), b.data.begin(), b.data.end());
    out.offsets.insert(out.offsets.end(), b.offsets.begin(), b.offsets.end());
    out.keep_mask.insert(out.keep_mask.end(), b.keep_mask.begin(),
                         b.keep_mask.end());
  }
  return out;
}

void patch_dropout(PatchBatch& batch, double p_d, Rng& rng) {
  require(p_d >= 0.0 && p_d < 1.0, ErrorCode::config,
          "patch_dropout: p_d must lie in [0, 1)");
  if (p_d == 0.0) return;
  std::size_t plen = batch.patch_len();
  for (int s = 0; s < batch.n_samples; ++s) {
    std::vector<int> dropped;
    for (int p = 0; p < batch.n_crops; ++p) {
      if (rng.bernoulli(p_d)) dropped.push_back(p);
    }
    if (static_cast<int>(dropped.size()) == batch.n_crops) {
      // All-dropped guard: keep one patch so the sample still carries signal.
      std::size_t keep = rng.index(static_cast<std::uint64_t>(batch.n_crops));
      dropped.erase(dropped.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    for (int p : dropped) {
      std::fill_n(batch.patch(s, p), plen, 0.0f);
      batch.keep_mask[static_cast<std::size_t>(s) * batch.n_crops + p] = false;
    }
  }
}

Image strategy_downsample(const Image& image, int target_w, int target_h) {
  return resize_bilinear(image, target_w, target_h);
}

Image strategy_single_crop_train(const Image& image, int input_size,
                                 double scale_min, double scale_max, Rng& rng) {
  require(input_size > 0, ErrorCode::shape, "single_crop: bad input size");
  double min_dim = std::min(image.width, image.height);
  // The resized image must still contain an input_size crop.
  double lo = std::max(scale_min, static_cast<double>(input_size) / min_dim);
  double hi = std::max(scale_max, lo);
  double s = rng.uniform(lo, hi);
  int rw = std::max(input_size, static_cast<int>(std::lround(image.width * s)));
  int rh = std::max(input_size, static_cast<int>(std::lround(image.height * s)));
  Image resized = resize_bilinear(image, rw, rh);
  int ox = static_cast<int>(rng.index(static_cast<std::uint64_t>(rw - input_size + 1)));
  int oy = static_cast<int>(rng.index(static_cast<std::uint64_t>(rh - input_size + 1)));
  Image out = Image::filled(input_size, input_size, image.channels, 0.0f);
  for (int y = 0; y < input_size; ++y)
    for (int x = 0; x < input_size; ++x)
      for (int c = 0; c < image.channels; ++c)
        out.at(y, x, c) = resized.at(oy + y, ox + x, c);
  return out;
}

Image strategy_single_crop_eval(const Image& image, int input_size) {
  // Centered rectangle covering 85% of each axis, then bilinear resize.
  int cw = static_cast<int>(std::floor(0.85 * image.width));
  int ch = static_cast<int>(std::floor(0.85 * image.height));
  int ox = (image.width - cw) / 2;
  int oy = (image.height - ch) / 2;
  Image crop = Image::filled(cw, ch, image.channels, 0.0f);
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x)
      for (int c = 0; c < image.channels; ++c)
        crop.at(y, x, c) = image.at(oy + y, ox + x, c);
  return resize_bilinear(crop, input_size, input_size);
}

PatchBatch strategy_random_crops_train(const Image& image, int n, int crop_w,
                                       int crop_h, Rng& rng) {
  require(n > 0, ErrorCode::shape, "random_crops: n must be positive");
  require(crop_w <= image.width && crop_h <= image.height, ErrorCode::shape,
          "random_crops: crop larger than image");
  PatchBatch batch;
  batch.n_samples = 1;
  batch.n_crops = n;
  batch.crop_w = crop_w;
  batch.crop_h = crop_h;
  batch.channels = image.channels;
  batch.keep_mask.assign(static_cast<std::size_t>(n), true);
  batch.data.resize(static_cast<std::size_t>(n) * batch.patch_len());
  for (int p = 0; p < n; ++p) {
    int ox = static_cast<int>(
        rng.index(static_cast<std::uint64_t>(image.width - crop_w + 1)));
    int oy = static_cast<int>(
        rng.index(static_cast<std::uint64_t>(image.height - crop_h + 1)));
    batch.offsets.emplace_back(ox, oy);
    float* dst = batch.patch(0, p);
    for (int y = 0; y < crop_h; ++y)
      for (int x = 0; x < crop_w; ++x)
        for (int c = 0; c < image.channels; ++c)
          *dst++ = image.at(oy + y, ox + x, c);
  }
  return batch;
}

PatchBatch strategy_ordered(const Image& image, const CropGrid& grid) {
  return extract_patches(image, grid);
}

std::vector<double> average_predictions(
    const std::vector<std::vector<double>>& per_patch_probs) {
  require(!per_patch_probs.empty(), ErrorCode::shape,
          "average_predictions: empty patch list");
  std::size_t c = per_patch_probs.front().size();
  std::vector<double> mean(c, 0.0);
  for (const auto& row : per_patch_probs) {
    require(row.size() == c, ErrorCode::shape,
            "average_predictions: ragged rows");
    for (std::size_t i = 0; i < c; ++i) mean[i] += row[i];
  }
  for (auto& v : mean) v /= static_cast<double>(per_patch_probs.size());
  return mean;
}

}  // namespace pla
