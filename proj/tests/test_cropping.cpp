#include <cmath>
#include <set>

#include "doctest.h"
#include "pla/cropping.hpp"

using namespace pla;

namespace {

Image gradient_image(int w, int h, int c) {
  Image img = Image::filled(w, h, c, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img.at(y, x, ch) =
            static_cast<float>((y * 131 + x * 7 + ch * 31) % 251) / 250.0f;
  return img;
}

// Independent offset oracle: nearest integer to i*(L-c)/(g-1), half up.
int oracle_offset(int i, int extent, int crop, int g) {
  return static_cast<int>(
      std::floor(static_cast<double>(i) * (extent - crop) / (g - 1) + 0.5));
}

}  // namespace

TEST_CASE("five-crop grid hits the corners and the center") {
  auto grid = make_grid(600, 450, 224, 224, 5);
  std::vector<std::pair<int, int>> expect = {
      {0, 0}, {376, 0}, {0, 226}, {376, 226}, {188, 113}};
  CHECK(grid.offsets == expect);
}

TEST_CASE("nine-crop grid is row-major over a 3x3 lattice") {
  auto grid = make_grid(600, 450, 224, 224, 9);
  REQUIRE(grid.offsets.size() == 9);
  std::vector<int> xs = {0, 188, 376};
  std::vector<int> ys = {0, 113, 226};
  for (int yi = 0; yi < 3; ++yi)
    for (int xi = 0; xi < 3; ++xi) {
      auto [x, y] = grid.offsets[static_cast<std::size_t>(yi * 3 + xi)];
      CHECK(x == xs[static_cast<std::size_t>(xi)]);
      CHECK(y == ys[static_cast<std::size_t>(yi)]);
    }
}

TEST_CASE("sixteen-crop offsets round half up") {
  auto grid = make_grid(600, 450, 224, 224, 16);
  // 376/3 = 125.33 -> 125, 250.67 -> 251; 226/3 = 75.33 -> 75, 150.67 -> 151.
  CHECK(grid.offsets[1] == std::pair<int, int>{125, 0});
  CHECK(grid.offsets[2] == std::pair<int, int>{251, 0});
  CHECK(grid.offsets[4] == std::pair<int, int>{0, 75});
  CHECK(grid.offsets[8] == std::pair<int, int>{0, 151});
  CHECK(grid.offsets[15] == std::pair<int, int>{376, 226});
}

TEST_CASE("grid offsets match the rounding oracle across geometries") {
  struct Geo {
    int w, h, c;
  };
  const Geo geometries[] = {
      {100, 80, 32}, {600, 450, 224}, {47, 47, 13}, {224, 224, 96}};
  for (int n : {9, 16}) {
    int g = n == 9 ? 3 : 4;
    for (auto [w, h, c] : geometries) {
      auto grid = make_grid(w, h, c, c, n);
      for (int yi = 0; yi < g; ++yi)
        for (int xi = 0; xi < g; ++xi) {
          auto [x, y] = grid.offsets[static_cast<std::size_t>(yi * g + xi)];
          CHECK(x == oracle_offset(xi, w, c, g));
          CHECK(y == oracle_offset(yi, h, c, g));
          CHECK(x >= 0);
          CHECK(y >= 0);
          CHECK(x + c <= w);
          CHECK(y + c <= h);
        }
      // Extremes are pinned to the image borders.
      CHECK(grid.offsets.front() == std::pair<int, int>{0, 0});
      CHECK(grid.offsets.back() == std::pair<int, int>{w - c, h - c});
    }
  }
}

TEST_CASE("make_grid rejects bad inputs") {
  CHECK_THROWS_AS(make_grid(100, 100, 64, 64, 7), Error);
  CHECK_THROWS_AS(make_grid(100, 100, 128, 64, 9), Error);
  CHECK_THROWS_AS(make_grid(0, 100, 64, 64, 9), Error);
  // crop == image collapses every offset to (0,0).
  CHECK_THROWS_AS(make_grid(64, 64, 64, 64, 5), Error);
}

TEST_CASE("extract_patches copies exact sub-rectangles") {
  auto img = gradient_image(40, 30, 3);
  auto grid = make_grid(40, 30, 12, 10, 9);
  auto batch = extract_patches(img, grid);
  REQUIRE(batch.n_samples == 1);
  REQUIRE(batch.n_crops == 9);
  for (int p = 0; p < 9; ++p) {
    auto [ox, oy] = grid.offsets[static_cast<std::size_t>(p)];
    const float* patch = batch.patch(0, p);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 12; ++x)
        for (int c = 0; c < 3; ++c)
          CHECK(patch[(static_cast<std::size_t>(y) * 12 + x) * 3 + c] ==
                img.at(oy + y, ox + x, c));
  }
}

TEST_CASE("stack_batches concatenates along the sample axis") {
  auto img1 = gradient_image(30, 30, 1);
  auto img2 = gradient_image(30, 30, 1);
  for (auto& v : img2.pixels) v = 1.0f - v;
  auto grid = make_grid(30, 30, 8, 8, 5);
  auto b1 = extract_patches(img1, grid);
  auto b2 = extract_patches(img2, grid);
  auto stacked = stack_batches({b1, b2});
  CHECK(stacked.n_samples == 2);
  CHECK(stacked.data.size() == b1.data.size() + b2.data.size());
  CHECK(stacked.patch(0, 3)[5] == b1.patch(0, 3)[5]);
  CHECK(stacked.patch(1, 3)[5] == b2.patch(0, 3)[5]);

  auto bad = extract_patches(gradient_image(30, 30, 1),
                             make_grid(30, 30, 9, 9, 5));
  CHECK_THROWS_AS(stack_batches({b1, bad}), Error);
}

TEST_CASE("patch_dropout zeroes whole patches and records the mask") {
  auto img = gradient_image(30, 30, 2);
  // Pixels strictly positive so a zero can only come from dropout.
  for (auto& v : img.pixels) v = v * 0.5f + 0.25f;
  auto grid = make_grid(30, 30, 8, 8, 9);
  auto batch = extract_patches(img, grid);
  Rng rng(7);
  patch_dropout(batch, 0.5, rng);
  int kept = 0;
  for (int p = 0; p < 9; ++p) {
    const float* patch = batch.patch(0, p);
    bool all_zero = true, any_zero = false;
    for (std::size_t i = 0; i < batch.patch_len(); ++i) {
      if (patch[i] == 0.0f) any_zero = true;
      else all_zero = false;
    }
    if (batch.keep_mask[static_cast<std::size_t>(p)]) {
      CHECK(!any_zero);
      ++kept;
    } else {
      CHECK(all_zero);
    }
  }
  CHECK(kept >= 1);
}

TEST_CASE("patch_dropout keeps one patch even at extreme rates") {
  auto img = gradient_image(20, 20, 1);
  for (auto& v : img.pixels) v = v * 0.5f + 0.25f;
  auto grid = make_grid(20, 20, 6, 6, 5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto batch = extract_patches(img, grid);
    Rng rng(seed);
    patch_dropout(batch, 0.999, rng);
    int kept = 0;
    for (bool k : batch.keep_mask) kept += k ? 1 : 0;
    CHECK(kept >= 1);
  }
  auto batch = extract_patches(img, grid);
  Rng rng(1);
  CHECK_THROWS_AS(patch_dropout(batch, 1.0, rng), Error);
  CHECK_THROWS_AS(patch_dropout(batch, -0.1, rng), Error);
}

TEST_CASE("patch_dropout commutes with batching") {
  auto grid = make_grid(24, 24, 8, 8, 9);
  std::vector<PatchBatch> singles;
  for (int s = 0; s < 4; ++s) {
    auto img = gradient_image(24, 24, 3);
    for (auto& v : img.pixels) v = v * 0.5f + 0.1f * static_cast<float>(s + 1);
    singles.push_back(extract_patches(img, grid));
  }

  // Drop after stacking.
  auto stacked = stack_batches(singles);
  Rng rng_a(99);
  patch_dropout(stacked, 0.4, rng_a);

  // Drop each sample, then stack; same seed, shared stream.
  Rng rng_b(99);
  for (auto& b : singles) patch_dropout(b, 0.4, rng_b);
  auto restacked = stack_batches(singles);

  CHECK(stacked.data == restacked.data);
  CHECK(stacked.keep_mask == restacked.keep_mask);
}

TEST_CASE("downsample strategy preserves constant images") {
  auto img = Image::filled(60, 45, 3, 0.37f);
  auto out = strategy_downsample(img, 16, 16);
  CHECK(out.width == 16);
  CHECK(out.height == 16);
  for (float v : out.pixels) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("eval single crop takes the centered 85 percent rectangle") {
  // Mark the exact expected rectangle; anything outside is poison.
  Image img = Image::filled(100, 60, 1, -1.0f);
  int cw = 85, ch = 51, ox = 7, oy = 4;  // floor(0.85*100/60), centered
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) img.at(oy + y, ox + x, 0) = 0.6f;
  auto out = strategy_single_crop_eval(img, 32);
  CHECK(out.width == 32);
  CHECK(out.height == 32);
  for (float v : out.pixels) CHECK(v == doctest::Approx(0.6f).epsilon(1e-6));
}

TEST_CASE("train single crop always fits and is deterministic") {
  auto img = gradient_image(50, 40, 3);
  Rng r1(5), r2(5);
  auto a = strategy_single_crop_train(img, 24, 0.7, 1.1, r1);
  auto b = strategy_single_crop_train(img, 24, 0.7, 1.1, r2);
  CHECK(a.pixels == b.pixels);
  CHECK(a.width == 24);
  CHECK(a.height == 24);
  // Even when the scale range would shrink below the crop size.
  Rng r3(5);
  auto c = strategy_single_crop_train(img, 36, 0.1, 0.2, r3);
  CHECK(c.width == 36);
  CHECK(c.height == 36);
}

TEST_CASE("random train crops are in-bounds pixel copies") {
  auto img = gradient_image(40, 30, 2);
  Rng rng(11);
  auto batch = strategy_random_crops_train(img, 9, 10, 10, rng);
  REQUIRE(batch.offsets.size() == 9);
  for (int p = 0; p < 9; ++p) {
    auto [ox, oy] = batch.offsets[static_cast<std::size_t>(p)];
    CHECK(ox >= 0);
    CHECK(oy >= 0);
    CHECK(ox + 10 <= 40);
    CHECK(oy + 10 <= 30);
    const float* patch = batch.patch(0, p);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x)
        for (int c = 0; c < 2; ++c)
          CHECK(patch[(static_cast<std::size_t>(y) * 10 + x) * 2 + c] ==
                img.at(oy + y, ox + x, c));
  }
}

TEST_CASE("average_predictions is the arithmetic mean") {
  std::vector<std::vector<double>> rows = {
      {0.2, 0.8}, {0.6, 0.4}, {0.1, 0.9}};
  auto mean = average_predictions(rows);
  CHECK(mean[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(mean[1] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK_THROWS_AS(average_predictions({}), Error);
  CHECK_THROWS_AS(average_predictions({{0.5, 0.5}, {1.0}}), Error);
}
