#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "pla/cropping.hpp"
#include "pla/data.hpp"

using namespace pla;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "pla_test_data";
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

Image noise_image(int w, int h, int c, std::uint64_t seed) {
  Rng rng(seed);
  Image img = Image::filled(w, h, c, 0.0f);
  for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

float max_abs_diff(const Image& a, const Image& b) {
  REQUIRE(a.pixels.size() == b.pixels.size());
  float worst = 0.0f;
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    worst = std::max(worst, std::abs(a.pixels[i] - b.pixels[i]));
  return worst;
}

}  // namespace

TEST_CASE("default class names match the archive ordering") {
  CHECK(default_class_names() ==
        std::vector<std::string>{"MEL", "NV", "BCC", "AKIEC", "BKL", "DF",
                                 "VASC"});
}

TEST_CASE("manifest parses names, indices, methods and signal cells") {
  auto path = temp_dir() / "manifest_ok.csv";
  write_text(path,
             "image,label,diagnosis_method,signal_cell\n"
             "a.png,MEL,histopathology,4\n"
             "b.png,1,expert_consensus,\n"
             "\n"
             "c.png,VASC,,2\n");
  auto recs = load_manifest(path.string(), default_class_names());
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].label == 0);
  CHECK(recs[0].diagnosis_method == DiagnosisMethod::histopathology);
  CHECK(recs[0].signal_cell == 4);
  CHECK(recs[1].label == 1);
  CHECK(recs[1].signal_cell == -1);
  CHECK(recs[2].label == 6);
  CHECK(recs[2].diagnosis_method == DiagnosisMethod::unknown);
  CHECK(recs[2].image_ref == "c.png");
}

TEST_CASE("manifest errors carry the offending row number") {
  auto path = temp_dir() / "manifest_bad.csv";
  write_text(path,
             "image,label\n"
             "a.png,MEL\n"
             "b.png,NOPE\n");
  try {
    load_manifest(path.string(), default_class_names());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(e.code() == ErrorCode::io);
  }

  auto path2 = temp_dir() / "manifest_range.csv";
  write_text(path2, "image,label\na.png,9\n");
  CHECK_THROWS_AS(load_manifest(path2.string(), default_class_names()), Error);

  auto path3 = temp_dir() / "manifest_cols.csv";
  write_text(path3, "image,klass\na.png,1\n");
  CHECK_THROWS_AS(load_manifest(path3.string(), default_class_names()), Error);

  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.csv",
                                default_class_names()),
                  Error);
}

TEST_CASE("stratified split balances parts within each class") {
  std::vector<SampleRecord> recs;
  std::vector<int> class_sizes = {11, 7, 4, 26};
  for (std::size_t c = 0; c < class_sizes.size(); ++c)
    for (int i = 0; i < class_sizes[c]; ++i) {
      SampleRecord r;
      r.label = static_cast<int>(c);
      recs.push_back(r);
    }
  auto parts = stratified_split(recs, 42);
  REQUIRE(parts.size() == recs.size());
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    std::map<int, int> per_part;
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (recs[i].label == static_cast<int>(c)) ++per_part[parts[i]];
    int lo = 1 << 30, hi = 0;
    for (int p = 0; p < 4; ++p) {
      lo = std::min(lo, per_part[p]);
      hi = std::max(hi, per_part[p]);
    }
    CHECK(hi - lo <= 1);
  }
  for (int p : parts) {
    CHECK(p >= 0);
    CHECK(p <= 3);
  }
  CHECK(stratified_split(recs, 42) == parts);
  CHECK(stratified_split(recs, 43) != parts);
}

TEST_CASE("augment keeps the pixel multiset under neutral color settings") {
  AugmentConfig cfg;
  cfg.brightness_lo = cfg.brightness_hi = 1.0;
  cfg.saturation_lo = cfg.saturation_hi = 1.0;
  auto img = noise_image(9, 7, 3, 3);
  Rng rng(21);
  auto out = augment(img, cfg, rng);
  auto sorted_a = img.pixels;
  auto sorted_b = out.pixels;
  std::sort(sorted_a.begin(), sorted_a.end());
  std::sort(sorted_b.begin(), sorted_b.end());
  for (std::size_t i = 0; i < sorted_a.size(); ++i)
    CHECK(sorted_b[i] == doctest::Approx(sorted_a[i]).epsilon(1e-6));
}

TEST_CASE("augment output stays clamped and is deterministic per seed") {
  AugmentConfig cfg;
  auto img = noise_image(12, 8, 3, 5);
  Rng r1(77), r2(77);
  auto a = augment(img, cfg, r1);
  auto b = augment(img, cfg, r2);
  CHECK(a.pixels == b.pixels);
  for (float v : a.pixels) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("png round-trip loses at most quantization error") {
  auto img = noise_image(23, 17, 3, 9);
  auto path = temp_dir() / "roundtrip.png";
  write_image(path.string(), img);
  auto back = read_image(path.string());
  CHECK(back.width == 23);
  CHECK(back.height == 17);
  CHECK(back.channels == 3);
  CHECK(max_abs_diff(img, back) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("grayscale png round-trip") {
  auto img = noise_image(10, 14, 1, 13);
  auto path = temp_dir() / "gray.png";
  write_image(path.string(), img);
  auto back = read_image(path.string());
  CHECK(back.channels == 1);
  CHECK(max_abs_diff(img, back) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("ppm round-trip") {
  auto img = noise_image(8, 6, 3, 17);
  auto path = temp_dir() / "roundtrip.ppm";
  write_image(path.string(), img);
  auto back = read_image(path.string());
  CHECK(max_abs_diff(img, back) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("load_dataset resolves relative paths against the base dir") {
  auto dir = temp_dir();
  auto img = noise_image(6, 6, 3, 19);
  write_image((dir / "rel.ppm").string(), img);
  SampleRecord rec;
  rec.image_ref = "rel.ppm";
  rec.label = 0;
  auto ds = load_dataset({rec}, dir.string(), 7);
  REQUIRE(ds.images.size() == 1);
  CHECK(ds.images[0].width == 6);
  CHECK_THROWS_AS(load_dataset({rec}, "/nonexistent_dir", 7), Error);
}

TEST_CASE("resize_bilinear preserves constants and endpoints") {
  auto flat = Image::filled(17, 11, 3, 0.42f);
  auto out = resize_bilinear(flat, 40, 8);
  for (float v : out.pixels) CHECK(v == doctest::Approx(0.42f).epsilon(1e-6));

  // Identity resize copies pixels exactly.
  auto img = noise_image(9, 9, 3, 23);
  auto same = resize_bilinear(img, 9, 9);
  CHECK(max_abs_diff(img, same) == 0.0f);
}

TEST_CASE("synthetic generator is deterministic and respects counts") {
  SyntheticSpec spec;
  spec.n_per_class = {3, 2, 4};
  spec.image_size = 48;
  spec.crop_size = 16;
  spec.seed = 5;
  auto a = gen_synthetic(spec);
  auto b = gen_synthetic(spec);
  REQUIRE(a.records.size() == 9);
  REQUIRE(a.images.size() == 9);
  std::map<int, int> freq;
  for (const auto& r : a.records) {
    ++freq[r.label];
    CHECK(r.signal_cell >= 0);
    CHECK(r.signal_cell < 9);
    CHECK(r.diagnosis_method != DiagnosisMethod::unknown);
  }
  CHECK(freq[0] == 3);
  CHECK(freq[1] == 2);
  CHECK(freq[2] == 4);
  for (std::size_t i = 0; i < a.images.size(); ++i)
    CHECK(a.images[i].pixels == b.images[i].pixels);

  spec.seed = 6;
  auto c = gen_synthetic(spec);
  CHECK(a.images[0].pixels != c.images[0].pixels);
}

TEST_CASE("center_signal pins the blob to the middle cell") {
  SyntheticSpec spec;
  spec.n_per_class = {2, 2};
  spec.image_size = 48;
  spec.crop_size = 16;
  spec.center_signal = true;
  spec.seed = 7;
  auto ds = gen_synthetic(spec);
  for (const auto& r : ds.records) CHECK(r.signal_cell == 4);
}

TEST_CASE("labels are recoverable from the signal patch by correlation") {
  SyntheticSpec spec;
  spec.n_per_class = {4, 4, 4, 4};
  spec.image_size = 96;
  spec.crop_size = 32;
  spec.seed = 31;
  auto ds = gen_synthetic(spec);
  auto grid = make_grid(96, 96, 32, 32, 9);
  int n_classes = 4;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    auto [ox, oy] = grid.offsets[static_cast<std::size_t>(ds.records[i].signal_cell)];
    // Independent oracle: correlate the signal patch against each class
    // texture; the generating class should win.
    double best = -1e30;
    int best_label = -1;
    for (int cand = 0; cand < n_classes; ++cand) {
      double corr = 0.0;
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
          auto tex = synthetic_texture(cand, n_classes, x, y, 32);
          for (int c = 0; c < 3; ++c)
            corr += (ds.images[i].at(oy + y, ox + x, c) - 0.5) *
                    tex[static_cast<std::size_t>(c)];
        }
      if (corr > best) {
        best = corr;
        best_label = cand;
      }
    }
    CHECK(best_label == ds.records[i].label);
  }
}

TEST_CASE("synthetic generator validates its geometry") {
  SyntheticSpec spec;
  spec.n_per_class = {2};
  spec.image_size = 48;
  spec.crop_size = 16;
  CHECK_THROWS_AS(gen_synthetic(spec), Error);  // one class

  spec.n_per_class = {2, 2};
  spec.n_distractors = 9;
  CHECK_THROWS_AS(gen_synthetic(spec), Error);  // too many distractors

  spec.n_distractors = 2;
  spec.crop_size = 64;
  CHECK_THROWS_AS(gen_synthetic(spec), Error);  // crop larger than image
}
