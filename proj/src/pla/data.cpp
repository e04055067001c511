#include "pla/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "pla/cropping.hpp"

namespace pla {

const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names = {"MEL", "NV",  "BCC", "AKIEC",
                                                 "BKL", "DF",  "VASC"};
  return names;
}

std::vector<SampleRecord> load_manifest(
    const std::string& path, const std::vector<std::string>& class_names) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::io, "cannot open manifest: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), ErrorCode::io,
          "manifest is empty: " + path);
  auto header = split_string(trim(line), ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
  require(col.count("image") && col.count("label"), ErrorCode::io,
          "manifest must have image,label columns: " + path);
  bool has_method = col.count("diagnosis_method") > 0;
  bool has_signal = col.count("signal_cell") > 0;

  std::map<std::string, int> by_name;
  for (std::size_t i = 0; i < class_names.size(); ++i)
    by_name[class_names[i]] = static_cast<int>(i);

  std::vector<SampleRecord> out;
  int row_no = 1;
  while (std::getline(f, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto fields = split_string(line, ',');
    require(fields.size() >= header.size(), ErrorCode::io,
            "manifest row " + std::to_string(row_no) + ": too few fields");
    SampleRecord rec;
    rec.image_ref = trim(fields[col["image"]]);
    std::string lab = trim(fields[col["label"]]);
    if (by_name.count(lab)) {
      rec.label = by_name[lab];
    } else {
      try {
        std::size_t used = 0;
        rec.label = std::stoi(lab, &used);
        require(used == lab.size(), ErrorCode::io, "bad label");
      } catch (const std::exception&) {
        throw Error(ErrorCode::io, "manifest row " + std::to_string(row_no) +
                                       ": unknown label '" + lab + "'");
      }
      require(rec.label >= 0 &&
                  rec.label < static_cast<int>(class_names.size()),
              ErrorCode::io, "manifest row " + std::to_string(row_no) +
                                 ": label index out of range");
    }
    if (has_method)
      rec.diagnosis_method =
          parse_diagnosis_method(trim(fields[col["diagnosis_method"]]));
    if (has_signal) {
      std::string sc = trim(fields[col["signal_cell"]]);
      if (!sc.empty()) rec.signal_cell = std::stoi(sc);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

Dataset load_dataset(const std::vector<SampleRecord>& records,
                     const std::string& base_dir, int n_classes) {
  Dataset ds;
  ds.records = records;
  ds.n_classes = n_classes;
  ds.images.reserve(records.size());
  for (const auto& rec : records) {
    std::string path = rec.image_ref;
    if (!base_dir.empty() && !path.empty() && path.front() != '/')
      path = base_dir + "/" + path;
    ds.images.push_back(read_image(path));
  }
  return ds;
}

std::vector<int> stratified_split(const std::vector<SampleRecord>& records,
                                  std::uint64_t seed) {
  int n_classes = 0;
  for (const auto& r : records) n_classes = std::max(n_classes, r.label + 1);
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < records.size(); ++i)
    by_class[static_cast<std::size_t>(records[i].label)].push_back(i);
  Rng rng(seed);
  std::vector<int> part(records.size(), 0);
  for (auto& idx : by_class) {
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j)
      part[idx[j]] = static_cast<int>(j % 4);
  }
  return part;
}

Image augment(const Image& image, const AugmentConfig& cfg, Rng& rng) {
  bool hflip = rng.bernoulli(0.5);
  bool vflip = rng.bernoulli(0.5);
  float brightness = static_cast<float>(
      rng.uniform(cfg.brightness_lo, cfg.brightness_hi));
  float saturation = static_cast<float>(
      rng.uniform(cfg.saturation_lo, cfg.saturation_hi));
  Image out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      int sy = vflip ? image.height - 1 - y : y;
      int sx = hflip ? image.width - 1 - x : x;
      if (image.channels == 3) {
        float r = image.at(sy, sx, 0), g = image.at(sy, sx, 1),
              b = image.at(sy, sx, 2);
        float luma = 0.299f * r + 0.587f * g + 0.114f * b;
        float vals[3] = {r, g, b};
        for (int c = 0; c < 3; ++c) {
          float v = luma + saturation * (vals[c] - luma);
          out.at(y, x, c) = std::clamp(v * brightness, 0.0f, 1.0f);
        }
      } else {
        for (int c = 0; c < image.channels; ++c)
          out.at(y, x, c) =
              std::clamp(image.at(sy, sx, c) * brightness, 0.0f, 1.0f);
      }
    }
  return out;
}

std::array<float, 3> synthetic_texture(int label, int n_classes, int x, int y,
                                       int cell_size) {
  // Orientation and stripe frequency vary with the class; the color tint
  // makes classes separable even after heavy downsampling.
  double theta = 3.14159265358979 * label / std::max(1, n_classes);
  double freq = 2.0 + label % 4;
  double phase = 6.28318530717959 * freq *
                 (x * std::cos(theta) + y * std::sin(theta)) / cell_size;
  float s = static_cast<float>(std::sin(phase));
  static const float tints[7][3] = {
      {1.0f, 0.2f, 0.2f},  {0.2f, 1.0f, 0.2f},  {0.2f, 0.2f, 1.0f},
      {1.0f, 1.0f, 0.1f},  {1.0f, 0.1f, 1.0f},  {0.1f, 1.0f, 1.0f},
      {0.9f, 0.6f, 0.1f}};
  const float* t = tints[label % 7];
  return {s * t[0], s * t[1], s * t[2]};
}

namespace {

void paint_blob(Image& img, int label, int n_classes, int ox, int oy,
                int cell, double amplitude, Rng& rng) {
  double amp = amplitude * rng.uniform(0.9, 1.1);
  double radius = 0.36 * cell;
  require(2.0 * radius <= cell, ErrorCode::shape,
          "synthetic blob larger than grid cell");
  double cx = ox + cell / 2.0, cy = oy + cell / 2.0;
  int x0 = std::max(0, ox), x1 = std::min(img.width, ox + cell);
  int y0 = std::max(0, oy), y1 = std::min(img.height, oy + cell);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      auto tex = synthetic_texture(label, n_classes, x - ox, y - oy, cell);
      for (int c = 0; c < 3; ++c) {
        float v = img.at(y, x, c) + static_cast<float>(amp) * tex[static_cast<std::size_t>(c)];
        img.at(y, x, c) = std::clamp(v, 0.0f, 1.0f);
      }
    }
}

}  // namespace

Dataset gen_synthetic(const SyntheticSpec& spec) {
  int n_classes = static_cast<int>(spec.n_per_class.size());
  require(n_classes >= 2, ErrorCode::config,
          "gen_synthetic: need at least two classes");
  CropGrid grid = make_grid(spec.image_size, spec.image_size, spec.crop_size,
                            spec.crop_size, spec.grid_crops);
  require(spec.n_distractors < grid.n_crops, ErrorCode::config,
          "gen_synthetic: too many distractor cells");
  Rng rng(spec.seed);
  Dataset ds;
  ds.n_classes = n_classes;
  for (int label = 0; label < n_classes; ++label) {
    for (int i = 0; i < spec.n_per_class[static_cast<std::size_t>(label)]; ++i) {
      Image img = Image::filled(spec.image_size, spec.image_size, 3, 0.5f);
      for (auto& p : img.pixels)
        p = std::clamp(
            p + static_cast<float>(rng.uniform(-spec.noise, spec.noise)), 0.0f,
            1.0f);
      int signal_cell =
          spec.center_signal
              ? grid.n_crops / 2
              : static_cast<int>(rng.index(static_cast<std::uint64_t>(grid.n_crops)));
      auto [sx, sy] = grid.offsets[static_cast<std::size_t>(signal_cell)];
      paint_blob(img, label, n_classes, sx, sy, spec.crop_size,
                 spec.signal_amplitude, rng);
      // Distractors carry a random class texture at lower contrast.
      std::vector<int> other;
      for (int p = 0; p < grid.n_crops; ++p)
        if (p != signal_cell) other.push_back(p);
      rng.shuffle(other);
      for (int d = 0; d < spec.n_distractors; ++d) {
        int cell = other[static_cast<std::size_t>(d)];
        int dlabel = static_cast<int>(rng.index(static_cast<std::uint64_t>(n_classes)));
        auto [dx, dy] = grid.offsets[static_cast<std::size_t>(cell)];
        paint_blob(img, dlabel, n_classes, dx, dy, spec.crop_size,
                   spec.distractor_amplitude, rng);
      }
      SampleRecord rec;
      rec.label = label;
      rec.signal_cell = signal_cell;
      double u = rng.uniform();
      double acc = 0.0;
      int method = 3;
      for (int m = 0; m < 4; ++m) {
        acc += spec.diagnosis_dist[static_cast<std::size_t>(m)];
        if (u < acc) {
          method = m;
          break;
        }
      }
      rec.diagnosis_method = static_cast<DiagnosisMethod>(method);
      ds.records.push_back(rec);
      ds.images.push_back(std::move(img));
    }
  }
  return ds;
}

}  // namespace pla
