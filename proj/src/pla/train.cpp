#include "pla/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "pla/balancing.hpp"
#include "pla/checkpoint.hpp"
#include "pla/cropping.hpp"
#include "pla/gradcheck.hpp"
#include "pla/optim.hpp"

namespace fs = std::filesystem;

namespace pla {

namespace {

bool crops_strategy(const ExperimentConfig& cfg) {
  return cfg.strategy == Strategy::multi_crop ||
         cfg.strategy == Strategy::ordered;
}

int effective_n_crops(const ExperimentConfig& cfg) {
  return crops_strategy(cfg) ? cfg.n_crops : 1;
}

std::uint64_t synth_part_seed(const ExperimentConfig& cfg, SplitPart part) {
  return cfg.split_seed * 1000003ull + static_cast<std::uint64_t>(part) + 1;
}

SyntheticSpec synth_spec(const ExperimentConfig& cfg, SplitPart part) {
  SyntheticSpec spec;
  switch (part) {
    case SplitPart::train: spec.n_per_class = cfg.synth_train_per_class; break;
    case SplitPart::val: spec.n_per_class = cfg.synth_val_per_class; break;
    case SplitPart::test: spec.n_per_class = cfg.synth_test_per_class; break;
  }
  spec.image_size = cfg.synth_image_size;
  spec.crop_size = cfg.input_size;
  spec.grid_crops = crops_strategy(cfg) ? cfg.n_crops : 9;
  spec.center_signal = cfg.synth_center_signal;
  spec.n_distractors = cfg.synth_distractors;
  spec.noise = cfg.synth_noise;
  spec.signal_amplitude = cfg.synth_signal_amplitude;
  spec.distractor_amplitude = cfg.synth_distractor_amplitude;
  spec.diagnosis_dist = cfg.synth_diagnosis_dist;
  spec.seed = synth_part_seed(cfg, part);
  return spec;
}

// HWC image appended as CHW planes.
void append_chw(std::vector<float>& out, const Image& img) {
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out.push_back(img.at(y, x, c));
}

void append_patch_chw(std::vector<float>& out, const PatchBatch& batch,
                      int sample, int patch) {
  const float* src = batch.patch(sample, patch);
  int h = batch.crop_h, w = batch.crop_w, ch = batch.channels;
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.push_back(src[(static_cast<std::size_t>(y) * w + x) * ch + c]);
}

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

struct BatchInput {
  DiffTensor<float> input;  // [n_b*n_c, C, H, W]
  int n_b = 0;
  int n_c = 1;
  std::vector<std::pair<int, int>> offsets;  // per patch of first sample
};

BatchInput make_train_input(const ExperimentConfig& cfg, const Dataset& ds,
                            const std::vector<std::size_t>& indices,
                            const CropGrid* grid, Rng& rng) {
  AugmentConfig aug;
  int n_c = effective_n_crops(cfg);
  std::vector<float> buf;
  buf.reserve(indices.size() * static_cast<std::size_t>(n_c) * 3u *
              static_cast<std::size_t>(cfg.input_size) * cfg.input_size);
  for (std::size_t idx : indices) {
    Image img = cfg.augment ? augment(ds.images[idx], aug, rng)
                            : ds.images[idx];
    switch (cfg.strategy) {
      case Strategy::downsample: {
        append_chw(buf, strategy_downsample(img, cfg.input_size, cfg.input_size));
        break;
      }
      case Strategy::single_crop: {
        append_chw(buf, strategy_single_crop_train(img, cfg.input_size,
                                                   cfg.single_crop_scale_min,
                                                   cfg.single_crop_scale_max,
                                                   rng));
        break;
      }
      case Strategy::multi_crop: {
        auto batch = strategy_random_crops_train(img, n_c, cfg.input_size,
                                                 cfg.input_size, rng);
        for (int p = 0; p < n_c; ++p) append_patch_chw(buf, batch, 0, p);
        break;
      }
      case Strategy::ordered: {
        auto batch = strategy_ordered(img, *grid);
        if (cfg.p_d > 0.0) patch_dropout(batch, cfg.p_d, rng);
        for (int p = 0; p < n_c; ++p) append_patch_chw(buf, batch, 0, p);
        break;
      }
    }
  }
  BatchInput out;
  out.n_b = static_cast<int>(indices.size());
  out.n_c = n_c;
  out.input = DiffTensor<float>::leaf(
      {out.n_b * n_c, 3, cfg.input_size, cfg.input_size}, std::move(buf));
  return out;
}

std::vector<double> sample_weights(const ExperimentConfig& cfg,
                                   const Dataset& train) {
  std::vector<double> out(train.records.size(), 1.0);
  if (cfg.balancing != BalancingMode::loss_weighting &&
      cfg.balancing != BalancingMode::diagnosis_weighting)
    return out;
  std::vector<int> labels;
  labels.reserve(train.records.size());
  for (const auto& r : train.records) labels.push_back(r.label);
  auto counts = count_classes(labels, cfg.n_classes());
  WeightTable table;
  table.k = cfg.k;
  table.class_weights = class_weights(counts, cfg.k);
  table.diagnosis_multipliers = cfg.diag_multipliers;
  table.benign_classes.insert(cfg.benign_classes.begin(),
                              cfg.benign_classes.end());
  table.strict_methods = cfg.diag_strict;
  for (std::size_t i = 0; i < train.records.size(); ++i) {
    if (cfg.balancing == BalancingMode::diagnosis_weighting)
      out[i] = diagnosis_weight(train.records[i].label,
                                train.records[i].diagnosis_method, table);
    else
      out[i] = table.class_weights[static_cast<std::size_t>(
          train.records[i].label)];
  }
  return out;
}

void aggregate_predictions(const ForwardResult<float>& fwd, int n_b, int n_c,
                           int n_classes, std::vector<int>* preds,
                           std::vector<std::vector<double>>* probs_out) {
  if (fwd.per_patch) {
    auto probs = softmax_rows(fwd.logits.data(), n_b * n_c, n_classes);
    for (int b = 0; b < n_b; ++b) {
      std::vector<std::vector<double>> patch_probs;
      for (int p = 0; p < n_c; ++p) {
        std::vector<double> row(static_cast<std::size_t>(n_classes));
        for (int c = 0; c < n_classes; ++c)
          row[static_cast<std::size_t>(c)] =
              probs[(static_cast<std::size_t>(b) * n_c + p) * n_classes + c];
        patch_probs.push_back(std::move(row));
      }
      auto mean = average_predictions(patch_probs);
      if (preds) preds->push_back(argmax(mean));
      if (probs_out) probs_out->push_back(std::move(mean));
    }
  } else {
    auto probs = softmax_rows(fwd.logits.data(), n_b, n_classes);
    for (int b = 0; b < n_b; ++b) {
      std::vector<double> row(static_cast<std::size_t>(n_classes));
      for (int c = 0; c < n_classes; ++c)
        row[static_cast<std::size_t>(c)] =
            probs[static_cast<std::size_t>(b) * n_classes + c];
      if (preds) preds->push_back(argmax(row));
      if (probs_out) probs_out->push_back(std::move(row));
    }
  }
}

void write_metrics_header(std::ofstream& f, const ExperimentConfig& cfg) {
  f << "run_id,split,epoch,mc_sensitivity,mc_specificity,macro_f1";
  for (const auto& name : cfg.class_names) f << ",recall_" << name;
  f << "\n";
}

void write_metrics_row(std::ofstream& f, const ExperimentConfig& cfg,
                       const std::string& split, int epoch,
                       const ConfusionMatrix& cm) {
  char buf[64];
  f << cfg.run_id << "," << split << "," << epoch;
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.6f", v);
    f << buf;
  };
  emit(mc_sensitivity(cm));
  emit(mc_specificity(cm));
  emit(macro_f1(cm));
  for (double r : per_class_recall(cm)) emit(r);
  f << "\n";
}

void ensure_fresh_output(const ExperimentConfig& cfg, const fs::path& marker) {
  fs::create_directories(cfg.out_dir);
  require(cfg.overwrite || !fs::exists(marker), ErrorCode::config,
          "output already exists (pass overwrite = true to replace): " +
              marker.string());
}

}  // namespace

Dataset build_split_dataset(const ExperimentConfig& cfg, SplitPart part) {
  if (cfg.data == "synthetic") return gen_synthetic(synth_spec(cfg, part));
  auto records = load_manifest(cfg.manifest, cfg.class_names);
  auto parts = stratified_split(records, cfg.split_seed);
  std::vector<SampleRecord> selected;
  for (std::size_t i = 0; i < records.size(); ++i) {
    int p = parts[i];
    bool want = false;
    switch (part) {
      case SplitPart::train:
        want = std::find(cfg.train_parts.begin(), cfg.train_parts.end(), p) !=
               cfg.train_parts.end();
        break;
      case SplitPart::val: want = p == cfg.val_part; break;
      case SplitPart::test: want = p == cfg.test_part; break;
    }
    if (want) selected.push_back(records[i]);
  }
  return load_dataset(selected, cfg.images_dir, cfg.n_classes());
}

EvalOutcome evaluate_model(Model<float>& model, const Dataset& ds,
                           const ExperimentConfig& cfg) {
  require(!ds.records.empty(), ErrorCode::shape, "evaluate: empty dataset");
  int n_c = effective_n_crops(cfg);
  CropGrid grid;
  if (crops_strategy(cfg))
    grid = make_grid(ds.images.front().width, ds.images.front().height,
                     cfg.input_size, cfg.input_size, cfg.n_crops);
  bool has_attention = model.spec.attention_initial || model.spec.attention_end;

  EvalOutcome out;
  std::vector<int> preds, labels;
  int chunk = std::max(1, 64 / n_c);
  for (std::size_t start = 0; start < ds.records.size();
       start += static_cast<std::size_t>(chunk)) {
    std::size_t end =
        std::min(ds.records.size(), start + static_cast<std::size_t>(chunk));
    int n_b = static_cast<int>(end - start);
    std::vector<float> buf;
    for (std::size_t i = start; i < end; ++i) {
      const Image& img = ds.images[i];
      switch (cfg.strategy) {
        case Strategy::downsample:
          append_chw(buf, strategy_downsample(img, cfg.input_size, cfg.input_size));
          break;
        case Strategy::single_crop:
          append_chw(buf, strategy_single_crop_eval(img, cfg.input_size));
          break;
        case Strategy::multi_crop:
        case Strategy::ordered: {
          auto batch = strategy_ordered(img, grid);  // fixed grid, no dropout
          for (int p = 0; p < n_c; ++p) append_patch_chw(buf, batch, 0, p);
          break;
        }
      }
      labels.push_back(ds.records[i].label);
    }
    auto input = DiffTensor<float>::leaf(
        {n_b * n_c, 3, cfg.input_size, cfg.input_size}, std::move(buf));
    auto fwd = model.forward(input, n_b, n_c);
    aggregate_predictions(fwd, n_b, n_c, cfg.n_classes(), &preds, nullptr);
    if (has_attention) {
      const auto& coeff = model.spec.attention_end ? fwd.attention_end
                                                   : fwd.attention_initial;
      for (int b = 0; b < n_b; ++b)
        for (int p = 0; p < n_c; ++p) {
          EvalOutcome::AttentionRow row;
          row.sample = static_cast<int>(start) + b;
          row.patch = p;
          row.x = grid.offsets[static_cast<std::size_t>(p)].first;
          row.y = grid.offsets[static_cast<std::size_t>(p)].second;
          row.weight = coeff.data()[static_cast<std::size_t>(b) * n_c + p];
          out.attention.push_back(row);
        }
    }
  }
  out.cm = confusion(preds, labels, cfg.n_classes());
  return out;
}

void cmd_train(const ExperimentConfig& cfg, const std::string& resolved_text) {
  fs::path metrics_path = fs::path(cfg.out_dir) / "metrics.csv";
  ensure_fresh_output(cfg, metrics_path);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config.txt");
    echo << resolved_text;
  }

  Dataset train = build_split_dataset(cfg, SplitPart::train);
  require(!train.records.empty(), ErrorCode::config, "train split is empty");
  Dataset val = build_split_dataset(cfg, SplitPart::val);

  Rng init_rng(cfg.seed);
  auto model = Model<float>::init(model_spec_from(cfg), init_rng);
  AdamState<float> adam;
  adam.learning_rate = static_cast<float>(cfg.learning_rate);
  adam.beta1 = static_cast<float>(cfg.beta1);
  adam.beta2 = static_cast<float>(cfg.beta2);
  adam.epsilon = static_cast<float>(cfg.epsilon);
  auto params = model.parameters();

  CropGrid grid;
  if (crops_strategy(cfg))
    grid = make_grid(train.images.front().width, train.images.front().height,
                     cfg.input_size, cfg.input_size, cfg.n_crops);
  int n_c = effective_n_crops(cfg);

  std::vector<int> train_labels;
  for (const auto& r : train.records) train_labels.push_back(r.label);
  auto weights = sample_weights(cfg, train);

  Rng data_rng(cfg.seed ^ 0x5eedd47aull);
  std::optional<BalancedBatchSampler> balanced;
  std::vector<std::size_t> pool;
  if (cfg.balancing == BalancingMode::balanced_batches)
    balanced.emplace(train_labels, cfg.n_classes(), cfg.batch_size,
                     data_rng.fork(1));
  else if (cfg.balancing == BalancingMode::oversample)
    pool = oversample_pool(train_labels, cfg.n_classes());

  std::ofstream metrics(metrics_path);
  write_metrics_header(metrics, cfg);

  double best_val = -1.0;
  bool saved = false;
  fs::path ckpt_path = fs::path(cfg.out_dir) / "model.ckpt";
  std::uint64_t hash = model_config_hash(cfg);

  std::size_t n_train = train.records.size();
  std::size_t batches_per_epoch =
      (n_train + static_cast<std::size_t>(cfg.batch_size) - 1) /
      static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> epoch_preds, epoch_labels;
    std::vector<std::vector<std::size_t>> batches;
    if (balanced) {
      for (std::size_t i = 0; i < batches_per_epoch; ++i)
        batches.push_back(balanced->next_batch());
    } else if (!pool.empty()) {
      for (std::size_t i = 0; i < batches_per_epoch; ++i) {
        std::vector<std::size_t> b;
        for (int j = 0; j < cfg.batch_size; ++j)
          b.push_back(pool[data_rng.index(pool.size())]);
        batches.push_back(std::move(b));
      }
    } else {
      std::vector<std::size_t> order(n_train);
      for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
      data_rng.shuffle(order);
      for (std::size_t i = 0; i < n_train;
           i += static_cast<std::size_t>(cfg.batch_size)) {
        std::size_t e = std::min(n_train, i + static_cast<std::size_t>(cfg.batch_size));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(e));
      }
    }

    for (const auto& batch : batches) {
      auto in = make_train_input(cfg, train, batch, &grid, data_rng);
      auto fwd = model.forward(in.input, in.n_b, in.n_c);
      std::vector<int> row_labels;
      std::vector<float> row_weights;
      for (std::size_t idx : batch) {
        int reps = fwd.per_patch ? in.n_c : 1;
        for (int r = 0; r < reps; ++r) {
          row_labels.push_back(train.records[idx].label);
          row_weights.push_back(static_cast<float>(weights[idx]));
        }
      }
      auto loss = weighted_cross_entropy(fwd.logits, row_labels, row_weights);
      loss.backward();
      adam_step(params, adam);
      aggregate_predictions(fwd, in.n_b, in.n_c, cfg.n_classes(), &epoch_preds,
                            nullptr);
      for (std::size_t idx : batch)
        epoch_labels.push_back(train.records[idx].label);
    }

    auto train_cm = confusion(epoch_preds, epoch_labels, cfg.n_classes());
    write_metrics_row(metrics, cfg, "train", epoch, train_cm);
    if (!val.records.empty()) {
      auto ev = evaluate_model(model, val, cfg);
      write_metrics_row(metrics, cfg, "val", epoch, ev.cm);
      double sens = mc_sensitivity(ev.cm);
      std::printf("[%s] epoch %d train_sens=%.4f val_sens=%.4f\n",
                  cfg.run_id.c_str(), epoch, mc_sensitivity(train_cm), sens);
      if (sens > best_val) {
        best_val = sens;
        save_checkpoint(ckpt_path.string(), hash, model.named_parameters());
        saved = true;
      }
    } else {
      std::printf("[%s] epoch %d train_sens=%.4f\n", cfg.run_id.c_str(), epoch,
                  mc_sensitivity(train_cm));
    }
    std::fflush(stdout);
  }
  if (!saved) save_checkpoint(ckpt_path.string(), hash, model.named_parameters());
}

void cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
  fs::path metrics_path = fs::path(cfg.out_dir) / "metrics_eval.csv";
  ensure_fresh_output(cfg, metrics_path);

  Rng init_rng(cfg.seed);
  auto model = Model<float>::init(model_spec_from(cfg), init_rng);
  auto records = load_checkpoint(checkpoint_path, model_config_hash(cfg));
  apply_checkpoint(records, model.named_parameters());

  Dataset test = build_split_dataset(cfg, SplitPart::test);
  require(!test.records.empty(), ErrorCode::config, "test split is empty");
  auto ev = evaluate_model(model, test, cfg);

  std::ofstream metrics(metrics_path);
  write_metrics_header(metrics, cfg);
  write_metrics_row(metrics, cfg, "test", 0, ev.cm);

  if (model.spec.attention_initial || model.spec.attention_end) {
    std::ofstream att(fs::path(cfg.out_dir) / "attention.csv");
    att << "sample_id,patch_index,x,y,weight\n";
    char buf[64];
    for (const auto& row : ev.attention) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.6f", row.sample,
                    row.patch, row.x, row.y, row.weight);
      att << buf << "\n";
    }
  }
}

void cmd_sweep(const KvConfig& base, const std::string& axis,
               const std::vector<std::string>& values) {
  static const std::map<std::string, std::string> axis_key = {
      {"k", "k"},
      {"p_d", "p_d"},
      {"n_crops", "n_crops"},
      {"balancing", "balancing"},
      {"aggregator", "aggregator"},
  };
  auto it = axis_key.find(axis);
  require(it != axis_key.end(), ErrorCode::config, "sweep: unknown axis '" + axis + "'");
  require(!values.empty(), ErrorCode::config, "sweep: empty value list");

  auto root = resolve_config(base);
  fs::path sweep_path = fs::path(root.out_dir) / "sweep.csv";
  ensure_fresh_output(root, sweep_path);

  // Rows sorted by axis value (numeric axes numerically).
  std::vector<std::string> sorted = values;
  bool numeric = axis != "balancing" && axis != "aggregator";
  if (numeric)
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return std::stod(a) < std::stod(b);
    });
  else
    std::sort(sorted.begin(), sorted.end());

  std::ofstream out(sweep_path);
  out << "axis,value,seed,mc_sensitivity,mc_specificity,macro_f1,"
         "mc_sensitivity_mean,mc_sensitivity_spread,mc_specificity_mean,"
         "mc_specificity_spread,macro_f1_mean,macro_f1_spread\n";
  char buf[256];
  for (const auto& value : sorted) {
    std::vector<std::array<double, 3>> runs;
    for (int s = 0; s < root.sweep_seeds; ++s) {
      KvConfig kv = base;
      kv.set(it->second, value);
      kv.set("seed", std::to_string(root.seed + static_cast<std::uint64_t>(s)));
      std::string sub = root.out_dir + "/" + axis + "_" + value + "_s" +
                        std::to_string(s);
      kv.set("out_dir", sub);
      kv.set("run_id", root.run_id + "_" + axis + "_" + value + "_s" +
                           std::to_string(s));
      kv.set("overwrite", root.overwrite ? "true" : "false");
      auto cfg = resolve_config(kv);
      cmd_train(cfg, kv.resolved_text());

      // Evaluate the best checkpoint on the test split.
      Rng init_rng(cfg.seed);
      auto model = Model<float>::init(model_spec_from(cfg), init_rng);
      auto records = load_checkpoint((fs::path(sub) / "model.ckpt").string(),
                                     model_config_hash(cfg));
      apply_checkpoint(records, model.named_parameters());
      Dataset test = build_split_dataset(cfg, SplitPart::test);
      auto ev = evaluate_model(model, test, cfg);
      runs.push_back({mc_sensitivity(ev.cm), mc_specificity(ev.cm),
                      macro_f1(ev.cm)});
      std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.6f,%.6f,%.6f,,,,,,",
                    axis.c_str(), value.c_str(), s, runs.back()[0],
                    runs.back()[1], runs.back()[2]);
      out << buf << "\n";
    }
    // Summary row: mean and population spread over seeds.
    std::array<double, 3> mean = {0, 0, 0}, spread = {0, 0, 0};
    for (const auto& r : runs)
      for (int m = 0; m < 3; ++m) mean[static_cast<std::size_t>(m)] += r[static_cast<std::size_t>(m)];
    for (auto& v : mean) v /= static_cast<double>(runs.size());
    for (const auto& r : runs)
      for (int m = 0; m < 3; ++m) {
        double d = r[static_cast<std::size_t>(m)] - mean[static_cast<std::size_t>(m)];
        spread[static_cast<std::size_t>(m)] += d * d;
      }
    for (auto& v : spread) v = std::sqrt(v / static_cast<double>(runs.size()));
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,all,,,,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", axis.c_str(),
                  value.c_str(), mean[0], spread[0], mean[1], spread[1],
                  mean[2], spread[2]);
    out << buf << "\n";
  }
}

namespace {

DiffTensor<double> random_input_d(std::vector<int> shape, Rng& rng) {
  std::size_t n = shape_numel(shape);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(0.0, 1.0);
  return DiffTensor<double>::leaf(std::move(shape), std::move(v), false);
}

void randomize(DiffTensor<double>& t, Rng& rng, double scale) {
  for (auto& v : t.data()) v = rng.normal() * scale;
}

GradCheckResult check_model(const std::string& name, ModelSpec spec,
                            bool randomize_attention, double tolerance) {
  Rng rng(401);
  auto model = Model<double>::init(spec, rng);
  if (randomize_attention) {
    // Zero-initialized attention has no curvature to probe; perturb it.
    if (spec.attention_initial) {
      randomize(model.att_init_w, rng, 0.4);
      randomize(model.att_init_b, rng, 0.4);
    }
    if (spec.attention_end) {
      randomize(model.att_end_w, rng, 0.4);
      randomize(model.att_end_b, rng, 0.4);
    }
  }
  int n_b = 2, n_c = spec.n_crops;
  auto input = random_input_d({n_b * n_c, spec.in_channels, spec.input_size,
                               spec.input_size},
                              rng);
  std::vector<int> labels(static_cast<std::size_t>(n_b), 0);
  labels.back() = spec.n_classes - 1;
  auto params = model.parameters();
  auto build = [&]() {
    auto fwd = model.forward(input, n_b, n_c);
    std::vector<int> row_labels;
    std::vector<double> row_weights;
    int rows = fwd.per_patch ? n_b * n_c : n_b;
    for (int r = 0; r < rows; ++r) {
      row_labels.push_back(labels[static_cast<std::size_t>(
          fwd.per_patch ? r / n_c : r)]);
      row_weights.push_back(1.0 + 0.5 * (r % 2));
    }
    return weighted_cross_entropy(fwd.logits, row_labels, row_weights);
  };
  Rng probe(17);
  double err = grad_check(build, params, 1e-5, 6, probe);
  return {name, err, tolerance, err < tolerance};
}

}  // namespace

std::vector<GradCheckResult> cmd_gradcheck(const ExperimentConfig& cfg) {
  std::vector<GradCheckResult> results;

  ModelSpec tiny;
  tiny.backbone_channels = {4, 6};
  tiny.input_size = 8;
  tiny.n_classes = cfg.n_classes();
  tiny.n_crops = 1;
  tiny.aggregator = Aggregator::average;
  results.push_back(check_model("conv_backbone", tiny, false, 1e-4));

  ModelSpec att = tiny;
  att.aggregator = Aggregator::attention;
  att.n_crops = 4;
  att.attention_initial = true;
  att.attention_end = false;
  results.push_back(check_model("attention_initial", att, true, 1e-4));
  att.attention_initial = false;
  att.attention_end = true;
  results.push_back(check_model("attention_end", att, true, 1e-4));
  att.attention_initial = true;
  results.push_back(check_model("attention_dual", att, true, 1e-4));

  ModelSpec gru = tiny;
  gru.aggregator = Aggregator::gru;
  gru.n_crops = 4;
  gru.gru_hidden = 6;
  results.push_back(check_model("gru_aggregator", gru, false, 1e-4));

  {
    // Pure loss path: smooth, so the tight tolerance applies.
    Rng rng(19);
    auto logits = DiffTensor<double>::zeros({3, cfg.n_classes()}, true);
    randomize(logits, rng, 1.0);
    std::vector<int> labels = {0, 1, cfg.n_classes() - 1};
    std::vector<double> w = {1.0, 2.0, 0.5};
    std::vector<DiffTensor<double>> params = {logits};
    auto build = [&]() { return weighted_cross_entropy(logits, labels, w); };
    Rng probe(23);
    double err = grad_check(build, params, 1e-6, 8, probe);
    results.push_back({"weighted_cross_entropy", err, 1e-6, err < 1e-6});
  }

  {
    // The configured model at reduced size.
    ModelSpec full = model_spec_from(cfg);
    full.input_size = 8;
    full.backbone_channels.resize(
        std::min<std::size_t>(full.backbone_channels.size(), 2));
    for (auto& c : full.backbone_channels) c = std::min(c, 6);
    if (full.n_crops > 4) full.n_crops = 4;
    full.gru_hidden = std::min(full.gru_hidden, 6);
    results.push_back(check_model("full_model", full, true, 1e-4));
  }
  return results;
}

std::string cmd_gen_synth(const ExperimentConfig& cfg,
                          const std::string& resolved_text) {
  fs::path manifest_path = fs::path(cfg.out_dir) / "manifest.csv";
  ensure_fresh_output(cfg, manifest_path);
  fs::create_directories(fs::path(cfg.out_dir) / "images");
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config.txt");
    echo << resolved_text;
  }
  Dataset ds = gen_synthetic(synth_spec(cfg, SplitPart::train));
  std::ofstream manifest(manifest_path);
  manifest << "image,label,diagnosis_method,signal_cell\n";
  std::vector<long> histogram(static_cast<std::size_t>(cfg.n_classes()), 0);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "images/%06zu.%s", i,
                  cfg.synth_format.c_str());
    write_image((fs::path(cfg.out_dir) / name).string(), ds.images[i]);
    const auto& rec = ds.records[i];
    manifest << name << ","
             << cfg.class_names[static_cast<std::size_t>(rec.label)] << ","
             << diagnosis_method_name(rec.diagnosis_method) << ","
             << rec.signal_cell << "\n";
    ++histogram[static_cast<std::size_t>(rec.label)];
  }
  std::ostringstream os;
  os << "class histogram:\n";
  for (int c = 0; c < cfg.n_classes(); ++c)
    os << "  " << cfg.class_names[static_cast<std::size_t>(c)] << ": "
       << histogram[static_cast<std::size_t>(c)] << "\n";
  return os.str();
}

}  // namespace pla
