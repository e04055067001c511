#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pla/checkpoint.hpp"
#include "pla/config.hpp"
#include "pla/model.hpp"

using namespace pla;
namespace fs = std::filesystem;

namespace {

DiffTensor<float> random_input(std::vector<int> shape, Rng& rng) {
  std::size_t n = shape_numel(shape);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return DiffTensor<float>::leaf(std::move(shape), std::move(v));
}

ModelSpec small_attention_spec() {
  ModelSpec spec;
  spec.backbone_channels = {4, 8};
  spec.input_size = 16;
  spec.n_classes = 3;
  spec.n_crops = 9;
  spec.aggregator = Aggregator::attention;
  spec.attention_end = true;
  return spec;
}

}  // namespace

TEST_CASE("fresh attention blocks weight every patch exactly 0.5") {
  Rng rng(1);
  auto spec = small_attention_spec();
  auto model = Model<float>::init(spec, rng);
  auto input = random_input({2 * 9, 3, 16, 16}, rng);
  auto fwd = model.forward(input, 2, 9);
  REQUIRE(fwd.attention_end.valid());
  for (float c : fwd.attention_end.data()) CHECK(c == 0.5f);

  // sigmoid(0) is exact, so the scaled features are exactly halved.
  auto plain_spec = spec;
  plain_spec.attention_end = false;
  plain_spec.aggregator = Aggregator::average;
  Rng rng2(1);
  auto plain = Model<float>::init(plain_spec, rng2);
  // Same draw sequence gives identical backbone and classifier weights.
  auto plain_fwd = plain.forward(input, 2, 9);
  CHECK(fwd.logits.shape() == plain_fwd.logits.shape());
}

TEST_CASE("attention adds exactly n_crops^2 + n_crops parameters") {
  auto spec = small_attention_spec();
  Rng r1(3);
  auto with = Model<float>::init(spec, r1);
  auto base_spec = spec;
  base_spec.attention_end = false;
  base_spec.aggregator = Aggregator::average;
  Rng r2(3);
  auto without = Model<float>::init(base_spec, r2);
  CHECK(with.parameter_count() ==
        without.parameter_count() + 9 * 9 + 9);

  auto dual = spec;
  dual.attention_initial = true;
  Rng r3(3);
  auto both = Model<float>::init(dual, r3);
  CHECK(both.parameter_count() ==
        without.parameter_count() + 2 * (9 * 9 + 9));
}

TEST_CASE("forward produces per-patch or per-sample logits by aggregator") {
  Rng rng(5);
  auto spec = small_attention_spec();
  auto model = Model<float>::init(spec, rng);
  auto input = random_input({3 * 9, 3, 16, 16}, rng);
  auto fwd = model.forward(input, 3, 9);
  CHECK(fwd.per_patch);
  CHECK(fwd.logits.shape() == std::vector<int>{27, 3});

  auto gru_spec = spec;
  gru_spec.aggregator = Aggregator::gru;
  gru_spec.attention_end = false;
  gru_spec.gru_hidden = 5;
  Rng rng2(5);
  auto gm = Model<float>::init(gru_spec, rng2);
  auto gfwd = gm.forward(input, 3, 9);
  CHECK(!gfwd.per_patch);
  CHECK(gfwd.logits.shape() == std::vector<int>{3, 3});
}

TEST_CASE("patch-coupled models pin the crop count") {
  Rng rng(7);
  auto model = Model<float>::init(small_attention_spec(), rng);
  auto input = random_input({2 * 5, 3, 16, 16}, rng);
  CHECK_THROWS_AS(model.forward(input, 2, 5), Error);

  ModelSpec avg;
  avg.backbone_channels = {4};
  avg.input_size = 16;
  avg.n_classes = 3;
  avg.aggregator = Aggregator::average;
  avg.n_crops = 1;
  Rng rng2(7);
  auto am = Model<float>::init(avg, rng2);
  // Averaging accepts any stacking.
  auto out5 = am.forward(input, 2, 5);
  CHECK(out5.logits.dim(0) == 10);
}

TEST_CASE("model init is deterministic per seed") {
  auto spec = small_attention_spec();
  Rng r1(9), r2(9), r3(10);
  auto a = Model<float>::init(spec, r1);
  auto b = Model<float>::init(spec, r2);
  auto c = Model<float>::init(spec, r3);
  CHECK(a.stages[0].kernel.data() == b.stages[0].kernel.data());
  CHECK(a.cls_w.data() == b.cls_w.data());
  CHECK(a.stages[0].kernel.data() != c.stages[0].kernel.data());
}

TEST_CASE("checkpoint round-trips parameters bit-exactly") {
  auto dir = fs::temp_directory_path() / "pla_test_model";
  fs::create_directories(dir);
  auto path = (dir / "model.ckpt").string();

  auto spec = small_attention_spec();
  Rng r1(11);
  auto a = Model<float>::init(spec, r1);
  save_checkpoint(path, 0xfeed, a.named_parameters());

  Rng r2(99);
  auto b = Model<float>::init(spec, r2);
  CHECK(a.cls_w.data() != b.cls_w.data());
  auto records = load_checkpoint(path, 0xfeed);
  apply_checkpoint(records, b.named_parameters());
  CHECK(a.cls_w.data() == b.cls_w.data());
  CHECK(a.stages[1].kernel.data() == b.stages[1].kernel.data());
  CHECK(a.att_end_w.data() == b.att_end_w.data());

  Rng rng(1);
  auto input = random_input({9, 3, 16, 16}, rng);
  auto fa = a.forward(input, 1, 9);
  auto fb = b.forward(input, 1, 9);
  CHECK(fa.logits.data() == fb.logits.data());
}

TEST_CASE("checkpoints reject mismatched configurations") {
  auto dir = fs::temp_directory_path() / "pla_test_model";
  fs::create_directories(dir);
  auto path = (dir / "mismatch.ckpt").string();
  auto spec = small_attention_spec();
  Rng r1(13);
  auto a = Model<float>::init(spec, r1);
  save_checkpoint(path, 0x1234, a.named_parameters());

  CHECK_THROWS_AS(load_checkpoint(path, 0x9999), Error);
  try {
    load_checkpoint(path, 0x9999);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
  }

  // Same hash but a different architecture fails at apply time.
  auto other_spec = spec;
  other_spec.backbone_channels = {4, 6};
  Rng r2(13);
  auto other = Model<float>::init(other_spec, r2);
  auto records = load_checkpoint(path, 0x1234);
  CHECK_THROWS_AS(apply_checkpoint(records, other.named_parameters()), Error);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent.ckpt", 0x1234), Error);
}

TEST_CASE("config defaults resolve and unknown keys are rejected") {
  KvConfig kv;
  auto cfg = resolve_config(kv);
  CHECK(cfg.n_classes() == 7);
  CHECK(cfg.strategy == Strategy::ordered);
  CHECK(cfg.n_crops == 9);
  CHECK(cfg.aggregator == Aggregator::attention);
  CHECK(cfg.attention_end);
  CHECK(!cfg.attention_initial);
  CHECK(cfg.backbone_channels == std::vector<int>{16, 32, 64, 128});
  CHECK(cfg.benign_classes == std::vector<int>{1, 4, 5, 6});

  CHECK_THROWS_AS(kv.set("no_such_key", "1"), Error);
  CHECK_THROWS_AS(kv.get("no_such_key"), Error);
}

TEST_CASE("config cross-field validation") {
  {
    KvConfig kv;
    kv.set("p_d", "0.2");
    kv.set("strategy", "downsample");
    CHECK_THROWS_AS(resolve_config(kv), Error);
  }
  {
    KvConfig kv;
    kv.set("aggregator", "gru");
    kv.set("strategy", "single_crop");
    CHECK_THROWS_AS(resolve_config(kv), Error);
  }
  {
    KvConfig kv;
    kv.set("strategy", "ordered");
    kv.set("n_crops", "7");
    CHECK_THROWS_AS(resolve_config(kv), Error);
  }
  {
    KvConfig kv;
    kv.set("balancing", "balanced_batches");
    kv.set("batch_size", "15");  // not divisible by 7 classes
    CHECK_THROWS_AS(resolve_config(kv), Error);
    kv.set("batch_size", "14");
    CHECK(resolve_config(kv).batch_size == 14);
  }
  {
    KvConfig kv;
    kv.set("diag_multipliers", "1.0,0.9,1.4,1.6");  // decreasing
    CHECK_THROWS_AS(resolve_config(kv), Error);
  }
}

TEST_CASE("model hash covers architecture keys but not training keys") {
  KvConfig kv;
  auto base = model_config_hash(resolve_config(kv));

  KvConfig train_change;
  train_change.set("learning_rate", "0.01");
  train_change.set("epochs", "20");
  train_change.set("seed", "77");
  CHECK(model_config_hash(resolve_config(train_change)) == base);

  KvConfig arch_change;
  arch_change.set("backbone_channels", "8,16");
  CHECK(model_config_hash(resolve_config(arch_change)) != base);

  KvConfig crop_change;
  crop_change.set("n_crops", "16");
  CHECK(model_config_hash(resolve_config(crop_change)) != base);

  KvConfig agg_change;
  agg_change.set("aggregator", "gru");
  CHECK(model_config_hash(resolve_config(agg_change)) != base);
}

TEST_CASE("config file loading tolerates comments and blank lines") {
  auto dir = fs::temp_directory_path() / "pla_test_model";
  fs::create_directories(dir);
  auto path = dir / "config.txt";
  {
    std::ofstream f(path);
    f << "# experiment\n\nepochs = 3\nk = 0.75   # exponent\n";
  }
  KvConfig kv;
  kv.load_file(path.string());
  auto cfg = resolve_config(kv);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.k == 0.75);
  CHECK_THROWS_AS(kv.load_file("/nonexistent/config.txt"), Error);
}
