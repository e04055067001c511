#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pla/ops.hpp"

namespace pla {

enum class Aggregator { average, gru, attention };

struct ModelSpec {
  std::vector<int> backbone_channels;  // one conv stage per entry, stride 2
  int in_channels = 3;
  int input_size = 64;  // square patch edge
  int n_classes = 7;
  Aggregator aggregator = Aggregator::average;
  bool attention_initial = false;
  bool attention_end = false;
  int n_crops = 1;
  int gru_hidden = 128;
};

// Patch-based attention: GAP each patch's feature tensor to one scalar,
// mix the per-patch scalars through an n_crops x n_crops affine map,
// squash with a sigmoid, and rescale each patch's features by its
// coefficient. Input and output stay stacked as [n_b*n_c, C, H, W].
template <class T>
std::pair<DiffTensor<T>, DiffTensor<T>> attention_forward(
    const DiffTensor<T>& features, const DiffTensor<T>& weights,
    const DiffTensor<T>& bias, int n_b, int n_c) {
  require(features.ndim() == 4 && features.dim(0) == n_b * n_c,
          ErrorCode::shape, "attention_forward: stacked input expected");
  require(weights.ndim() == 2 && weights.dim(0) == n_c &&
              weights.dim(1) == n_c && bias.dim(0) == n_c,
          ErrorCode::shape,
          "attention_forward: params must be n_crops x n_crops (+bias)");
  auto pooled = global_average_pool(features, {1, 2, 3});  // [n_b*n_c]
  auto w = reshape(pooled, {n_b, n_c});
  auto coeff = sigmoid(dense(w, weights, bias));  // in (0,1)
  auto scaled = scale_rows(features, reshape(coeff, {n_b * n_c}));
  return {scaled, coeff};
}

template <class T>
struct ForwardResult {
  DiffTensor<T> logits;  // [n_b*n_c, C] per patch, or [n_b, C] for gru
  bool per_patch = true;
  DiffTensor<T> attention_initial;  // [n_b, n_c] when present
  DiffTensor<T> attention_end;
};

template <class T>
class Model {
 public:
  struct Stage {
    DiffTensor<T> kernel;
    DiffTensor<T> bias;
  };

  ModelSpec spec;
  std::vector<Stage> stages;
  DiffTensor<T> att_init_w, att_init_b;
  DiffTensor<T> att_end_w, att_end_b;
  GruParams<T> gru;
  DiffTensor<T> cls_w, cls_b;

  static Model init(const ModelSpec& spec, Rng& rng) {
    require(!spec.backbone_channels.empty(), ErrorCode::config,
            "model: backbone needs at least one stage");
    int final_extent = spec.input_size;
    for (std::size_t i = 0; i < spec.backbone_channels.size(); ++i)
      final_extent = (final_extent + 1) / 2;
    require(final_extent >= 1, ErrorCode::config,
            "model: input collapses below 1x1");

    Model m;
    m.spec = spec;
    auto he = [&rng](std::vector<int> shape, int fan_in) {
      std::size_t n = shape_numel(shape);
      std::vector<T> v(n);
      T s = static_cast<T>(std::sqrt(2.0 / fan_in));
      for (auto& x : v) x = static_cast<T>(rng.normal()) * s;
      return DiffTensor<T>::leaf(std::move(shape), std::move(v), true);
    };
    int cin = spec.in_channels;
    for (int cout : spec.backbone_channels) {
      Stage st;
      st.kernel = he({cout, cin, 3, 3}, cin * 9);
      st.bias = DiffTensor<T>::zeros({cout}, true);
      m.stages.push_back(st);
      cin = cout;
    }
    int feat = spec.backbone_channels.back();
    // Attention blocks start at exactly uniform 0.5 weighting.
    if (spec.attention_initial) {
      m.att_init_w = DiffTensor<T>::zeros({spec.n_crops, spec.n_crops}, true);
      m.att_init_b = DiffTensor<T>::zeros({spec.n_crops}, true);
    }
    if (spec.attention_end) {
      m.att_end_w = DiffTensor<T>::zeros({spec.n_crops, spec.n_crops}, true);
      m.att_end_b = DiffTensor<T>::zeros({spec.n_crops}, true);
    }
    int cls_in = feat;
    if (spec.aggregator == Aggregator::gru) {
      int H = spec.gru_hidden;
      m.gru.wz = he({feat, H}, feat);
      m.gru.uz = he({H, H}, H);
      m.gru.bz = DiffTensor<T>::zeros({H}, true);
      m.gru.wr = he({feat, H}, feat);
      m.gru.ur = he({H, H}, H);
      m.gru.br = DiffTensor<T>::zeros({H}, true);
      m.gru.wn = he({feat, H}, feat);
      m.gru.un = he({H, H}, H);
      m.gru.bn = DiffTensor<T>::zeros({H}, true);
      cls_in = H;
    }
    m.cls_w = he({cls_in, spec.n_classes}, cls_in);
    m.cls_b = DiffTensor<T>::zeros({spec.n_classes}, true);
    return m;
  }

  std::vector<std::pair<std::string, DiffTensor<T>>> named_parameters() {
    std::vector<std::pair<std::string, DiffTensor<T>>> out;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      out.emplace_back("stage" + std::to_string(i) + ".kernel", stages[i].kernel);
      out.emplace_back("stage" + std::to_string(i) + ".bias", stages[i].bias);
    }
    if (spec.attention_initial) {
      out.emplace_back("attention_initial.weights", att_init_w);
      out.emplace_back("attention_initial.bias", att_init_b);
    }
    if (spec.attention_end) {
      out.emplace_back("attention_end.weights", att_end_w);
      out.emplace_back("attention_end.bias", att_end_b);
    }
    if (spec.aggregator == Aggregator::gru) {
      const char* names[] = {"wz", "uz", "bz", "wr", "ur", "br", "wn", "un", "bn"};
      auto all = gru.all();
      for (std::size_t i = 0; i < all.size(); ++i)
        out.emplace_back(std::string("gru.") + names[i], all[i]);
    }
    out.emplace_back("classifier.weights", cls_w);
    out.emplace_back("classifier.bias", cls_b);
    return out;
  }

  std::vector<DiffTensor<T>> parameters() {
    std::vector<DiffTensor<T>> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto& p : parameters()) n += p.size();
    return n;
  }

  // input is stacked [n_b*n_c, C, H, W]; crops of one sample are adjacent.
  ForwardResult<T> forward(const DiffTensor<T>& input, int n_b, int n_c) {
    // Attention and GRU couple patches within a sample, so the crop count
    // is pinned; plain averaging accepts any number of crops.
    if (spec.attention_initial || spec.attention_end ||
        spec.aggregator == Aggregator::gru)
      require(n_c == spec.n_crops, ErrorCode::shape,
              "forward: crop count does not match model");
    require(input.dim(0) == n_b * n_c, ErrorCode::shape,
            "forward: batch dimension mismatch");
    ForwardResult<T> res;
    DiffTensor<T> x = input;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      x = relu(add_channel_bias(conv2d(x, stages[i].kernel, 2, 1), stages[i].bias));
      if (i == 0 && spec.attention_initial) {
        auto [scaled, coeff] =
            attention_forward(x, att_init_w, att_init_b, n_b, n_c);
        x = scaled;
        res.attention_initial = coeff;
      }
    }
    if (spec.attention_end) {
      auto [scaled, coeff] = attention_forward(x, att_end_w, att_end_b, n_b, n_c);
      x = scaled;
      res.attention_end = coeff;
    }
    auto feat = global_average_pool(x, {2, 3});  // [n_b*n_c, F]
    if (spec.aggregator == Aggregator::gru) {
      int F = feat.dim(1);
      auto seq = reshape(feat, {n_b, n_c, F});
      auto h = DiffTensor<T>::zeros({n_b, spec.gru_hidden});
      // Patches consumed in canonical row-major grid order.
      for (int t = 0; t < n_c; ++t) h = gru_cell(select_axis1(seq, t), h, gru);
      res.logits = dense(h, cls_w, cls_b);
      res.per_patch = false;
    } else {
      res.logits = dense(feat, cls_w, cls_b);
      res.per_patch = true;
    }
    return res;
  }
};

}  // namespace pla
