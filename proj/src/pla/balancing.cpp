#include "pla/balancing.hpp"

#include <algorithm>
#include <cmath>

namespace pla {

DiagnosisMethod parse_diagnosis_method(const std::string& name) {
  if (name == "expert_consensus" || name == "consensus")
    return DiagnosisMethod::expert_consensus;
  if (name == "serial_imaging" || name == "follow_up")
    return DiagnosisMethod::serial_imaging;
  if (name == "confocal_microscopy" || name == "confocal")
    return DiagnosisMethod::confocal_microscopy;
  if (name == "histopathology" || name == "histo")
    return DiagnosisMethod::histopathology;
  if (name == "unknown" || name.empty()) return DiagnosisMethod::unknown;
  throw Error(ErrorCode::config, "unknown diagnosis method: " + name);
}

std::string diagnosis_method_name(DiagnosisMethod m) {
  switch (m) {
    case DiagnosisMethod::expert_consensus: return "expert_consensus";
    case DiagnosisMethod::serial_imaging: return "serial_imaging";
    case DiagnosisMethod::confocal_microscopy: return "confocal_microscopy";
    case DiagnosisMethod::histopathology: return "histopathology";
    case DiagnosisMethod::unknown: return "unknown";
  }
  return "unknown";
}

ClassCounts count_classes(const std::vector<int>& labels, int n_classes) {
  ClassCounts cc;
  cc.counts.assign(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) {
    require(l >= 0 && l < n_classes, ErrorCode::shape,
            "count_classes: label out of range");
    ++cc.counts[static_cast<std::size_t>(l)];
  }
  return cc;
}

std::vector<double> class_weights(const ClassCounts& counts, double k) {
  require(k >= 0.0, ErrorCode::config, "class_weights: k must be >= 0");
  long n = counts.total();
  std::vector<double> out;
  out.reserve(counts.counts.size());
  for (long ci : counts.counts) {
    require(ci > 0, ErrorCode::config,
            "class_weights: class with zero samples has undefined weight");
    out.push_back(std::pow(static_cast<double>(n) / static_cast<double>(ci), k));
  }
  return out;
}

double diagnosis_weight(int label, DiagnosisMethod method,
                        const WeightTable& table) {
  require(label >= 0 &&
              label < static_cast<int>(table.class_weights.size()),
          ErrorCode::shape, "diagnosis_weight: label out of range");
  double base = table.class_weights[static_cast<std::size_t>(label)];
  if (!table.benign_classes.count(label)) return base;
  if (method == DiagnosisMethod::unknown) {
    require(!table.strict_methods, ErrorCode::config,
            "diagnosis_weight: sample has no diagnosis method tag");
    return base;
  }
  return base * table.diagnosis_multipliers[static_cast<std::size_t>(method)];
}

std::vector<std::size_t> oversample_pool(const std::vector<int>& labels,
                                         int n_classes) {
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < n_classes, ErrorCode::shape,
            "oversample_pool: label out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t max_count = 0;
  for (const auto& v : by_class) {
    require(!v.empty(), ErrorCode::config, "oversample_pool: empty class");
    max_count = std::max(max_count, v.size());
  }
  std::vector<std::size_t> pool;
  pool.reserve(max_count * static_cast<std::size_t>(n_classes));
  for (const auto& v : by_class)
    for (std::size_t j = 0; j < max_count; ++j) pool.push_back(v[j % v.size()]);
  return pool;
}

BalancedBatchSampler::BalancedBatchSampler(const std::vector<int>& labels,
                                           int n_classes, int batch_size,
                                           Rng rng)
    : n_classes_(n_classes),
      batch_size_(batch_size),
      per_class_(batch_size / n_classes),
      by_class_(static_cast<std::size_t>(n_classes)),
      cursor_(static_cast<std::size_t>(n_classes), 0),
      rng_(rng) {
  require(batch_size % n_classes == 0, ErrorCode::config,
          "balanced_batches: batch_size must be divisible by the class count");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < n_classes, ErrorCode::shape,
            "balanced_batches: label out of range");
    by_class_[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (auto& v : by_class_) {
    require(!v.empty(), ErrorCode::config, "balanced_batches: empty class");
    rng_.shuffle(v);
  }
}

std::vector<std::size_t> BalancedBatchSampler::next_batch() {
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(batch_size_));
  for (int c = 0; c < n_classes_; ++c) {
    auto& v = by_class_[static_cast<std::size_t>(c)];
    auto& cur = cursor_[static_cast<std::size_t>(c)];
    for (int j = 0; j < per_class_; ++j) {
      if (cur == v.size()) {
        rng_.shuffle(v);
        cur = 0;
      }
      batch.push_back(v[cur++]);
    }
  }
  return batch;
}

}  // namespace pla
