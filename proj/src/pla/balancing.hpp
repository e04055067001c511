#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pla/common.hpp"

namespace pla {

enum class DiagnosisMethod {
  expert_consensus,
  serial_imaging,
  confocal_microscopy,
  histopathology,
  unknown,
};

DiagnosisMethod parse_diagnosis_method(const std::string& name);
std::string diagnosis_method_name(DiagnosisMethod m);

struct ClassCounts {
  std::vector<long> counts;
  long total() const {
    long n = 0;
    for (long c : counts) n += c;
    return n;
  }
};

ClassCounts count_classes(const std::vector<int>& labels, int n_classes);

// Per-class loss weights and the diagnosis-method multipliers applied to
// benign classes.
struct WeightTable {
  std::vector<double> class_weights;
  double k = 1.0;
  // Indexed in cost order: consensus, serial, confocal, histopathology.
  std::array<double, 4> diagnosis_multipliers = {1.0, 1.2, 1.4, 1.6};
  std::set<int> benign_classes;
  // When false, an unknown diagnosis tag gets multiplier 1 instead of
  // being rejected.
  bool strict_methods = true;
};

// n_i = (N/N_i)^k.
std::vector<double> class_weights(const ClassCounts& counts, double k);

// class weight times the diagnosis multiplier (benign classes only).
double diagnosis_weight(int label, DiagnosisMethod method,
                        const WeightTable& table);

// Indices replicated by cycling until every class matches the largest
// class count; training samples uniformly from the pool.
std::vector<std::size_t> oversample_pool(const std::vector<int>& labels,
                                         int n_classes);

// Emits batches with exactly batch_size / n_classes samples per class.
// Within a class, indices cycle through reshuffled permutations so every
// example is visited.
class BalancedBatchSampler {
 public:
  BalancedBatchSampler(const std::vector<int>& labels, int n_classes,
                       int batch_size, Rng rng);
  std::vector<std::size_t> next_batch();
  int batch_size() const { return batch_size_; }

 private:
  int n_classes_;
  int batch_size_;
  int per_class_;
  std::vector<std::vector<std::size_t>> by_class_;
  std::vector<std::size_t> cursor_;
  Rng rng_;
};

}  // namespace pla
