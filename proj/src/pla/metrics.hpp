#pragma once

#include <vector>

#include "pla/common.hpp"

namespace pla {

// Rows are true classes, columns are predicted classes.
struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<long> counts;  // n_classes * n_classes

  long at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * n_classes + pred];
  }
  long& at(int truth, int pred) {
    return counts[static_cast<std::size_t>(truth) * n_classes + pred];
  }
  long row_total(int truth) const {
    long s = 0;
    for (int p = 0; p < n_classes; ++p) s += at(truth, p);
    return s;
  }
  long total() const {
    long s = 0;
    for (long v : counts) s += v;
    return s;
  }
};

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& labels, int n_classes);

// Mean over classes of per-class recall TP_i/(TP_i+FN_i). Classes with no
// true samples are excluded from the mean.
double mc_sensitivity(const ConfusionMatrix& cm);
// Mean over classes of the one-vs-rest true-negative rate.
double mc_specificity(const ConfusionMatrix& cm);
// Macro-averaged F1; per-class F1 is 0 when precision+recall is 0.
double macro_f1(const ConfusionMatrix& cm);

// Per-class recall vector (0 for empty classes), used in report rows.
std::vector<double> per_class_recall(const ConfusionMatrix& cm);

}  // namespace pla
