#include "pla/metrics.hpp"

namespace pla {

ConfusionMatrix confusion(const std::vector<int>& preds,
                          const std::vector<int>& labels, int n_classes) {
  require(preds.size() == labels.size(), ErrorCode::shape,
          "confusion: preds/labels length mismatch");
  require(n_classes > 0, ErrorCode::shape, "confusion: n_classes must be > 0");
  ConfusionMatrix cm;
  cm.n_classes = n_classes;
  cm.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < n_classes, ErrorCode::shape,
            "confusion: label out of range");
    require(preds[i] >= 0 && preds[i] < n_classes, ErrorCode::shape,
            "confusion: prediction out of range");
    ++cm.at(labels[i], preds[i]);
  }
  return cm;
}

double mc_sensitivity(const ConfusionMatrix& cm) {
  double sum = 0.0;
  int counted = 0;
  for (int i = 0; i < cm.n_classes; ++i) {
    long support = cm.row_total(i);
    if (support == 0) continue;
    sum += static_cast<double>(cm.at(i, i)) / static_cast<double>(support);
    ++counted;
  }
  require(counted > 0, ErrorCode::shape, "mc_sensitivity: no class has samples");
  return sum / counted;
}

double mc_specificity(const ConfusionMatrix& cm) {
  long total = cm.total();
  require(total > 0, ErrorCode::shape, "mc_specificity: empty matrix");
  double sum = 0.0;
  for (int i = 0; i < cm.n_classes; ++i) {
    long tp = cm.at(i, i);
    long fn = cm.row_total(i) - tp;
    long fp = 0;
    for (int t = 0; t < cm.n_classes; ++t)
      if (t != i) fp += cm.at(t, i);
    long tn = total - tp - fn - fp;
    long denom = tn + fp;
    sum += denom > 0 ? static_cast<double>(tn) / static_cast<double>(denom) : 0.0;
  }
  return sum / cm.n_classes;
}

double macro_f1(const ConfusionMatrix& cm) {
  require(cm.total() > 0, ErrorCode::shape, "macro_f1: empty matrix");
  double sum = 0.0;
  for (int i = 0; i < cm.n_classes; ++i) {
    long tp = cm.at(i, i);
    long fn = cm.row_total(i) - tp;
    long fp = 0;
    for (int t = 0; t < cm.n_classes; ++t)
      if (t != i) fp += cm.at(t, i);
    double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double rec = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    sum += prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  return sum / cm.n_classes;
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> out(static_cast<std::size_t>(cm.n_classes), 0.0);
  for (int i = 0; i < cm.n_classes; ++i) {
    long support = cm.row_total(i);
    if (support > 0)
      out[static_cast<std::size_t>(i)] =
          static_cast<double>(cm.at(i, i)) / static_cast<double>(support);
  }
  return out;
}

}  // namespace pla
