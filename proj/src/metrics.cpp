#include "dta/metrics.hpp"

namespace dta {

void ConfusionMatrix::update(const std::vector<int>& predictions,
                             const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw MetricError("update: prediction/label count mismatch");
  const int k = num_classes();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    int p = predictions[i], t = labels[i];
    if (p < 0 || p >= k || t < 0 || t >= k)
      throw MetricError("update: class index out of range");
    ++counts_(p, t);
  }
}

double overall_accuracy(const ConfusionMatrix& cm) {
  std::int64_t total = cm.total();
  if (total == 0) throw MetricError("overall_accuracy: empty matrix");
  std::int64_t diag = 0;
  for (int k = 0; k < cm.num_classes(); ++k) diag += cm.at(k, k);
  return 100.0 * static_cast<double>(diag) / static_cast<double>(total);
}

std::vector<ClassPrf> per_class_prf(const ConfusionMatrix& cm) {
  const int k = cm.num_classes();
  std::vector<ClassPrf> out(k);
  for (int c = 0; c < k; ++c) {
    std::int64_t tp = cm.at(c, c);
    std::int64_t row = cm.counts().row(c).sum();
    std::int64_t col = cm.counts().col(c).sum();
    ClassPrf& prf = out[c];
    if (row == 0 || col == 0) prf.flagged = true;
    prf.precision = row == 0 ? 0.0 : 100.0 * double(tp) / double(row);
    prf.recall = col == 0 ? 0.0 : 100.0 * double(tp) / double(col);
    prf.f1 = f1_from_pr(prf.precision, prf.recall);
    if (prf.precision + prf.recall == 0.0) prf.flagged = true;
  }
  return out;
}

double f1_from_pr(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double miou(const ConfusionMatrix& cm) {
  const int k = cm.num_classes();
  double sum = 0.0;
  int scored = 0;
  for (int c = 0; c < k; ++c) {
    std::int64_t tp = cm.at(c, c);
    std::int64_t uni = cm.counts().row(c).sum() + cm.counts().col(c).sum() - tp;
    if (uni == 0) continue;  // class absent everywhere
    sum += 100.0 * double(tp) / double(uni);
    ++scored;
  }
  if (scored == 0) throw MetricError("miou: all classes empty");
  return sum / scored;
}

double average_f1(const ConfusionMatrix& cm) {
  auto prf = per_class_prf(cm);
  double sum = 0.0;
  for (const auto& c : prf) sum += c.f1;
  return sum / static_cast<double>(prf.size());
}

}  // namespace dta
