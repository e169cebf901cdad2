#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dta/tape.hpp"

namespace dta {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// KxK counts, rows = predicted class, columns = true class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes)
      : counts_(Eigen::MatrixX<std::int64_t>::Zero(num_classes, num_classes)) {}

  int num_classes() const { return static_cast<int>(counts_.rows()); }
  std::int64_t total() const { return counts_.sum(); }
  std::int64_t at(int pred, int truth) const { return counts_(pred, truth); }
  void set(int pred, int truth, std::int64_t v) { counts_(pred, truth) = v; }

  void update(const std::vector<int>& predictions,
              const std::vector<int>& labels);
  void merge(const ConfusionMatrix& other) { counts_ += other.counts_; }

  const Eigen::MatrixX<std::int64_t>& counts() const { return counts_; }

 private:
  Eigen::MatrixX<std::int64_t> counts_;
};

struct ClassPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool flagged = false;  // zero denominator somewhere
};

double overall_accuracy(const ConfusionMatrix& cm);            // percent
std::vector<ClassPrf> per_class_prf(const ConfusionMatrix& cm);  // percent
double miou(const ConfusionMatrix& cm);                        // percent
double average_f1(const ConfusionMatrix& cm);                  // percent

// F1 from precision/recall percentages (the confusion-table arithmetic).
double f1_from_pr(double precision, double recall);

}  // namespace dta
