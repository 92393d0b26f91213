#pragma once

#include <cstddef>
#include <vector>

#include "sico/errors.hpp"

namespace sico {

// Evaluation metrics and run statistics.

// C x C counts, rows = true class, cols = predicted class. For binary tasks
// class 1 is the positive ("apneic") class.
struct ConfusionCounts {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // row-major

  ConfusionCounts() = default;
  explicit ConfusionCounts(std::size_t c) : classes(c), counts(c * c, 0) {}

  std::size_t& at(std::size_t truth, std::size_t pred) {
    return counts[truth * classes + pred];
  }
  std::size_t at(std::size_t truth, std::size_t pred) const {
    return counts[truth * classes + pred];
  }
  std::size_t total() const;
};

ConfusionCounts confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predictions, int class_count);

// Cohen's kappa, (p_o - p_e) / (1 - p_e). Throws MetricError when p_e = 1.
double kappa(const ConfusionCounts& counts);

struct SensSpec {
  double sensitivity = 0.0;
  double specificity = 0.0;
};

// Binary only: sensitivity = TP/(TP+FN) over the positive row, specificity =
// TN/(TN+FP) over the negative row.
SensSpec sensitivity_specificity(const ConfusionCounts& counts);

double accuracy(const ConfusionCounts& counts);

struct TTestResult {
  double t = 0.0;
  double critical = 0.0;
  bool significant = false;
};

// One-tailed paired t-test of mean(a-b) > 0 at alpha = 0.05. Sample standard
// deviation (n-1); critical values tabulated for df = 1..30.
TTestResult paired_t_one_tailed(const std::vector<double>& a,
                                const std::vector<double>& b,
                                double alpha = 0.05);

struct RunSummary {
  std::vector<double> values;
  double mean = 0.0;
  double standard_error = 0.0;
  bool se_defined = false;  // false for a single repetition
};

RunSummary summarize(const std::vector<double>& values);

}  // namespace sico
