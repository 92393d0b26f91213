#include "sico/metrics.hpp"

#include <cmath>
#include <limits>

namespace sico {

std::size_t ConfusionCounts::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  return n;
}

ConfusionCounts confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predictions,
                          int class_count) {
  if (true_labels.size() != predictions.size()) {
    throw InputError("confusion: label/prediction lengths differ");
  }
  if (class_count < 2) throw InputError("confusion: class_count must be >= 2");
  ConfusionCounts counts(static_cast<std::size_t>(class_count));
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i];
    const int p = predictions[i];
    if (t < 0 || t >= class_count || p < 0 || p >= class_count) {
      throw InputError("confusion: label out of range at index " +
                       std::to_string(i));
    }
    counts.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p)) += 1;
  }
  return counts;
}

double kappa(const ConfusionCounts& counts) {
  const std::size_t n = counts.total();
  if (n == 0) throw InputError("kappa: empty counts");
  const std::size_t c = counts.classes;

  double diag = 0.0;
  std::vector<double> row_sum(c, 0.0), col_sum(c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    diag += static_cast<double>(counts.at(i, i));
    for (std::size_t j = 0; j < c; ++j) {
      row_sum[i] += static_cast<double>(counts.at(i, j));
      col_sum[j] += static_cast<double>(counts.at(i, j));
    }
  }
  const double dn = static_cast<double>(n);
  const double p_o = diag / dn;
  double p_e = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    p_e += (row_sum[i] / dn) * (col_sum[i] / dn);
  }
  if (std::abs(1.0 - p_e) < 1e-15) {
    throw MetricError("kappa: undefined, expected agreement is 1");
  }
  return (p_o - p_e) / (1.0 - p_e);
}

SensSpec sensitivity_specificity(const ConfusionCounts& counts) {
  if (counts.classes != 2) {
    throw InputError("sensitivity_specificity: binary counts required");
  }
  const double tp = static_cast<double>(counts.at(1, 1));
  const double fn = static_cast<double>(counts.at(1, 0));
  const double tn = static_cast<double>(counts.at(0, 0));
  const double fp = static_cast<double>(counts.at(0, 1));
  if (tp + fn == 0.0) {
    throw MetricError("sensitivity undefined: no positive samples");
  }
  if (tn + fp == 0.0) {
    throw MetricError("specificity undefined: no negative samples");
  }
  return {tp / (tp + fn), tn / (tn + fp)};
}

double accuracy(const ConfusionCounts& counts) {
  const std::size_t n = counts.total();
  if (n == 0) throw InputError("accuracy: empty counts");
  double diag = 0.0;
  for (std::size_t i = 0; i < counts.classes; ++i) {
    diag += static_cast<double>(counts.at(i, i));
  }
  return diag / static_cast<double>(n);
}

namespace {

// Upper-tail critical values of Student's t at alpha = 0.05, df = 1..30.
constexpr double kT05[30] = {
    6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946, 1.8595,
    1.8331, 1.8125, 1.7959, 1.7823, 1.7709, 1.7613, 1.7531, 1.7459,
    1.7396, 1.7341, 1.7291, 1.7247, 1.7207, 1.7171, 1.7139, 1.7109,
    1.7081, 1.7056, 1.7033, 1.7011, 1.6991, 1.6973};

}  // namespace

TTestResult paired_t_one_tailed(const std::vector<double>& a,
                                const std::vector<double>& b, double alpha) {
  if (alpha != 0.05) {
    throw InputError("paired_t_one_tailed: only alpha = 0.05 is tabulated");
  }
  if (a.size() != b.size()) {
    throw InputError("paired_t_one_tailed: length mismatch");
  }
  const std::size_t n = a.size();
  if (n < 2) throw InputError("paired_t_one_tailed: need at least 2 pairs");
  if (n - 1 > 30) {
    throw InputError("paired_t_one_tailed: df > 30 not tabulated");
  }

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  const double sd = std::sqrt(var);

  TTestResult res;
  res.critical = kT05[n - 2];
  if (sd == 0.0) {
    if (mean == 0.0) {
      res.t = 0.0;
      res.significant = false;
    } else {
      res.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      res.significant = mean > 0.0;
    }
    return res;
  }
  res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  res.significant = res.t > res.critical;
  return res;
}

RunSummary summarize(const std::vector<double>& values) {
  if (values.empty()) throw InputError("summarize: no values");
  RunSummary s;
  s.values = values;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() >= 2) {
    double var = 0.0;
    for (double v : values) {
      const double d = v - s.mean;
      var += d * d;
    }
    var /= static_cast<double>(values.size() - 1);
    s.standard_error = std::sqrt(var / static_cast<double>(values.size()));
    s.se_defined = true;
  }
  return s;
}

}  // namespace sico
