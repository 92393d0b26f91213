#pragma once

#include <cstddef>
#include <vector>

#include "sico/matrix.hpp"

namespace sico {

// The belief criterion: which pool samples is a classifier confident enough
// about, and with which pseudo-label.

struct CriterionSpec {
  enum class Kind { TopMPerClass, TopPercentPerClass, Threshold };

  Kind kind = Kind::TopMPerClass;
  int m_initial = 0;
  int m_subsequent = 0;
  double percent = 0.0;    // in (0,1]
  double threshold = 0.0;  // probability in (0,1)

  static CriterionSpec top_m(int m_initial, int m_subsequent);
  static CriterionSpec top_percent(double p);
  static CriterionSpec threshold_at(double t);

  void validate() const;  // throws ConfigError
};

enum class SelectionStage { Initial, Subsequent };

struct Selection {
  std::vector<std::size_t> indices;        // into the pool, ascending
  std::vector<int> labels;                 // pseudo-label per chosen index
  std::vector<std::size_t> per_class_counts;

  bool empty() const { return indices.empty(); }
  std::size_t size() const { return indices.size(); }
};

// Selects confident pool points per class. A sample only ever competes for
// (and is labeled with) its argmax class; ties break toward the lower pool
// index, and argmax ties toward the lower class index. An empty pool yields
// an empty Selection.
Selection select(const Matrix& pool_probabilities, const CriterionSpec& criterion,
                 SelectionStage stage);

struct EntropyResult {
  std::vector<double> per_row;
  double mean = 0.0;
};

// Shannon entropy per probability row (natural log, clamped like the loss).
EntropyResult entropy_of(const Matrix& probabilities);

}  // namespace sico
