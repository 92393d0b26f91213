#include "sico/criteria.hpp"

#include <algorithm>
#include <cmath>

#include "sico/network.hpp"

namespace sico {

CriterionSpec CriterionSpec::top_m(int m_initial, int m_subsequent) {
  CriterionSpec c;
  c.kind = Kind::TopMPerClass;
  c.m_initial = m_initial;
  c.m_subsequent = m_subsequent;
  return c;
}

CriterionSpec CriterionSpec::top_percent(double p) {
  CriterionSpec c;
  c.kind = Kind::TopPercentPerClass;
  c.percent = p;
  return c;
}

CriterionSpec CriterionSpec::threshold_at(double t) {
  CriterionSpec c;
  c.kind = Kind::Threshold;
  c.threshold = t;
  return c;
}

void CriterionSpec::validate() const {
  switch (kind) {
    case Kind::TopMPerClass:
      if (m_initial < 1 || m_subsequent < 1) {
        throw ConfigError("criterion: m values must be >= 1");
      }
      break;
    case Kind::TopPercentPerClass:
      if (!(percent > 0.0 && percent <= 1.0)) {
        throw ConfigError("criterion: percentage must be in (0,1]");
      }
      break;
    case Kind::Threshold:
      if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("criterion: threshold must be in (0,1)");
      }
      break;
  }
}

namespace {

int argmax_row(const double* p, std::size_t cols) {
  int best = 0;
  for (std::size_t c = 1; c < cols; ++c) {
    if (p[c] > p[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

Selection select(const Matrix& pool_probabilities,
                 const CriterionSpec& criterion, SelectionStage stage) {
  criterion.validate();
  Selection sel;
  if (pool_probabilities.rows == 0) return sel;
  const std::size_t classes = pool_probabilities.cols;
  if (classes < 2) throw InputError("select: need at least 2 classes");
  sel.per_class_counts.assign(classes, 0);

  std::vector<int> argmax(pool_probabilities.rows);
  for (std::size_t r = 0; r < pool_probabilities.rows; ++r) {
    const double* p = pool_probabilities.row(r);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (!std::isfinite(p[c]) || p[c] < 0.0) {
        throw InputError("select: malformed probability row " + std::to_string(r));
      }
      sum += p[c];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw InputError("select: probability row " + std::to_string(r) +
                       " does not sum to 1");
    }
    argmax[r] = argmax_row(p, classes);
  }

  std::vector<std::pair<std::size_t, int>> chosen;  // (pool index, label)

  if (criterion.kind == CriterionSpec::Kind::Threshold) {
    for (std::size_t r = 0; r < pool_probabilities.rows; ++r) {
      if (pool_probabilities(r, static_cast<std::size_t>(argmax[r])) >
          criterion.threshold) {
        chosen.emplace_back(r, argmax[r]);
      }
    }
  } else {
    // Rank each sample only within its argmax class.
    for (std::size_t cls = 0; cls < classes; ++cls) {
      std::vector<std::size_t> candidates;
      for (std::size_t r = 0; r < pool_probabilities.rows; ++r) {
        if (static_cast<std::size_t>(argmax[r]) == cls) candidates.push_back(r);
      }
      if (candidates.empty()) continue;

      std::size_t take = 0;
      if (criterion.kind == CriterionSpec::Kind::TopMPerClass) {
        const int m = stage == SelectionStage::Initial ? criterion.m_initial
                                                       : criterion.m_subsequent;
        take = std::min<std::size_t>(candidates.size(),
                                     static_cast<std::size_t>(m));
      } else {
        take = static_cast<std::size_t>(
            std::ceil(criterion.percent * static_cast<double>(candidates.size())));
        take = std::min(take, candidates.size());
      }

      std::sort(candidates.begin(), candidates.end(),
                [&](std::size_t a, std::size_t b) {
                  const double pa = pool_probabilities(a, cls);
                  const double pb = pool_probabilities(b, cls);
                  if (pa != pb) return pa > pb;
                  return a < b;  // deterministic tie-break
                });
      for (std::size_t k = 0; k < take; ++k) {
        chosen.emplace_back(candidates[k], static_cast<int>(cls));
      }
    }
  }

  std::sort(chosen.begin(), chosen.end());
  sel.indices.reserve(chosen.size());
  sel.labels.reserve(chosen.size());
  for (const auto& [idx, label] : chosen) {
    sel.indices.push_back(idx);
    sel.labels.push_back(label);
    sel.per_class_counts[static_cast<std::size_t>(label)] += 1;
  }
  return sel;
}

EntropyResult entropy_of(const Matrix& probabilities) {
  EntropyResult res;
  res.per_row.resize(probabilities.rows);
  double total = 0.0;
  for (std::size_t r = 0; r < probabilities.rows; ++r) {
    const double* p = probabilities.row(r);
    double h = 0.0;
    for (std::size_t c = 0; c < probabilities.cols; ++c) {
      if (p[c] > 0.0) h -= p[c] * clamped_log(p[c]);
    }
    res.per_row[r] = h;
    total += h;
  }
  res.mean = probabilities.rows ? total / static_cast<double>(probabilities.rows)
                                : 0.0;
  return res;
}

}  // namespace sico
