#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sico/network.hpp"

namespace sico {

// Error-propagation diagnostics. Everything here is observational: these are
// the only code paths allowed to read target true labels, and nothing here
// mutates adaptation state or parameters.

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One row per classifier in the adaptation sequence. Row 0 describes the
// source classifier (coverage 0, no training subset on the target); row i
// describes the classifier trained at stage i on the labeled set of size
// `coverage`, evaluated on that same set.
struct StageRecord {
  int stage = 0;
  std::size_t coverage = 0;
  double emp_risk = kNaN;      // risk against the frozen pseudo-labels
  double true_risk = kNaN;     // risk against the true labels
  double delta = kNaN;         // unnormalized accumulated-error sum
  double delta_norm = kNaN;    // delta / coverage
  double delta_shell = kNaN;   // newest provenance shell's contribution
  double mean_entropy = kNaN;  // over the whole target training set
  double test_acc = kNaN;
  double test_kappa = kNaN;
  // Extra curves kept in memory; not part of the CSV contract.
  double full_target_true_risk = kNaN;  // risk on all target training data
  double source_test_acc = kNaN;
};

// What the engine hands to the evaluator after each training round.
struct StageContext {
  int stage = 0;                              // 0 = source classifier
  const NetworkParams& classifier;
  const Matrix& target_features;              // all of the target training set
  std::span<const std::size_t> labeled;       // training subset (insertion order)
  const Matrix& pseudo_labels;                // rows aligned with `labeled`
  std::span<const int> provenance;            // labeling stage per row
};

using StageEvaluator = std::function<StageRecord(const StageContext&)>;

// Empirical risk of `params` on a subset with the given (possibly soft)
// pseudo-labels: mean cross-entropy with clamped logs.
double empirical_risk(const NetworkParams& params, const Matrix& subset,
                      const Matrix& pseudo_labels);

struct DeltaResult {
  double delta = 0.0;       // unnormalized sum
  double delta_norm = 0.0;  // delta / |subset|
  std::size_t mismatches = 0;
};

// Accumulated labeling error: delta = -sum_{j mislabeled} (y_j - yhat_j) .
// log h(x_j). Verifies the identity L = Lhat + delta/|D| to 1e-9 internally
// and throws InternalError on violation.
DeltaResult delta(const NetworkParams& params, const Matrix& subset,
                  const Matrix& pseudo_labels,
                  const std::vector<int>& true_labels);

struct DeltaBreakdown {
  std::vector<double> terms;  // one per labeling stage, shell order
  double total = 0.0;
};

// Recursive decomposition of delta by provenance shell: term i covers the
// points labeled at stage i (stage 0 = the source classifier's shell).
DeltaBreakdown delta_breakdown(const NetworkParams& final_params,
                               const Matrix& target_features,
                               std::span<const std::size_t> labeled,
                               const Matrix& pseudo_labels,
                               std::span<const int> provenance,
                               const std::vector<int>& true_labels);

// Builds the evaluator the engine calls once per classifier. True labels and
// test sets are optional; missing inputs leave the matching columns as NaN.
StageEvaluator make_stage_evaluator(const SampleSet& target_train,
                                    const SampleSet* target_test,
                                    const SampleSet* source_test = nullptr);

// CSV with the fixed column order
// stage,coverage,emp_risk,true_risk,delta,delta_shell,mean_entropy,test_acc,test_kappa
void stage_curves_csv(std::span<const StageRecord> records, std::ostream& out);
void stage_curves_csv(std::span<const StageRecord> records,
                      const std::string& path);

}  // namespace sico
