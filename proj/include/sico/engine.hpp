#pragma once

#include <cstdint>
#include <vector>

#include "sico/criteria.hpp"
#include "sico/diagnostics.hpp"
#include "sico/network.hpp"

namespace sico {

// Orchestration of the adaptation loop: train on the source once, then
// repeatedly select high-confidence target points, freeze their
// pseudo-labels, and retrain on the growing labeled subset.

enum class LabelMode { Hard, Soft };

struct StageBudget {
  enum class Mode { Epochs, Iterations };
  Mode mode = Mode::Epochs;
  double value = 20.0;

  static StageBudget epochs(double e) { return {Mode::Epochs, e}; }
  static StageBudget iterations(std::int64_t k) {
    return {Mode::Iterations, static_cast<double>(k)};
  }

  // Batch iterations for one stage over a labeled set of the given size.
  std::int64_t resolve(std::size_t labeled_size, std::size_t batch_size) const;
};

struct AdaptationConfig {
  CriterionSpec criterion;
  LabelMode label_mode = LabelMode::Hard;
  StageBudget stage_budget;
  std::size_t batch_size = 128;
  double learning_rate = 0.001;
  int max_stages = 1 << 20;  // effectively "until full coverage"
  bool warm_start = false;   // default: fresh initialization per stage
  std::uint64_t seed_base = 0;
  StageEvaluator evaluator;  // optional diagnostics hook

  void validate() const;
};

struct AdaptationState {
  std::size_t target_size = 0;
  std::vector<std::size_t> labeled;  // global indices, insertion order
  Matrix pseudo_labels;              // rows aligned with `labeled`, frozen
  std::vector<int> provenance;       // stage whose classifier labeled the row
  std::vector<char> is_labeled;      // mask over the target set
  int stages_completed = 0;          // number of selection events
  std::vector<StageRecord> history;  // filled when an evaluator is configured

  bool full_coverage() const { return labeled.size() == target_size; }
};

struct AdaptationResult {
  NetworkParams target_params;  // the adapted classifier
  AdaptationState state;
};

// Trains the classifier that gets released. Nothing downstream of this call
// may read the source dataset again.
NetworkParams train_source(const NetworkSpec& spec, const SampleSet& source,
                           std::int64_t budget, std::uint64_t seed,
                           std::size_t batch_size = 128,
                           double learning_rate = 0.001);

// Labels a subset with a classifier's beliefs: hard = one-hot argmax,
// soft = the full probability rows.
Matrix pseudo_label(const NetworkParams& params, const Matrix& subset,
                    LabelMode mode);

// The adaptation loop. Target labels, when present, are ignored here; only
// the configured evaluator may look at them. Terminates on full coverage,
// after max_stages trained classifiers, or when a stage selects nothing; the
// last trained classifier is returned. Throws AdaptationError when the
// source classifier's confident region is empty at stage 0.
AdaptationResult sico_adapt(const NetworkParams& source_params,
                            const SampleSet& target,
                            const AdaptationConfig& cfg);

// Convenience wrappers forwarding adaptation state to the diagnostics ops.
DeltaBreakdown delta_breakdown(const NetworkParams& final_params,
                               const AdaptationState& state,
                               const SampleSet& target_with_true_labels);

}  // namespace sico
