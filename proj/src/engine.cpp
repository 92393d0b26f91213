#include "sico/engine.hpp"

#include <algorithm>
#include <cmath>

#include "sico/rng.hpp"

namespace sico {

std::int64_t StageBudget::resolve(std::size_t labeled_size,
                                  std::size_t batch_size) const {
  if (mode == Mode::Iterations) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(value));
  }
  const double steps_per_epoch =
      std::ceil(static_cast<double>(labeled_size) /
                static_cast<double>(std::max<std::size_t>(1, batch_size)));
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(value * steps_per_epoch)));
}

void AdaptationConfig::validate() const {
  criterion.validate();
  if (max_stages < 1) throw ConfigError("adaptation: max_stages must be >= 1");
  if (stage_budget.value <= 0.0) {
    throw ConfigError("adaptation: stage budget must be positive");
  }
  if (batch_size < 1) throw ConfigError("adaptation: batch size must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw ConfigError("adaptation: learning rate must be positive");
  }
}

NetworkParams train_source(const NetworkSpec& spec, const SampleSet& source,
                           std::int64_t budget, std::uint64_t seed,
                           std::size_t batch_size, double learning_rate) {
  if (budget < 1) throw InputError("train_source: budget must be >= 1");
  if (!source.labeled()) throw InputError("train_source: source has no labels");
  NetworkParams params = init_network(spec, seed);
  return train(std::move(params), source, budget, batch_size, learning_rate,
               seed);
}

Matrix pseudo_label(const NetworkParams& params, const Matrix& subset,
                    LabelMode mode) {
  const Matrix probs = predict_proba(params, subset);
  if (mode == LabelMode::Soft) return probs;
  Matrix hard(probs.rows, probs.cols, 0.0);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const double* p = probs.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols; ++c) {
      if (p[c] > p[best]) best = c;
    }
    hard(r, best) = 1.0;
  }
  return hard;
}

namespace {

struct LabeledPool {
  // Frozen training rows: features gathered lazily from the target set.
  Matrix features;  // grows with the labeled set
  Matrix labels;

  void append(const Matrix& target_features,
              const std::vector<std::size_t>& indices, const Matrix& new_labels) {
    const std::size_t old_rows = features.rows;
    Matrix grown(old_rows + indices.size(), target_features.cols);
    std::copy(features.values.begin(), features.values.end(),
              grown.values.begin());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const double* src = target_features.row(indices[i]);
      double* dst = grown.row(old_rows + i);
      std::copy(src, src + target_features.cols, dst);
    }
    features = std::move(grown);

    Matrix grown_labels(old_rows + indices.size(), new_labels.cols);
    std::copy(labels.values.begin(), labels.values.end(),
              grown_labels.values.begin());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const double* src = new_labels.row(i);
      double* dst = grown_labels.row(old_rows + i);
      std::copy(src, src + new_labels.cols, dst);
    }
    labels = std::move(grown_labels);
  }
};

}  // namespace

AdaptationResult sico_adapt(const NetworkParams& source_params,
                            const SampleSet& target,
                            const AdaptationConfig& cfg) {
  cfg.validate();
  target.validate();
  source_params.spec.shape_walk();
  if (target.features.cols !=
      static_cast<std::size_t>(source_params.spec.input.flat())) {
    throw InputError("sico_adapt: target features do not fit the classifier");
  }

  const std::size_t n = target.size();
  const int classes = source_params.spec.class_count();

  AdaptationState state;
  state.target_size = n;
  state.is_labeled.assign(n, 0);
  state.pseudo_labels = Matrix(0, static_cast<std::size_t>(classes));

  LabeledPool pool;
  pool.features = Matrix(0, target.features.cols);
  pool.labels = Matrix(0, static_cast<std::size_t>(classes));

  auto record_stage = [&](int stage, const NetworkParams& classifier) {
    if (!cfg.evaluator) return;
    StageContext ctx{stage, classifier, target.features,
                     std::span<const std::size_t>(state.labeled),
                     state.pseudo_labels,
                     std::span<const int>(state.provenance)};
    state.history.push_back(cfg.evaluator(ctx));
  };

  auto add_selection = [&](const Selection& sel_local,
                           const std::vector<std::size_t>& pool_to_global,
                           const NetworkParams& labeler, int stage) {
    // Map pool-local indices back to target indices, then freeze labels
    // produced by the labeling classifier.
    std::vector<std::size_t> global(sel_local.size());
    for (std::size_t k = 0; k < sel_local.size(); ++k) {
      global[k] = pool_to_global.empty() ? sel_local.indices[k]
                                         : pool_to_global[sel_local.indices[k]];
    }
    const Matrix rows = target.features.gather_rows(global);
    const Matrix frozen = pseudo_label(labeler, rows, cfg.label_mode);

    pool.append(target.features, global, frozen);

    const std::size_t old = state.labeled.size();
    Matrix grown(old + global.size(), state.pseudo_labels.cols);
    std::copy(state.pseudo_labels.values.begin(),
              state.pseudo_labels.values.end(), grown.values.begin());
    for (std::size_t k = 0; k < global.size(); ++k) {
      const double* src = frozen.row(k);
      std::copy(src, src + frozen.cols, grown.row(old + k));
    }
    state.pseudo_labels = std::move(grown);
    for (std::size_t k = 0; k < global.size(); ++k) {
      state.labeled.push_back(global[k]);
      state.provenance.push_back(stage);
      if (state.is_labeled[global[k]]) {
        throw InternalError("sico_adapt: index selected twice");
      }
      state.is_labeled[global[k]] = 1;
    }
    state.stages_completed = stage + 1;
  };

  // Stage 0: the source classifier picks and labels its confident region.
  record_stage(0, source_params);
  {
    const Matrix probs = predict_proba(source_params, target.features);
    const Selection sel = select(probs, cfg.criterion, SelectionStage::Initial);
    if (sel.empty()) {
      throw AdaptationError(
          "source classifier produced no confident region on the target set");
    }
    add_selection(sel, {}, source_params, 0);
  }

  // Stages 1..N: retrain on the frozen labeled set, then extend it.
  // At most two parameter sets are alive at once: the previous labeler is
  // dropped as soon as the new classifier replaces it.
  NetworkParams current;
  int stage = 1;
  while (true) {
    const std::uint64_t stage_seed =
        cfg.seed_base + static_cast<std::uint64_t>(stage - 1);
    NetworkParams trainee = cfg.warm_start && stage > 1
                                ? current
                                : init_network(source_params.spec, stage_seed);
    trainee = train(std::move(trainee), pool.features, pool.labels,
                    cfg.stage_budget.resolve(pool.features.rows, cfg.batch_size),
                    cfg.batch_size, cfg.learning_rate, stage_seed);
    current = std::move(trainee);
    record_stage(stage, current);

    if (state.full_coverage() || stage >= cfg.max_stages) break;

    std::vector<std::size_t> pool_to_global;
    pool_to_global.reserve(n - state.labeled.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!state.is_labeled[i]) pool_to_global.push_back(i);
    }
    const Matrix remaining = target.features.gather_rows(pool_to_global);
    const Matrix probs = predict_proba(current, remaining);
    const Selection sel = select(probs, cfg.criterion, SelectionStage::Subsequent);
    if (sel.empty()) break;  // stuck: nothing satisfies the criterion
    add_selection(sel, pool_to_global, current, stage);
    ++stage;
  }

  AdaptationResult result;
  result.target_params = std::move(current);
  result.state = std::move(state);
  return result;
}

DeltaBreakdown delta_breakdown(const NetworkParams& final_params,
                               const AdaptationState& state,
                               const SampleSet& target_with_true_labels) {
  if (!target_with_true_labels.labeled()) {
    throw InputError("delta_breakdown: target set has no true labels");
  }
  return delta_breakdown(final_params, target_with_true_labels.features,
                         std::span<const std::size_t>(state.labeled),
                         state.pseudo_labels,
                         std::span<const int>(state.provenance),
                         target_with_true_labels.labels);
}

}  // namespace sico
