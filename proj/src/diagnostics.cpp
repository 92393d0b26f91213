#include "sico/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "sico/criteria.hpp"
#include "sico/metrics.hpp"

namespace sico {

double empirical_risk(const NetworkParams& params, const Matrix& subset,
                      const Matrix& pseudo_labels) {
  if (subset.rows != pseudo_labels.rows) {
    throw InputError("empirical_risk: pseudo-labels do not cover the subset");
  }
  const Matrix probs = predict_proba(params, subset);
  return cross_entropy(probs, pseudo_labels);
}

DeltaResult delta(const NetworkParams& params, const Matrix& subset,
                  const Matrix& pseudo_labels,
                  const std::vector<int>& true_labels) {
  if (subset.rows != pseudo_labels.rows || subset.rows != true_labels.size()) {
    throw InputError("delta: labels do not cover the subset");
  }
  const std::size_t classes = pseudo_labels.cols;
  const Matrix probs = predict_proba(params, subset);
  const Matrix truth = one_hot(true_labels, static_cast<int>(classes));

  DeltaResult res;
  for (std::size_t j = 0; j < subset.rows; ++j) {
    const double* y = truth.row(j);
    const double* yhat = pseudo_labels.row(j);
    const double* p = probs.row(j);
    bool mismatch = false;
    double term = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double d = y[c] - yhat[c];
      if (d != 0.0) {
        mismatch = true;
        term += d * clamped_log(p[c]);
      }
    }
    if (mismatch) {
      res.mismatches += 1;
      res.delta -= term;
    }
  }
  res.delta_norm = res.delta / static_cast<double>(subset.rows);

  // The identity L = Lhat + delta/|D| must hold by construction.
  const double lhat = cross_entropy(probs, pseudo_labels);
  const double l_true = cross_entropy(probs, truth);
  if (std::abs(l_true - (lhat + res.delta_norm)) > 1e-9) {
    throw InternalError("delta: risk identity violated beyond 1e-9");
  }
  return res;
}

DeltaBreakdown delta_breakdown(const NetworkParams& final_params,
                               const Matrix& target_features,
                               std::span<const std::size_t> labeled,
                               const Matrix& pseudo_labels,
                               std::span<const int> provenance,
                               const std::vector<int>& true_labels) {
  if (labeled.size() != pseudo_labels.rows ||
      labeled.size() != provenance.size()) {
    throw InputError("delta_breakdown: provenance does not cover the labeled set");
  }
  if (true_labels.size() != target_features.rows) {
    throw InputError("delta_breakdown: true labels do not cover the target set");
  }
  int stages = 0;
  for (int s : provenance) {
    if (s < 0) throw InputError("delta_breakdown: missing provenance");
    stages = std::max(stages, s + 1);
  }

  const std::size_t classes = pseudo_labels.cols;
  std::vector<std::size_t> idx(labeled.begin(), labeled.end());
  const Matrix features = target_features.gather_rows(idx);
  const Matrix probs = predict_proba(final_params, features);

  DeltaBreakdown bd;
  bd.terms.assign(static_cast<std::size_t>(std::max(stages, 1)), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const int truth = true_labels[idx[j]];
    if (truth < 0 || static_cast<std::size_t>(truth) >= classes) {
      throw InputError("delta_breakdown: true label out of range");
    }
    const double* yhat = pseudo_labels.row(j);
    const double* p = probs.row(j);
    double term = 0.0;
    bool mismatch = false;
    for (std::size_t c = 0; c < classes; ++c) {
      const double y = c == static_cast<std::size_t>(truth) ? 1.0 : 0.0;
      const double d = y - yhat[c];
      if (d != 0.0) {
        mismatch = true;
        term -= d * clamped_log(p[c]);
      }
    }
    if (mismatch) {
      bd.terms[static_cast<std::size_t>(provenance[j])] += term;
      total += term;
    }
  }
  bd.total = 0.0;
  for (double t : bd.terms) bd.total += t;
  if (std::abs(bd.total - total) > 1e-9) {
    throw InternalError("delta_breakdown: shell terms do not sum to the total");
  }
  return bd;
}

StageEvaluator make_stage_evaluator(const SampleSet& target_train,
                                    const SampleSet* target_test,
                                    const SampleSet* source_test) {
  // Copies keep the evaluator self-contained.
  auto train = std::make_shared<SampleSet>(target_train);
  auto test = target_test ? std::make_shared<SampleSet>(*target_test) : nullptr;
  auto src_test =
      source_test ? std::make_shared<SampleSet>(*source_test) : nullptr;

  return [train, test, src_test](const StageContext& ctx) {
    StageRecord rec;
    rec.stage = ctx.stage;
    rec.coverage = ctx.labeled.size();

    const Matrix all_probs = predict_proba(ctx.classifier, train->features);
    rec.mean_entropy = entropy_of(all_probs).mean;

    if (!ctx.labeled.empty()) {
      std::vector<std::size_t> idx(ctx.labeled.begin(), ctx.labeled.end());
      const Matrix sub = train->features.gather_rows(idx);
      rec.emp_risk = empirical_risk(ctx.classifier, sub, ctx.pseudo_labels);
      if (train->labeled()) {
        std::vector<int> truth(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) {
          truth[j] = train->labels[idx[j]];
        }
        const DeltaResult d =
            delta(ctx.classifier, sub, ctx.pseudo_labels, truth);
        rec.true_risk = rec.emp_risk + d.delta_norm;
        rec.delta = d.delta;
        rec.delta_norm = d.delta_norm;

        // Newest shell = rows labeled at the previous stage.
        const int newest = ctx.stage - 1;
        double shell = 0.0;
        const Matrix probs = predict_proba(ctx.classifier, sub);
        for (std::size_t j = 0; j < idx.size(); ++j) {
          if (ctx.provenance[j] != newest) continue;
          const int t = train->labels[idx[j]];
          const double* yhat = ctx.pseudo_labels.row(j);
          const double* p = probs.row(j);
          for (std::size_t c = 0; c < probs.cols; ++c) {
            const double y = c == static_cast<std::size_t>(t) ? 1.0 : 0.0;
            const double dd = y - yhat[c];
            if (dd != 0.0) shell -= dd * clamped_log(p[c]);
          }
        }
        rec.delta_shell = shell;
      }
    } else if (ctx.stage == 0) {
      rec.delta_shell = 0.0;
    }

    if (train->labeled()) {
      const Matrix truth_all = one_hot(train->labels, train->class_count);
      rec.full_target_true_risk = cross_entropy(all_probs, truth_all);
    }

    if (test && test->labeled()) {
      const std::vector<int> pred = predict(ctx.classifier, test->features);
      const ConfusionCounts counts =
          confusion(test->labels, pred, test->class_count);
      rec.test_acc = accuracy(counts);
      try {
        rec.test_kappa = kappa(counts);
      } catch (const MetricError&) {
        rec.test_kappa = kNaN;
      }
    }
    if (src_test && src_test->labeled()) {
      rec.source_test_acc = accuracy_on(ctx.classifier, *src_test);
    }
    return rec;
  };
}

namespace {

std::string csv_num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace

void stage_curves_csv(std::span<const StageRecord> records, std::ostream& out) {
  out << "stage,coverage,emp_risk,true_risk,delta,delta_shell,mean_entropy,"
         "test_acc,test_kappa\n";
  for (const StageRecord& r : records) {
    out << r.stage << ',' << r.coverage << ',' << csv_num(r.emp_risk) << ','
        << csv_num(r.true_risk) << ',' << csv_num(r.delta) << ','
        << csv_num(r.delta_shell) << ',' << csv_num(r.mean_entropy) << ','
        << csv_num(r.test_acc) << ',' << csv_num(r.test_kappa) << '\n';
  }
}

void stage_curves_csv(std::span<const StageRecord> records,
                      const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  stage_curves_csv(records, f);
  if (!f) throw InputError("write failed: " + path);
}

}  // namespace sico
