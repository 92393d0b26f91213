#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sico/checkpoint.hpp"
#include "sico/criteria.hpp"
#include "sico/dataset.hpp"
#include "sico/diagnostics.hpp"
#include "sico/engine.hpp"
#include "sico/experiment.hpp"
#include "sico/idx.hpp"
#include "sico/metrics.hpp"
#include "sico/signal_csv.hpp"
#include "sico/synth.hpp"

namespace py = pybind11;
using namespace sico;

namespace {

Matrix matrix_from_numpy(const py::array_t<double>& arr) {
  const py::buffer_info info = arr.request();
  if (info.ndim != 2) throw InputError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(info.shape[0]),
           static_cast<std::size_t>(info.shape[1]));
  const auto view = arr.unchecked<2>();
  for (py::ssize_t r = 0; r < info.shape[0]; ++r) {
    for (py::ssize_t c = 0; c < info.shape[1]; ++c) {
      m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = view(r, c);
    }
  }
  return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> arr({m.rows, m.cols});
  auto view = arr.mutable_unchecked<2>();
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      view(static_cast<py::ssize_t>(r), static_cast<py::ssize_t>(c)) = m(r, c);
    }
  }
  return arr;
}

CriterionSpec criterion_from_args(const std::string& kind, int m_initial,
                                  int m_subsequent, double p, double threshold) {
  if (kind == "top_m") return CriterionSpec::top_m(m_initial, m_subsequent);
  if (kind == "top_percent") return CriterionSpec::top_percent(p);
  if (kind == "threshold") return CriterionSpec::threshold_at(threshold);
  throw ConfigError("criterion must be top_m, top_percent or threshold");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Step-wise confidence-driven source-free domain adaptation";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<InputError>(m, "InputError");
  py::register_exception<NumericError>(m, "NumericError");
  py::register_exception<FormatError>(m, "FormatError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<AdaptationError>(m, "AdaptationError");
  py::register_exception<MetricError>(m, "MetricError");

  py::class_<SampleSet>(m, "SampleSet")
      .def(py::init([](py::array_t<double> features, std::vector<int> labels,
                       int class_count, int channels, std::string name) {
             SampleSet s;
             s.features = matrix_from_numpy(features);
             s.labels = std::move(labels);
             s.class_count = class_count;
             s.channels = channels;
             s.length = channels > 0
                            ? static_cast<int>(s.features.cols) / channels
                            : 0;
             s.name = std::move(name);
             s.validate();
             return s;
           }),
           py::arg("features"), py::arg("labels") = std::vector<int>{},
           py::arg("class_count") = 0, py::arg("channels") = 1,
           py::arg("name") = "")
      .def_property_readonly(
          "features", [](const SampleSet& s) { return matrix_to_numpy(s.features); })
      .def_readonly("labels", &SampleSet::labels)
      .def_readonly("class_count", &SampleSet::class_count)
      .def_readonly("channels", &SampleSet::channels)
      .def_readonly("length", &SampleSet::length)
      .def_readonly("name", &SampleSet::name)
      .def("__len__", &SampleSet::size);

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def_property_readonly("class_count", &NetworkSpec::class_count)
      .def("__eq__", [](const NetworkSpec& a, const NetworkSpec& b) {
        return a == b;
      });

  py::class_<NetworkParams>(m, "NetworkParams")
      .def_readonly("spec", &NetworkParams::spec)
      .def_readonly("seed", &NetworkParams::seed)
      .def_property_readonly("param_count", &NetworkParams::param_count);

  m.def("preset_network", &preset_network, py::arg("name"));

  m.def(
      "init_network",
      [](const NetworkSpec& spec, std::uint64_t seed) {
        return init_network(spec, seed);
      },
      py::arg("spec"), py::arg("seed"));

  m.def(
      "predict_proba",
      [](const NetworkParams& params, py::array_t<double> batch) {
        return matrix_to_numpy(predict_proba(params, matrix_from_numpy(batch)));
      },
      py::arg("params"), py::arg("batch"));

  m.def(
      "predict",
      [](const NetworkParams& params, py::array_t<double> batch) {
        return predict(params, matrix_from_numpy(batch));
      },
      py::arg("params"), py::arg("batch"));

  m.def(
      "train_source",
      [](const NetworkSpec& spec, const SampleSet& source, std::int64_t budget,
         std::uint64_t seed, std::size_t batch_size, double learning_rate) {
        return train_source(spec, source, budget, seed, batch_size,
                            learning_rate);
      },
      py::arg("spec"), py::arg("source"), py::arg("budget"), py::arg("seed"),
      py::arg("batch_size") = 128, py::arg("learning_rate") = 0.001);

  py::class_<StageRecord>(m, "StageRecord")
      .def_readonly("stage", &StageRecord::stage)
      .def_readonly("coverage", &StageRecord::coverage)
      .def_readonly("emp_risk", &StageRecord::emp_risk)
      .def_readonly("true_risk", &StageRecord::true_risk)
      .def_readonly("delta", &StageRecord::delta)
      .def_readonly("delta_shell", &StageRecord::delta_shell)
      .def_readonly("mean_entropy", &StageRecord::mean_entropy)
      .def_readonly("test_acc", &StageRecord::test_acc)
      .def_readonly("test_kappa", &StageRecord::test_kappa)
      .def_readonly("full_target_true_risk", &StageRecord::full_target_true_risk);

  py::class_<AdaptationState>(m, "AdaptationState")
      .def_readonly("labeled", &AdaptationState::labeled)
      .def_readonly("provenance", &AdaptationState::provenance)
      .def_readonly("stages_completed", &AdaptationState::stages_completed)
      .def_readonly("history", &AdaptationState::history)
      .def_property_readonly("pseudo_labels", [](const AdaptationState& s) {
        return matrix_to_numpy(s.pseudo_labels);
      });

  m.def(
      "sico_adapt",
      [](const NetworkParams& source_params, const SampleSet& target,
         const std::string& criterion, int m_initial, int m_subsequent,
         double p, double threshold, const std::string& label_mode,
         double stage_epochs, std::int64_t stage_iterations,
         std::size_t batch_size, double learning_rate, int max_stages,
         std::uint64_t seed, bool evaluate, const SampleSet* test_set) {
        AdaptationConfig cfg;
        cfg.criterion =
            criterion_from_args(criterion, m_initial, m_subsequent, p, threshold);
        cfg.label_mode = label_mode == "soft" ? LabelMode::Soft : LabelMode::Hard;
        cfg.stage_budget = stage_iterations > 0
                               ? StageBudget::iterations(stage_iterations)
                               : StageBudget::epochs(stage_epochs);
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.max_stages = max_stages;
        cfg.seed_base = seed;
        if (evaluate) {
          cfg.evaluator = make_stage_evaluator(target, test_set);
        }
        AdaptationResult res = sico_adapt(source_params, target, cfg);
        return py::make_tuple(res.target_params, res.state);
      },
      py::arg("source_params"), py::arg("target"),
      py::arg("criterion") = "top_m", py::arg("m_initial") = 50,
      py::arg("m_subsequent") = 25, py::arg("p") = 0.1,
      py::arg("threshold") = 0.95, py::arg("label_mode") = "hard",
      py::arg("stage_epochs") = 20.0, py::arg("stage_iterations") = 0,
      py::arg("batch_size") = 64, py::arg("learning_rate") = 0.001,
      py::arg("max_stages") = 1 << 20, py::arg("seed") = 0,
      py::arg("evaluate") = false, py::arg("test_set") = nullptr);

  m.def(
      "select",
      [](py::array_t<double> probabilities, const std::string& criterion,
         int m_initial, int m_subsequent, double p, double threshold,
         bool initial_stage) {
        const Selection sel = select(
            matrix_from_numpy(probabilities),
            criterion_from_args(criterion, m_initial, m_subsequent, p, threshold),
            initial_stage ? SelectionStage::Initial : SelectionStage::Subsequent);
        return py::make_tuple(sel.indices, sel.labels, sel.per_class_counts);
      },
      py::arg("probabilities"), py::arg("criterion") = "top_m",
      py::arg("m_initial") = 1, py::arg("m_subsequent") = 1, py::arg("p") = 0.1,
      py::arg("threshold") = 0.95, py::arg("initial_stage") = true);

  m.def("entropy_of", [](py::array_t<double> probabilities) {
    const EntropyResult r = entropy_of(matrix_from_numpy(probabilities));
    return py::make_tuple(r.per_row, r.mean);
  });

  m.def(
      "pseudo_label",
      [](const NetworkParams& params, py::array_t<double> subset,
         const std::string& mode) {
        return matrix_to_numpy(pseudo_label(
            params, matrix_from_numpy(subset),
            mode == "soft" ? LabelMode::Soft : LabelMode::Hard));
      },
      py::arg("params"), py::arg("subset"), py::arg("mode") = "hard");

  m.def(
      "empirical_risk",
      [](const NetworkParams& params, py::array_t<double> subset,
         py::array_t<double> pseudo_labels) {
        return empirical_risk(params, matrix_from_numpy(subset),
                              matrix_from_numpy(pseudo_labels));
      },
      py::arg("params"), py::arg("subset"), py::arg("pseudo_labels"));

  m.def(
      "delta",
      [](const NetworkParams& params, py::array_t<double> subset,
         py::array_t<double> pseudo_labels, const std::vector<int>& true_labels) {
        const DeltaResult r = delta(params, matrix_from_numpy(subset),
                                    matrix_from_numpy(pseudo_labels), true_labels);
        return py::make_tuple(r.delta, r.delta_norm, r.mismatches);
      },
      py::arg("params"), py::arg("subset"), py::arg("pseudo_labels"),
      py::arg("true_labels"));

  m.def(
      "confusion",
      [](const std::vector<int>& truth, const std::vector<int>& pred,
         int class_count) {
        const ConfusionCounts c = confusion(truth, pred, class_count);
        py::array_t<std::size_t> arr({c.classes, c.classes});
        auto view = arr.mutable_unchecked<2>();
        for (std::size_t i = 0; i < c.classes; ++i) {
          for (std::size_t j = 0; j < c.classes; ++j) {
            view(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) =
                c.at(i, j);
          }
        }
        return arr;
      },
      py::arg("true_labels"), py::arg("predictions"), py::arg("class_count"));

  m.def(
      "kappa",
      [](py::array_t<std::size_t> counts) {
        const py::buffer_info info = counts.request();
        if (info.ndim != 2 || info.shape[0] != info.shape[1]) {
          throw InputError("kappa: expected a square matrix");
        }
        ConfusionCounts c(static_cast<std::size_t>(info.shape[0]));
        const auto view = counts.unchecked<2>();
        for (py::ssize_t i = 0; i < info.shape[0]; ++i) {
          for (py::ssize_t j = 0; j < info.shape[1]; ++j) {
            c.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                view(i, j);
          }
        }
        return kappa(c);
      },
      py::arg("counts"));

  m.def(
      "sensitivity_specificity",
      [](std::size_t tn, std::size_t fp, std::size_t fn, std::size_t tp) {
        ConfusionCounts c(2);
        c.at(0, 0) = tn;
        c.at(0, 1) = fp;
        c.at(1, 0) = fn;
        c.at(1, 1) = tp;
        const SensSpec s = sensitivity_specificity(c);
        return py::make_tuple(s.sensitivity, s.specificity);
      },
      py::arg("tn"), py::arg("fp"), py::arg("fn"), py::arg("tp"));

  m.def(
      "paired_t_one_tailed",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const TTestResult r = paired_t_one_tailed(a, b);
        return py::make_tuple(r.t, r.critical, r.significant);
      },
      py::arg("a"), py::arg("b"));

  m.def("summarize", [](const std::vector<double>& values) {
    const RunSummary s = summarize(values);
    return py::make_tuple(s.mean, s.se_defined ? s.standard_error
                                               : std::nan(""));
  });

  m.def(
      "synth_shifted_gaussians",
      [](int n_per_class, int class_count, double shift_x, double shift_y,
         double rotation, double noise_sigma, std::uint64_t seed) {
        GaussianShiftSpec spec{n_per_class, class_count, shift_x, shift_y,
                               rotation,    noise_sigma, seed};
        auto [source, target] = synth_shifted_gaussians(spec);
        return py::make_tuple(source, target);
      },
      py::arg("n_per_class") = 300, py::arg("class_count") = 2,
      py::arg("shift_x") = 0.0, py::arg("shift_y") = 0.0,
      py::arg("rotation") = 0.0, py::arg("noise_sigma") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "synth_apnea_like",
      [](int n_windows, int window_len, std::uint64_t seed,
         double amplitude_scale, double extra_noise, double baseline_drift) {
        ApneaSynthSpec spec;
        spec.n_windows = n_windows;
        spec.window_len = window_len;
        spec.seed = seed;
        spec.amplitude_scale = amplitude_scale;
        spec.extra_noise = extra_noise;
        spec.baseline_drift = baseline_drift;
        return synth_apnea_like(spec);
      },
      py::arg("n_windows") = 200, py::arg("window_len") = 60,
      py::arg("seed") = 0, py::arg("amplitude_scale") = 1.0,
      py::arg("extra_noise") = 0.0, py::arg("baseline_drift") = 0.0);

  m.def(
      "split",
      [](const SampleSet& set, double test_fraction, std::uint64_t seed) {
        auto [train, test] = split(set, SplitSpec{test_fraction, seed});
        return py::make_tuple(train, test);
      },
      py::arg("set"), py::arg("test_fraction"), py::arg("seed") = 0);

  m.def("rescale_pixels", &rescale_pixels, py::arg("set"));
  m.def("resize_and_gray", &resize_and_gray, py::arg("set"),
        py::arg("target_side"));
  m.def("standardize_per_signal", &standardize_per_signal, py::arg("set"));
  m.def("downsample_to_1hz",
        py::overload_cast<const SampleSet&, int>(&downsample_to_1hz),
        py::arg("set"), py::arg("source_hz"));
  m.def("rebalance", &rebalance, py::arg("set"), py::arg("seed") = 0);
  m.def("merge_30s_labels", &merge_30s_labels, py::arg("first_half"),
        py::arg("second_half"));
  m.def("subsample", &subsample, py::arg("set"), py::arg("n"),
        py::arg("seed") = 0);
  m.def("accuracy_on", &accuracy_on, py::arg("params"), py::arg("set"));

  m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"));
  m.def("save_idx", &save_idx, py::arg("set"), py::arg("images_path"),
        py::arg("labels_path"));
  m.def("load_signal_csv", &load_signal_csv, py::arg("path"));
  m.def("save_signal_csv", &save_signal_csv, py::arg("set"), py::arg("path"));

  m.def("save_checkpoint",
        py::overload_cast<const NetworkParams&, const std::string&>(
            &save_checkpoint),
        py::arg("params"), py::arg("path"));
  m.def("load_checkpoint",
        py::overload_cast<const std::string&>(&load_checkpoint),
        py::arg("path"));
  m.def("checkpoint_string", &checkpoint_string, py::arg("params"));
}
