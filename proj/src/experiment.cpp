#include "sico/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sico/checkpoint.hpp"
#include "sico/dataset.hpp"
#include "sico/idx.hpp"
#include "sico/metrics.hpp"
#include "sico/signal_csv.hpp"
#include "sico/synth.hpp"

namespace sico {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// KvConfig
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KvConfig KvConfig::parse_string(const std::string& text,
                                const std::string& name) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw ConfigError(name + " line " + std::to_string(line_no) +
                          ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + " line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(name + " line " + std::to_string(line_no) +
                        ": empty key");
    }
    const std::string full = section.empty() ? key : section + "." + key;
    cfg.entries_[full] = value;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_string(buf.str(), path);
}

bool KvConfig::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string KvConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string KvConfig::get_or(const std::string& key,
                             const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long KvConfig::get_int(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: '" + v + "'");
  }
}

long KvConfig::get_int_or(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double KvConfig::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + v + "'");
  }
}

double KvConfig::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool KvConfig::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + ": not a boolean: '" + v + "'");
}

void KvConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string KvConfig::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= 0x1Eu;
    h *= 0x100000001b3ull;
  };
  for (const auto& [k, v] : entries_) {
    mix(k);
    mix(v);
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

NetworkSpec preset_network(const std::string& name) {
  NetworkSpec spec;
  if (name == "gauss-shift") {
    spec.input = {1, 2};
    spec.layers = {LayerSpec::dense(2, 16),  LayerSpec::relu(),
                   LayerSpec::dense(16, 16), LayerSpec::relu(),
                   LayerSpec::dense(16, 2),  LayerSpec::softmax()};
  } else if (name == "digits-small") {
    spec.input = {1, 784};
    spec.layers = {LayerSpec::dense(784, 128), LayerSpec::relu(),
                   LayerSpec::dropout(0.2),    LayerSpec::dense(128, 64),
                   LayerSpec::relu(),          LayerSpec::dense(64, 10),
                   LayerSpec::softmax()};
  } else if (name == "apnea-synth") {
    spec.input = {1, 60};
    spec.layers = {LayerSpec::conv1d(1, 8, 4),   LayerSpec::relu(),
                   LayerSpec::maxpool1d(2),      LayerSpec::conv1d(8, 16, 4),
                   LayerSpec::relu(),            LayerSpec::maxpool1d(2),
                   LayerSpec::conv1d(16, 32, 4), LayerSpec::relu(),
                   LayerSpec::maxpool1d(2),      LayerSpec::dense(128, 16),
                   LayerSpec::relu(),            LayerSpec::dropout(0.3),
                   LayerSpec::dense(16, 2),      LayerSpec::softmax()};
  } else {
    throw ConfigError("unknown network preset: " + name);
  }
  spec.shape_walk();
  return spec;
}

const char* metric_name(MetricKind kind) {
  return kind == MetricKind::Accuracy ? "accuracy" : "kappa";
}

// ---------------------------------------------------------------------------
// ExperimentConfig
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
  ExperimentConfig cfg;
  cfg.raw = kv;
  cfg.name = kv.get_or("experiment.name", "experiment");
  const std::string metric = kv.get_or("experiment.metric", "accuracy");
  if (metric == "accuracy") {
    cfg.metric = MetricKind::Accuracy;
  } else if (metric == "kappa") {
    cfg.metric = MetricKind::Kappa;
  } else {
    throw ConfigError("experiment.metric must be accuracy or kappa");
  }
  cfg.repetitions = static_cast<int>(kv.get_int_or("experiment.repetitions", 5));
  if (cfg.repetitions < 1) throw ConfigError("experiment.repetitions must be >= 1");
  cfg.base_seed = static_cast<std::uint64_t>(
      kv.get_int_or("experiment.base_seed", 42));

  cfg.network_preset = kv.get("network.preset");
  preset_network(cfg.network_preset);  // validate the name early

  cfg.data_kind = kv.get("data.kind");

  cfg.source_budget = kv.get_int_or("train.source_budget", 500);
  if (cfg.source_budget < 1) throw ConfigError("train.source_budget must be >= 1");
  cfg.batch_size = static_cast<std::size_t>(kv.get_int_or("train.batch_size", 128));
  cfg.learning_rate = kv.get_double_or("train.learning_rate", 0.001);

  const std::string crit = kv.get_or("adapt.criterion", "top_m");
  if (crit == "top_m") {
    cfg.criterion = CriterionSpec::top_m(
        static_cast<int>(kv.get_int("adapt.m_initial")),
        static_cast<int>(kv.get_int("adapt.m_subsequent")));
  } else if (crit == "top_percent") {
    cfg.criterion = CriterionSpec::top_percent(kv.get_double("adapt.p"));
  } else if (crit == "threshold") {
    cfg.criterion = CriterionSpec::threshold_at(kv.get_double("adapt.threshold"));
  } else {
    throw ConfigError("adapt.criterion must be top_m, top_percent or threshold");
  }
  cfg.criterion.validate();

  const std::string mode = kv.get_or("adapt.label_mode", "hard");
  if (mode == "hard") {
    cfg.label_mode = LabelMode::Hard;
  } else if (mode == "soft") {
    cfg.label_mode = LabelMode::Soft;
  } else {
    throw ConfigError("adapt.label_mode must be hard or soft");
  }

  if (kv.has("adapt.stage_iterations")) {
    cfg.stage_budget = StageBudget::iterations(kv.get_int("adapt.stage_iterations"));
  } else {
    cfg.stage_budget = StageBudget::epochs(kv.get_double_or("adapt.stage_epochs", 20.0));
  }
  cfg.adapt_batch_size = static_cast<std::size_t>(
      kv.get_int_or("adapt.batch_size", static_cast<long>(cfg.batch_size)));
  cfg.adapt_learning_rate =
      kv.get_double_or("adapt.learning_rate", cfg.learning_rate);
  cfg.max_stages = static_cast<int>(kv.get_int_or("adapt.max_stages", 1 << 20));
  if (cfg.max_stages < 1) throw ConfigError("adapt.max_stages must be >= 1");
  cfg.warm_start = kv.get_bool_or("adapt.warm_start", false);
  return cfg;
}

// ---------------------------------------------------------------------------
// Data loading
// ---------------------------------------------------------------------------

namespace {

std::string resolve_path(const std::string& path, const std::string& data_root) {
  fs::path p(path);
  if (p.is_absolute() || data_root.empty()) return path;
  return (fs::path(data_root) / p).string();
}

DomainData split_domain(SampleSet all, double test_fraction, std::uint64_t seed) {
  auto [train, test] = split(all, SplitSpec{test_fraction, seed});
  return DomainData{std::move(train), std::move(test)};
}

DomainData load_gaussians(const ExperimentConfig& cfg, DataRole role) {
  const KvConfig& kv = cfg.raw;
  GaussianShiftSpec spec;
  spec.n_per_class = static_cast<int>(kv.get_int_or("data.n_per_class", 300));
  spec.class_count = static_cast<int>(kv.get_int_or("data.class_count", 2));
  spec.shift_x = kv.get_double_or("data.shift_x", 0.0);
  spec.shift_y = kv.get_double_or("data.shift_y", 0.0);
  spec.rotation = kv.get_double_or("data.rotation", 0.0);
  spec.noise_sigma = kv.get_double_or("data.noise_sigma", 1.0);
  spec.seed = static_cast<std::uint64_t>(
      kv.get_int_or("data.seed", static_cast<long>(cfg.base_seed)));
  auto [source, target] = synth_shifted_gaussians(spec);
  SampleSet chosen = role == DataRole::Source ? std::move(source) : std::move(target);
  return split_domain(std::move(chosen),
                      kv.get_double_or("data.test_fraction", 0.25),
                      spec.seed + 17);
}

DomainData load_apnea(const ExperimentConfig& cfg, DataRole role) {
  const KvConfig& kv = cfg.raw;
  ApneaSynthSpec spec;
  spec.n_windows = static_cast<int>(kv.get_int_or("data.n_windows", 400));
  spec.window_len = static_cast<int>(kv.get_int_or("data.window_len", 60));
  spec.seed = static_cast<std::uint64_t>(
      kv.get_int_or("data.seed", static_cast<long>(cfg.base_seed)));
  if (role == DataRole::Target) {
    spec.seed += 1;
    spec.amplitude_scale = kv.get_double_or("data.target_amp_scale", 0.65);
    spec.extra_noise = kv.get_double_or("data.target_extra_noise", 0.05);
    spec.baseline_drift = kv.get_double_or("data.target_drift", 0.4);
  }
  SampleSet all = synth_apnea_like(spec);
  DomainData dom = split_domain(std::move(all),
                                kv.get_double_or("data.test_fraction", 0.25),
                                spec.seed + 17);
  if (kv.get_bool_or("data.standardize", true)) {
    const ChannelStats stats = standardize_fit(dom.train);
    dom.train = standardize_apply(dom.train, stats);
    dom.test = standardize_apply(dom.test, stats);
  }
  return dom;
}

SampleSet preprocess_digits(SampleSet set, const KvConfig& kv) {
  const long resize_to = kv.get_int_or("data.resize_to", 0);
  if (resize_to > 0) {
    const int side = static_cast<int>(std::llround(
        std::sqrt(static_cast<double>(set.length))));
    if (side != resize_to || set.channels != 1) {
      set = resize_and_gray(set, static_cast<int>(resize_to));
    }
  }
  if (kv.get_bool_or("data.rescale", true)) set = rescale_pixels(set);
  return set;
}

DomainData load_idx_domain(const ExperimentConfig& cfg, DataRole role,
                           const std::string& data_root) {
  const KvConfig& kv = cfg.raw;
  const std::string prefix = role == DataRole::Source ? "data.source" : "data.target";
  const std::string images = resolve_path(kv.get(prefix + "_images"), data_root);
  const std::string labels = resolve_path(kv.get(prefix + "_labels"), data_root);
  SampleSet train = preprocess_digits(load_idx(images, labels), kv);
  train.class_count = std::max(train.class_count,
                               static_cast<int>(kv.get_int_or("data.class_count", 10)));

  DomainData dom;
  if (kv.has(prefix + "_test_images")) {
    SampleSet test = preprocess_digits(
        load_idx(resolve_path(kv.get(prefix + "_test_images"), data_root),
                 resolve_path(kv.get(prefix + "_test_labels"), data_root)),
        kv);
    test.class_count = train.class_count;
    dom.train = std::move(train);
    dom.test = std::move(test);
  } else {
    dom = split_domain(std::move(train),
                       kv.get_double_or("data.test_fraction", 0.2),
                       cfg.base_seed + 17);
  }

  const std::string subset_key =
      role == DataRole::Source ? "data.source_subset" : "data.target_subset";
  const long cap = kv.get_int_or(subset_key, 0);
  if (cap > 0) {
    dom.train = subsample(dom.train, static_cast<std::size_t>(cap),
                          cfg.base_seed + 29);
    const long test_cap = kv.get_int_or(subset_key + "_test", cap / 4);
    if (test_cap > 0) {
      dom.test = subsample(dom.test, static_cast<std::size_t>(test_cap),
                           cfg.base_seed + 31);
    }
  }
  return dom;
}

DomainData load_signal_csv_domain(const ExperimentConfig& cfg, DataRole role,
                                  const std::string& data_root) {
  const KvConfig& kv = cfg.raw;
  const std::string key =
      role == DataRole::Source ? "data.source_csv" : "data.target_csv";
  SampleSet all = load_signal_csv(resolve_path(kv.get(key), data_root));
  DomainData dom = split_domain(std::move(all),
                                kv.get_double_or("data.test_fraction", 0.25),
                                cfg.base_seed + 17);
  if (kv.get_bool_or("data.standardize", true)) {
    const ChannelStats stats = standardize_fit(dom.train);
    dom.train = standardize_apply(dom.train, stats);
    dom.test = standardize_apply(dom.test, stats);
  }
  return dom;
}

}  // namespace

DomainData load_domain(const ExperimentConfig& cfg, DataRole role,
                       const std::string& data_root) {
  DomainData dom;
  if (cfg.data_kind == "synth-gaussians") {
    dom = load_gaussians(cfg, role);
  } else if (cfg.data_kind == "synth-apnea") {
    dom = load_apnea(cfg, role);
  } else if (cfg.data_kind == "idx") {
    dom = load_idx_domain(cfg, role, data_root);
  } else if (cfg.data_kind == "signal-csv") {
    dom = load_signal_csv_domain(cfg, role, data_root);
  } else {
    throw ConfigError("data.kind must be synth-gaussians, synth-apnea, idx or "
                      "signal-csv");
  }
  if (role == DataRole::Target &&
      !cfg.raw.get_bool_or("data.use_target_labels", true)) {
    dom.train.labels.clear();  // label-free adaptation path
  }
  return dom;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalRow evaluate_on(const NetworkParams& params, const SampleSet& test_set) {
  EvalRow row;
  if (!test_set.labeled()) return row;
  const std::vector<int> pred = predict(params, test_set.features);
  const ConfusionCounts counts = confusion(test_set.labels, pred,
                                           test_set.class_count);
  row.accuracy = accuracy(counts);
  try {
    row.kappa = kappa(counts);
  } catch (const MetricError&) {
  }
  if (test_set.class_count == 2) {
    try {
      const SensSpec ss = sensitivity_specificity(counts);
      row.sensitivity = ss.sensitivity;
      row.specificity = ss.specificity;
    } catch (const MetricError&) {
    }
  }
  return row;
}

// ---------------------------------------------------------------------------
// CSV + manifest helpers
// ---------------------------------------------------------------------------

namespace {

std::string csv_num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

double metric_value(const EvalRow& row, MetricKind kind) {
  return kind == MetricKind::Accuracy ? row.accuracy : row.kappa;
}

json eval_to_json(const EvalRow& row) {
  auto num = [](double v) {
    return std::isnan(v) ? json() : json(v);
  };
  return json{{"accuracy", num(row.accuracy)},
              {"kappa", num(row.kappa)},
              {"sensitivity", num(row.sensitivity)},
              {"specificity", num(row.specificity)}};
}

EvalRow eval_from_json(const json& j) {
  EvalRow row;
  auto num = [](const json& v) { return v.is_null() ? kNaN : v.get<double>(); };
  row.accuracy = num(j.at("accuracy"));
  row.kappa = num(j.at("kappa"));
  row.sensitivity = num(j.at("sensitivity"));
  row.specificity = num(j.at("specificity"));
  return row;
}

void write_results_header(std::ostream& out) {
  out << "experiment,repetition,split,accuracy,kappa,sensitivity,specificity\n";
}

void write_result_row(std::ostream& out, const std::string& experiment,
                      int repetition, const std::string& split,
                      const EvalRow& row) {
  out << experiment << ',' << repetition << ',' << split << ','
      << csv_num(row.accuracy) << ',' << csv_num(row.kappa) << ','
      << csv_num(row.sensitivity) << ',' << csv_num(row.specificity) << '\n';
}

struct SeriesSummary {
  RunSummary summary;
  bool available = false;
};

SeriesSummary summarize_series(const std::vector<double>& values) {
  SeriesSummary s;
  for (double v : values) {
    if (std::isnan(v)) return s;
  }
  if (values.empty()) return s;
  s.summary = summarize(values);
  s.available = true;
  return s;
}

struct PhaseClock {
  using clock = std::chrono::steady_clock;
  clock::time_point start = clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(clock::now() - start).count();
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path.string());
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string data_root;
  long seed_override = -1;
};

ExperimentConfig load_config(CommonArgs& args) {
  KvConfig kv = KvConfig::parse_file(args.config_path);
  if (args.seed_override >= 0) {
    kv.set("experiment.base_seed", std::to_string(args.seed_override));
  }
  ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
  if (args.out_dir.empty()) {
    args.out_dir = kv.get_or("experiment.out_dir", "runs/" + cfg.name);
  }
  if (args.data_root.empty()) {
    if (const char* env = std::getenv("SICO_DATA_ROOT")) args.data_root = env;
  }
  return cfg;
}

int cmd_train_source(CommonArgs args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(args);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }

  DomainData source;
  try {
    source = load_domain(cfg, DataRole::Source, args.data_root);
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }

  const NetworkSpec spec = preset_network(cfg.network_preset);
  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir / "checkpoints");

  PhaseClock total;
  json reps = json::array();
  std::ofstream results = open_out(out_dir / "results_source.csv");
  write_results_header(results);

  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed = cfg.repetition_seed(r);
    PhaseClock phase;
    const NetworkParams h_src = train_source(spec, source.train,
                                             cfg.source_budget, seed,
                                             cfg.batch_size, cfg.learning_rate);
    const EvalRow eval = evaluate_on(h_src, source.test);
    // Manifest paths are relative to the manifest itself, so the run
    // directory can be moved or read from any working directory.
    const fs::path ckpt_rel =
        fs::path("checkpoints") / ("h_src_r" + std::to_string(r) + ".ckpt");
    save_checkpoint(h_src, (out_dir / ckpt_rel).string());
    write_result_row(results, cfg.name, r, "hsrc_on_src", eval);
    err << "rep " << r << ": trained h_src in " << csv_num(phase.elapsed())
        << "s, " << metric_name(cfg.metric) << " = "
        << csv_num(metric_value(eval, cfg.metric)) << '\n';

    reps.push_back(json{{"repetition", r},
                        {"seed", seed},
                        {"checkpoint", ckpt_rel.string()},
                        {"hsrc_on_src", eval_to_json(eval)},
                        {"wall_clock", phase.elapsed()}});
  }
  results.close();

  json manifest{{"kind", "train-source"},
                {"experiment", cfg.name},
                {"metric", metric_name(cfg.metric)},
                {"network_preset", cfg.network_preset},
                {"config_digest", cfg.raw.digest()},
                {"repetitions", reps},
                {"results_csv", "results_source.csv"},
                {"wall_clock", json{{"total", total.elapsed()}}}};
  const fs::path manifest_path = out_dir / "source_manifest.json";
  open_out(manifest_path) << manifest.dump(2) << '\n';
  out << manifest_path.string() << '\n';
  return 0;
}

struct SourceRef {
  std::vector<std::string> checkpoints;  // per repetition (or one shared)
  std::vector<EvalRow> source_evals;     // empty when unknown
  std::string manifest_path;
};

SourceRef resolve_source(const std::string& source_arg, int repetitions) {
  SourceRef ref;
  if (source_arg.ends_with(".json")) {
    std::ifstream f(source_arg);
    if (!f) throw InputError("cannot open source manifest: " + source_arg);
    json manifest = json::parse(f);
    if (manifest.at("kind") != "train-source") {
      throw InputError("not a train-source manifest: " + source_arg);
    }
    ref.manifest_path = source_arg;
    const fs::path base = fs::path(source_arg).parent_path();
    for (const json& rep : manifest.at("repetitions")) {
      fs::path ckpt(rep.at("checkpoint").get<std::string>());
      if (ckpt.is_relative()) ckpt = base / ckpt;
      ref.checkpoints.push_back(ckpt.string());
      ref.source_evals.push_back(eval_from_json(rep.at("hsrc_on_src")));
    }
    if (static_cast<int>(ref.checkpoints.size()) < repetitions) {
      throw InputError("source manifest has fewer repetitions than the config");
    }
  } else {
    ref.checkpoints.assign(static_cast<std::size_t>(repetitions), source_arg);
  }
  return ref;
}

int cmd_adapt(CommonArgs args, const std::string& source_arg, std::ostream& out,
              std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(args);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  }

  SourceRef source_ref;
  try {
    source_ref = resolve_source(source_arg, cfg.repetitions);
  } catch (const std::exception& e) {
    err << "source error: " << e.what() << '\n';
    return 2;
  }

  const NetworkSpec spec = preset_network(cfg.network_preset);

  DomainData target;
  try {
    target = load_domain(cfg, DataRole::Target, args.data_root);
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir / "checkpoints");
  fs::create_directories(out_dir / "curves");

  PhaseClock total;
  json reps = json::array();
  std::ofstream results = open_out(out_dir / "results.csv");
  write_results_header(results);

  std::vector<double> src_series, tgt_series;
  const bool have_source_evals = !source_ref.source_evals.empty();

  for (int r = 0; r < cfg.repetitions; ++r) {
    const std::uint64_t seed = cfg.repetition_seed(r);

    NetworkParams h_src;
    try {
      h_src = load_checkpoint(source_ref.checkpoints[static_cast<std::size_t>(r)]);
    } catch (const std::exception& e) {
      err << "checkpoint error: " << e.what() << '\n';
      return 2;
    }
    if (!(h_src.spec == spec)) {
      err << "architecture mismatch: checkpoint does not match preset '"
          << cfg.network_preset << "'\n";
      return 3;
    }

    PhaseClock phase;
    AdaptationConfig acfg;
    acfg.criterion = cfg.criterion;
    acfg.label_mode = cfg.label_mode;
    acfg.stage_budget = cfg.stage_budget;
    acfg.batch_size = cfg.adapt_batch_size;
    acfg.learning_rate = cfg.adapt_learning_rate;
    acfg.max_stages = cfg.max_stages;
    acfg.warm_start = cfg.warm_start;
    acfg.seed_base = seed + 1;
    acfg.evaluator = make_stage_evaluator(target.train, &target.test);
    if (cfg.raw.get_bool_or("adapt.save_stage_checkpoints", false)) {
      const fs::path stage_dir = out_dir / "checkpoints";
      const StageEvaluator inner = acfg.evaluator;
      acfg.evaluator = [inner, stage_dir, r](const StageContext& ctx) {
        save_checkpoint(ctx.classifier,
                        (stage_dir / ("h_stage_r" + std::to_string(r) + "_s" +
                                      std::to_string(ctx.stage) + ".ckpt"))
                            .string());
        return inner(ctx);
      };
    }

    AdaptationResult result;
    try {
      result = sico_adapt(h_src, target.train, acfg);
    } catch (const AdaptationError& e) {
      err << "adaptation failed: " << e.what() << '\n';
      return 2;
    }

    const EvalRow src_eval = evaluate_on(h_src, target.test);
    const EvalRow tgt_eval = evaluate_on(result.target_params, target.test);
    src_series.push_back(metric_value(src_eval, cfg.metric));
    tgt_series.push_back(metric_value(tgt_eval, cfg.metric));

    const fs::path ckpt_rel =
        fs::path("checkpoints") / ("h_tg_r" + std::to_string(r) + ".ckpt");
    save_checkpoint(result.target_params, (out_dir / ckpt_rel).string());
    const fs::path curves_rel =
        fs::path("curves") / ("stage_curves_r" + std::to_string(r) + ".csv");
    stage_curves_csv(result.state.history, (out_dir / curves_rel).string());

    if (have_source_evals) {
      write_result_row(results, cfg.name, r, "hsrc_on_src",
                       source_ref.source_evals[static_cast<std::size_t>(r)]);
    }
    write_result_row(results, cfg.name, r, "hsrc_on_tgt", src_eval);
    write_result_row(results, cfg.name, r, "htg_on_tgt", tgt_eval);

    err << "rep " << r << ": " << result.state.stages_completed
        << " stages, coverage " << result.state.labeled.size() << "/"
        << result.state.target_size << ", " << metric_name(cfg.metric) << " "
        << csv_num(metric_value(src_eval, cfg.metric)) << " -> "
        << csv_num(metric_value(tgt_eval, cfg.metric)) << " ("
        << csv_num(phase.elapsed()) << "s)\n";

    json rep_json{{"repetition", r},
                  {"seed", seed},
                  {"source_checkpoint",
                   source_ref.checkpoints[static_cast<std::size_t>(r)]},
                  {"target_checkpoint", ckpt_rel.string()},
                  {"stage_curves_csv", curves_rel.string()},
                  {"stages", result.state.stages_completed},
                  {"coverage", result.state.labeled.size()},
                  {"hsrc_on_tgt", eval_to_json(src_eval)},
                  {"htg_on_tgt", eval_to_json(tgt_eval)},
                  {"wall_clock", phase.elapsed()}};
    if (have_source_evals) {
      rep_json["hsrc_on_src"] =
          eval_to_json(source_ref.source_evals[static_cast<std::size_t>(r)]);
    }
    reps.push_back(std::move(rep_json));
  }
  results.close();

  // Summary: mean/SE per quantity, paired one-tailed t-test of h_tg vs h_src
  // on the target test set.
  const SeriesSummary src_sum = summarize_series(src_series);
  const SeriesSummary tgt_sum = summarize_series(tgt_series);
  TTestResult ttest;
  bool ttest_available = false;
  if (src_sum.available && tgt_sum.available && cfg.repetitions >= 2) {
    ttest = paired_t_one_tailed(tgt_series, src_series);
    ttest_available = true;
  }

  {
    std::ofstream summary = open_out(out_dir / "summary.csv");
    summary << "experiment,metric,quantity,mean,se,t,significant\n";
    auto row = [&](const std::string& metric, const std::string& quantity,
                   const SeriesSummary& s, bool with_t, double scale) {
      summary << cfg.name << ',' << metric << ',' << quantity << ',';
      if (s.available) {
        summary << csv_num(s.summary.mean * scale) << ','
                << csv_num(s.summary.se_defined ? s.summary.standard_error * scale
                                                : kNaN);
      } else {
        summary << "nan,nan";
      }
      if (with_t && ttest_available) {
        summary << ',' << csv_num(ttest.t) << ','
                << (ttest.significant ? "yes" : "no");
      } else {
        summary << ",,";
      }
      summary << '\n';
    };
    const std::string metric = metric_name(cfg.metric);
    SeriesSummary src_on_src;
    if (have_source_evals) {
      std::vector<double> v;
      for (int r = 0; r < cfg.repetitions; ++r) {
        v.push_back(metric_value(
            source_ref.source_evals[static_cast<std::size_t>(r)], cfg.metric));
      }
      src_on_src = summarize_series(v);
    }
    row(metric, "hsrc_on_src", src_on_src, false, 1.0);
    row(metric, "hsrc_on_tgt", src_sum, false, 1.0);
    row(metric, "htg_on_tgt", tgt_sum, true, 1.0);
    if (cfg.metric == MetricKind::Kappa) {
      row("kappa_x100", "hsrc_on_src", src_on_src, false, 100.0);
      row("kappa_x100", "hsrc_on_tgt", src_sum, false, 100.0);
      row("kappa_x100", "htg_on_tgt", tgt_sum, true, 100.0);
    }
  }

  json manifest{{"kind", "adapt"},
                {"experiment", cfg.name},
                {"metric", metric_name(cfg.metric)},
                {"network_preset", cfg.network_preset},
                {"config_digest", cfg.raw.digest()},
                {"repetitions", reps},
                {"results_csv", "results.csv"},
                {"summary_csv", "summary.csv"},
                {"wall_clock", json{{"total", total.elapsed()}}}};
  if (!source_ref.manifest_path.empty()) {
    manifest["source_manifest"] = source_ref.manifest_path;
  }
  if (ttest_available) {
    manifest["t_test"] = json{{"metric", metric_name(cfg.metric)},
                              {"t", ttest.t},
                              {"critical", ttest.critical},
                              {"significant", ttest.significant}};
  }
  const fs::path manifest_path = out_dir / "adapt_manifest.json";
  open_out(manifest_path) << manifest.dump(2) << '\n';
  out << manifest_path.string() << '\n';
  return 0;
}

struct SynthArgs {
  std::string kind;
  std::string out_dir;
  std::string name = "synth";
  long n = 200;
  long seed = 0;
  long window_len = 60;
  double shift_x = 1.5, shift_y = 1.5, rotation = 0.9, noise = 1.0;
  double target_amp_scale = 0.65, target_extra_noise = 0.05, target_drift = 0.4;
};

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  (void)out;  // synth prints nothing on stdout
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  const fs::path src_path = dir / (args.name + "_source.csv");
  const fs::path tgt_path = dir / (args.name + "_target.csv");

  if (args.kind == "gaussians") {
    GaussianShiftSpec spec;
    spec.class_count = 2;
    spec.n_per_class = static_cast<int>(args.n / 2);
    spec.shift_x = args.shift_x;
    spec.shift_y = args.shift_y;
    spec.rotation = args.rotation;
    spec.noise_sigma = args.noise;
    spec.seed = static_cast<std::uint64_t>(args.seed);
    auto [source, target] = synth_shifted_gaussians(spec);
    save_signal_csv(source, src_path.string());
    save_signal_csv(target, tgt_path.string());
  } else if (args.kind == "apnea") {
    ApneaSynthSpec spec;
    spec.n_windows = static_cast<int>(args.n);
    spec.window_len = static_cast<int>(args.window_len);
    spec.seed = static_cast<std::uint64_t>(args.seed);
    save_signal_csv(synth_apnea_like(spec), src_path.string());
    spec.seed += 1;
    spec.amplitude_scale = args.target_amp_scale;
    spec.extra_noise = args.target_extra_noise;
    spec.baseline_drift = args.target_drift;
    save_signal_csv(synth_apnea_like(spec), tgt_path.string());
  } else {
    err << "unknown synth kind: " << args.kind << '\n';
    return 1;
  }
  err << "wrote " << src_path.string() << " and " << tgt_path.string() << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& manifests,
               const std::string& out_path, std::ostream& out,
               std::ostream& err) {
  struct Line {
    std::string experiment, metric;
    SeriesSummary src_src, src_tgt, tgt_tgt;
    bool ttest_available = false;
    TTestResult ttest;
  };
  std::vector<Line> lines;
  std::string metric_kind;

  for (const std::string& path : manifests) {
    std::ifstream f(path);
    if (!f) {
      err << "cannot open manifest: " << path << '\n';
      return 2;
    }
    json manifest;
    try {
      manifest = json::parse(f);
    } catch (const std::exception& e) {
      err << "bad manifest " << path << ": " << e.what() << '\n';
      return 2;
    }
    if (manifest.value("kind", "") != "adapt") {
      err << "not an adapt manifest: " << path << '\n';
      return 2;
    }
    const std::string metric = manifest.at("metric").get<std::string>();
    if (metric_kind.empty()) {
      metric_kind = metric;
    } else if (metric_kind != metric) {
      err << "conflicting metric kinds: " << metric_kind << " vs " << metric
          << " (" << path << ")\n";
      return 4;
    }
    const MetricKind kind =
        metric == "accuracy" ? MetricKind::Accuracy : MetricKind::Kappa;

    Line line;
    line.experiment = manifest.at("experiment").get<std::string>();
    line.metric = metric;
    std::vector<double> src_src, src_tgt, tgt_tgt;
    for (const json& rep : manifest.at("repetitions")) {
      if (rep.contains("hsrc_on_src")) {
        src_src.push_back(metric_value(eval_from_json(rep.at("hsrc_on_src")), kind));
      }
      src_tgt.push_back(metric_value(eval_from_json(rep.at("hsrc_on_tgt")), kind));
      tgt_tgt.push_back(metric_value(eval_from_json(rep.at("htg_on_tgt")), kind));
    }
    line.src_src = summarize_series(src_src);
    line.src_tgt = summarize_series(src_tgt);
    line.tgt_tgt = summarize_series(tgt_tgt);
    if (line.src_tgt.available && line.tgt_tgt.available && src_tgt.size() >= 2) {
      line.ttest = paired_t_one_tailed(tgt_tgt, src_tgt);
      line.ttest_available = true;
    }
    lines.push_back(std::move(line));
  }

  std::ofstream f = open_out(out_path);
  f << "experiment,metric,hsrc_src_mean,hsrc_src_se,hsrc_tgt_mean,hsrc_tgt_se,"
       "htg_tgt_mean,htg_tgt_se,t,significant\n";
  auto cell = [&](const SeriesSummary& s) {
    if (!s.available) {
      f << "nan,nan";
    } else {
      f << csv_num(s.summary.mean) << ','
        << csv_num(s.summary.se_defined ? s.summary.standard_error : kNaN);
    }
  };
  for (const Line& line : lines) {
    f << line.experiment << ',' << line.metric << ',';
    cell(line.src_src);
    f << ',';
    cell(line.src_tgt);
    f << ',';
    cell(line.tgt_tgt);
    if (line.ttest_available) {
      f << ',' << csv_num(line.ttest.t) << ','
        << (line.ttest.significant ? "yes" : "no") << '\n';
    } else {
      f << ",,\n";
    }
  }
  f.close();
  out << out_path << '\n';
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"SICO: source-free domain adaptation experiments"};
  app.require_subcommand(1);

  CommonArgs train_args, adapt_args;
  std::string adapt_source;
  SynthArgs synth_args;
  std::vector<std::string> report_manifests;
  std::string report_out;

  CLI::App* train = app.add_subcommand(
      "train-source", "Train and checkpoint the source classifiers");
  train->add_option("--config", train_args.config_path, "experiment config")
      ->required();
  train->add_option("--out", train_args.out_dir, "output directory");
  train->add_option("--seed", train_args.seed_override, "base seed override");
  train->add_option("--data-root", train_args.data_root,
                    "dataset root (defaults to $SICO_DATA_ROOT)");

  CLI::App* adapt = app.add_subcommand(
      "adapt", "Run the adaptation loop against trained source classifiers");
  adapt->add_option("--config", adapt_args.config_path, "experiment config")
      ->required();
  adapt->add_option("--source", adapt_source,
                    "train-source manifest or a single checkpoint")
      ->required();
  adapt->add_option("--out", adapt_args.out_dir, "output directory");
  adapt->add_option("--seed", adapt_args.seed_override, "base seed override");
  adapt->add_option("--data-root", adapt_args.data_root,
                    "dataset root (defaults to $SICO_DATA_ROOT)");

  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic datasets");
  synth->add_option("--kind", synth_args.kind, "gaussians or apnea")->required();
  synth->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth->add_option("--name", synth_args.name, "output file stem");
  synth->add_option("--n", synth_args.n, "windows per domain");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--window-len", synth_args.window_len, "apnea window length");
  synth->add_option("--shift-x", synth_args.shift_x, "gaussian target shift x");
  synth->add_option("--shift-y", synth_args.shift_y, "gaussian target shift y");
  synth->add_option("--rotation", synth_args.rotation,
                    "gaussian target rotation (radians)");
  synth->add_option("--noise", synth_args.noise, "gaussian noise sigma");
  synth->add_option("--target-amp-scale", synth_args.target_amp_scale,
                    "apnea target amplitude scale");
  synth->add_option("--target-extra-noise", synth_args.target_extra_noise,
                    "apnea target added noise sigma");
  synth->add_option("--target-drift", synth_args.target_drift,
                    "apnea target baseline drift");

  CLI::App* report = app.add_subcommand(
      "report", "Aggregate adapt manifests into one comparison table");
  report->add_option("--out", report_out, "output CSV path")->required();
  report->add_option("manifests", report_manifests, "adapt manifest paths")
      ->required();

  // CLI11 wants argv-style reversed arguments.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (train->parsed()) return cmd_train_source(train_args, out, err);
    if (adapt->parsed()) return cmd_adapt(adapt_args, adapt_source, out, err);
    if (synth->parsed()) return cmd_synth(synth_args, out, err);
    if (report->parsed()) return cmd_report(report_manifests, report_out, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sico
