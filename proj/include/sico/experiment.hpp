#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sico/engine.hpp"
#include "sico/sample_set.hpp"

namespace sico {

// Config-driven experiment runner behind the CLI verbs. Configs are flat
// key=value text with [section] headers; keys are addressed as
// "section.key".

class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text, const std::string& name);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws ConfigError if absent
  std::string get_or(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key) const;
  long get_int_or(const std::string& key, long fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);

  // FNV-1a over the sorted normalized entries; stable across reordering.
  std::string digest() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Named architecture presets used by the experiment configs.
NetworkSpec preset_network(const std::string& name);

enum class MetricKind { Accuracy, Kappa };
const char* metric_name(MetricKind kind);

struct ExperimentConfig {
  std::string name;
  MetricKind metric = MetricKind::Accuracy;
  int repetitions = 5;
  std::uint64_t base_seed = 0;
  std::string network_preset;

  // data
  std::string data_kind;  // synth-gaussians | synth-apnea | idx | signal-csv
  KvConfig raw;           // full config for data-specific keys

  // training
  std::int64_t source_budget = 500;
  std::size_t batch_size = 128;
  double learning_rate = 0.001;

  // adaptation
  CriterionSpec criterion;
  LabelMode label_mode = LabelMode::Hard;
  StageBudget stage_budget;
  std::size_t adapt_batch_size = 128;
  double adapt_learning_rate = 0.001;
  int max_stages = 1 << 20;
  bool warm_start = false;

  static ExperimentConfig from_kv(const KvConfig& kv);
  std::uint64_t repetition_seed(int repetition) const {
    return base_seed + 1000ull * static_cast<std::uint64_t>(repetition);
  }
};

// Which half of a domain pair a command is allowed to touch. The adapt path
// never loads source data; the train-source path never loads target data
// beyond what its own evaluation needs.
enum class DataRole { Source, Target };

struct DomainData {
  SampleSet train;
  SampleSet test;
};

// Loads (and preprocesses, and splits) one side of the configured pair.
DomainData load_domain(const ExperimentConfig& cfg, DataRole role,
                       const std::string& data_root);

// Per-evaluation metric values for one repetition.
struct EvalRow {
  double accuracy = kNaN;
  double kappa = kNaN;
  double sensitivity = kNaN;
  double specificity = kNaN;
};

EvalRow evaluate_on(const NetworkParams& params, const SampleSet& test_set);

// Entry point behind the `sico` binary; also callable from tests.
// Exit codes: 0 success, 1 invalid usage/config, 2 unresolvable data,
// 3 architecture mismatch, 4 conflicting metric kinds.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace sico
