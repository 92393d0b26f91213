#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sico/matrix.hpp"
#include "sico/sample_set.hpp"

namespace sico {

// ---------------------------------------------------------------------------
// Network description
// ---------------------------------------------------------------------------

enum class LayerKind { Dense, Conv1D, MaxPool1D, ReLU, Dropout, Softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  int in = 0, out = 0;                              // Dense
  int in_channels = 0, out_channels = 0, kernel = 0;  // Conv1D
  int width = 0;                                    // MaxPool1D
  double rate = 0.0;                                // Dropout

  static LayerSpec dense(int in, int out);
  static LayerSpec conv1d(int in_channels, int out_channels, int kernel);
  static LayerSpec maxpool1d(int width);
  static LayerSpec relu();
  static LayerSpec dropout(double rate);
  static LayerSpec softmax();

  bool operator==(const LayerSpec&) const = default;
};

const char* layer_name(LayerKind kind);

struct InputShape {
  int channels = 1;
  int length = 0;
  int flat() const { return channels * length; }
  bool operator==(const InputShape&) const = default;
};

struct NetworkSpec {
  InputShape input;
  std::vector<LayerSpec> layers;

  // Walks the layer list and returns the shape after each layer.
  // Throws ConfigError when adjacent layers do not compose, when the final
  // layer is not Softmax, or when Dropout is not between dense layers.
  std::vector<InputShape> shape_walk() const;

  int class_count() const;  // output width of the final Softmax

  bool operator==(const NetworkSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Parameters and optimizer state
// ---------------------------------------------------------------------------

// Weight/bias pair for one layer; both empty for parameterless layers.
struct LayerParams {
  Matrix w;
  Matrix b;
};

struct NetworkParams {
  NetworkSpec spec;
  std::vector<LayerParams> layers;  // aligned with spec.layers
  std::uint64_t seed = 0;

  std::size_t param_count() const;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<LayerParams> m;  // first moments, shapes mirror the params
  std::vector<LayerParams> v;  // second moments
  std::int64_t t = 0;

  static AdamState for_params(const NetworkParams& params, AdamConfig cfg = {});
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Everything below a probability of kLogClamp is treated as kLogClamp inside
// logs, so confident mistakes yield large finite losses instead of -inf.
inline constexpr double kLogClamp = 1e-12;

inline double clamped_log(double p) {
  return std::log(p < kLogClamp ? kLogClamp : p);
}

// Scaled uniform fan-in init, bound sqrt(6/(fan_in+fan_out)); biases zero.
// Deterministic: the same (spec, seed) always yields identical parameters.
NetworkParams init_network(const NetworkSpec& spec, std::uint64_t seed);

// Per-layer activation record kept by forward() for backward().
struct ForwardCache {
  std::vector<Matrix> inputs;             // input to each layer
  std::vector<Matrix> dropout_masks;      // per Dropout layer (else empty)
  std::vector<std::vector<std::size_t>> pool_argmax;  // per MaxPool1D layer
  Matrix probabilities;
  bool train_mode = false;
};

// Runs the network on a batch (one sample per row). Dropout is active only
// in train mode, with masks derived from `seed`, so a given (params, batch,
// seed) is fully reproducible. Pass a cache to enable backward().
Matrix forward(const NetworkParams& params, const Matrix& batch,
               bool train_mode, std::uint64_t seed,
               ForwardCache* cache = nullptr);

// Mean cross-entropy, -(1/N) sum_j sum_c y_jc log p_jc, with clamped logs.
// Label rows may be one-hot or soft; each must sum to 1.
double cross_entropy(const Matrix& probabilities, const Matrix& labels);

struct Gradients {
  std::vector<LayerParams> layers;  // aligned with spec.layers
};

// Gradient of the mean cross-entropy w.r.t. every parameter, starting from
// (p - y)/N at the softmax input. Throws NumericError naming the layer if a
// non-finite gradient appears.
Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   const Matrix& labels);

// One forward/backward/Adam-update step on a batch; returns the batch loss.
double train_step(NetworkParams& params, AdamState& adam, const Matrix& batch,
                  const Matrix& labels, std::uint64_t seed);

// Runs exactly `budget` shuffled mini-batch steps (short final batches are
// trained, not dropped). Reshuffles every epoch; all randomness derives from
// `seed`. No validation set is consulted.
NetworkParams train(NetworkParams params, const Matrix& features,
                    const Matrix& labels, std::int64_t budget,
                    std::size_t batch_size, double learning_rate,
                    std::uint64_t seed);

// Convenience overload for labeled sample sets (labels one-hot encoded).
NetworkParams train(NetworkParams params, const SampleSet& data,
                    std::int64_t budget, std::size_t batch_size,
                    double learning_rate, std::uint64_t seed);

Matrix one_hot(const std::vector<int>& labels, int class_count);

// Inference helpers.
Matrix predict_proba(const NetworkParams& params, const Matrix& batch);
std::vector<int> predict(const NetworkParams& params, const Matrix& batch);
double accuracy_on(const NetworkParams& params, const SampleSet& data);

}  // namespace sico
