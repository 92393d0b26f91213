#include "sico/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sico/rng.hpp"

namespace sico {

// ---------------------------------------------------------------------------
// LayerSpec / NetworkSpec
// ---------------------------------------------------------------------------

LayerSpec LayerSpec::dense(int in, int out) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::conv1d(int in_channels, int out_channels, int kernel) {
  LayerSpec s;
  s.kind = LayerKind::Conv1D;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.kernel = kernel;
  return s;
}

LayerSpec LayerSpec::maxpool1d(int width) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool1D;
  s.width = width;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::ReLU;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::Softmax;
  return s;
}

const char* layer_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1D: return "conv1d";
    case LayerKind::MaxPool1D: return "maxpool1d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

std::vector<InputShape> NetworkSpec::shape_walk() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  if (input.channels < 1 || input.length < 1) {
    throw ConfigError("invalid input shape");
  }
  std::vector<InputShape> shapes;
  shapes.reserve(layers.size());
  InputShape cur = input;
  bool seen_dense = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where =
        "layer " + std::to_string(i) + " (" + layer_name(l.kind) + ")";
    switch (l.kind) {
      case LayerKind::Dense: {
        if (l.in < 1 || l.out < 1) throw ConfigError(where + ": bad dimensions");
        if (cur.flat() != l.in) {
          throw ConfigError(where + ": expects " + std::to_string(l.in) +
                            " inputs but receives " + std::to_string(cur.flat()));
        }
        cur = InputShape{1, l.out};
        seen_dense = true;
        break;
      }
      case LayerKind::Conv1D: {
        if (l.in_channels < 1 || l.out_channels < 1 || l.kernel < 1) {
          throw ConfigError(where + ": bad dimensions");
        }
        if (cur.channels != l.in_channels) {
          throw ConfigError(where + ": expects " +
                            std::to_string(l.in_channels) + " channels, got " +
                            std::to_string(cur.channels));
        }
        if (cur.length < l.kernel) {
          throw ConfigError(where + ": kernel wider than input length");
        }
        cur = InputShape{l.out_channels, cur.length - l.kernel + 1};
        break;
      }
      case LayerKind::MaxPool1D: {
        if (l.width < 1) throw ConfigError(where + ": bad width");
        if (cur.length < l.width) {
          throw ConfigError(where + ": window wider than input length");
        }
        cur = InputShape{cur.channels, cur.length / l.width};
        break;
      }
      case LayerKind::ReLU:
        break;
      case LayerKind::Dropout: {
        if (l.rate < 0.0 || l.rate >= 1.0) {
          throw ConfigError(where + ": rate must be in [0,1)");
        }
        // Dropout sits between dense layers only.
        bool dense_after = false;
        for (std::size_t j = i + 1; j < layers.size(); ++j) {
          if (layers[j].kind == LayerKind::Dense) dense_after = true;
        }
        if (!seen_dense || !dense_after) {
          throw ConfigError(where + ": dropout only allowed between dense layers");
        }
        break;
      }
      case LayerKind::Softmax: {
        if (i + 1 != layers.size()) {
          throw ConfigError(where + ": softmax must be the final layer");
        }
        break;
      }
    }
    shapes.push_back(cur);
  }
  if (layers.back().kind != LayerKind::Softmax) {
    throw ConfigError("final layer must be softmax");
  }
  return shapes;
}

int NetworkSpec::class_count() const {
  return shape_walk().back().flat();
}

std::size_t NetworkParams::param_count() const {
  std::size_t n = 0;
  for (const LayerParams& lp : layers) {
    n += lp.w.values.size() + lp.b.values.size();
  }
  return n;
}

AdamState AdamState::for_params(const NetworkParams& params, AdamConfig cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m.resize(params.layers.size());
  s.v.resize(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const LayerParams& lp = params.layers[i];
    s.m[i].w = Matrix(lp.w.rows, lp.w.cols, 0.0);
    s.m[i].b = Matrix(lp.b.rows, lp.b.cols, 0.0);
    s.v[i].w = Matrix(lp.w.rows, lp.w.cols, 0.0);
    s.v[i].b = Matrix(lp.b.rows, lp.b.cols, 0.0);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

NetworkParams init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.shape_walk();  // throws ConfigError on inconsistent shapes

  NetworkParams params;
  params.spec = spec;
  params.seed = seed;
  params.layers.resize(spec.layers.size());

  Rng rng(mix_seed(seed, 0x1417));
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    LayerParams& lp = params.layers[i];
    if (l.kind == LayerKind::Dense) {
      const double bound = std::sqrt(6.0 / (l.in + l.out));
      lp.w = Matrix(l.in, l.out);
      for (double& x : lp.w.values) x = rng.uniform(-bound, bound);
      lp.b = Matrix(1, l.out, 0.0);
    } else if (l.kind == LayerKind::Conv1D) {
      const int fan_in = l.in_channels * l.kernel;
      const int fan_out = l.out_channels * l.kernel;
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      lp.w = Matrix(l.out_channels, static_cast<std::size_t>(l.in_channels) * l.kernel);
      for (double& x : lp.w.values) x = rng.uniform(-bound, bound);
      lp.b = Matrix(1, l.out_channels, 0.0);
    }
  }
  return params;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

void check_finite(const Matrix& m, std::size_t layer_index, LayerKind kind) {
  if (!m.all_finite()) {
    throw NumericError("non-finite activation after layer " +
                       std::to_string(layer_index) + " (" + layer_name(kind) +
                       ")");
  }
}

Matrix dense_forward(const Matrix& x, const LayerParams& lp) {
  Matrix y = matmul(x, lp.w);
  for (std::size_t r = 0; r < y.rows; ++r) {
    double* yr = y.row(r);
    for (std::size_t c = 0; c < y.cols; ++c) yr[c] += lp.b(0, c);
  }
  return y;
}

Matrix conv1d_forward(const Matrix& x, const LayerSpec& l, const LayerParams& lp,
                      int in_len) {
  const int out_len = in_len - l.kernel + 1;
  Matrix y(x.rows, static_cast<std::size_t>(l.out_channels) * out_len);
  for (std::size_t n = 0; n < x.rows; ++n) {
    const double* xr = x.row(n);
    double* yr = y.row(n);
    for (int o = 0; o < l.out_channels; ++o) {
      const double* wo = lp.w.row(o);
      double* yo = yr + static_cast<std::size_t>(o) * out_len;
      const double bo = lp.b(0, o);
      for (int t = 0; t < out_len; ++t) yo[t] = bo;
      for (int i = 0; i < l.in_channels; ++i) {
        const double* xi = xr + static_cast<std::size_t>(i) * in_len;
        const double* wi = wo + static_cast<std::size_t>(i) * l.kernel;
        for (int j = 0; j < l.kernel; ++j) {
          const double wij = wi[j];
          for (int t = 0; t < out_len; ++t) {
            yo[t] += wij * xi[t + j];
          }
        }
      }
    }
  }
  return y;
}

Matrix maxpool_forward(const Matrix& x, const LayerSpec& l, int channels,
                       int in_len, std::vector<std::size_t>* argmax) {
  const int out_len = in_len / l.width;
  Matrix y(x.rows, static_cast<std::size_t>(channels) * out_len);
  if (argmax) argmax->assign(y.values.size(), 0);
  for (std::size_t n = 0; n < x.rows; ++n) {
    const double* xr = x.row(n);
    double* yr = y.row(n);
    for (int c = 0; c < channels; ++c) {
      const double* xc = xr + static_cast<std::size_t>(c) * in_len;
      double* yc = yr + static_cast<std::size_t>(c) * out_len;
      for (int t = 0; t < out_len; ++t) {
        std::size_t best = static_cast<std::size_t>(t) * l.width;
        double best_v = xc[best];
        for (int u = 1; u < l.width; ++u) {
          const std::size_t k = static_cast<std::size_t>(t) * l.width + u;
          if (xc[k] > best_v) {  // ties keep the first position
            best_v = xc[k];
            best = k;
          }
        }
        yc[t] = best_v;
        if (argmax) {
          (*argmax)[(n * channels + c) * out_len + t] =
              n * x.cols + static_cast<std::size_t>(c) * in_len + best;
        }
      }
    }
  }
  return y;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix y(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double* yr = y.row(r);
    double mx = xr[0];
    for (std::size_t c = 1; c < x.cols; ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      sum += yr[c];
    }
    for (std::size_t c = 0; c < x.cols; ++c) yr[c] /= sum;
  }
  return y;
}

}  // namespace

Matrix forward(const NetworkParams& params, const Matrix& batch,
               bool train_mode, std::uint64_t seed, ForwardCache* cache) {
  const std::vector<InputShape> shapes = params.spec.shape_walk();
  if (batch.cols != static_cast<std::size_t>(params.spec.input.flat())) {
    throw InputError("forward: batch has " + std::to_string(batch.cols) +
                     " columns, network expects " +
                     std::to_string(params.spec.input.flat()));
  }
  if (batch.rows == 0) throw InputError("forward: empty batch");

  if (cache) {
    cache->inputs.clear();
    cache->dropout_masks.assign(params.spec.layers.size(), Matrix{});
    cache->pool_argmax.assign(params.spec.layers.size(), {});
    cache->train_mode = train_mode;
  }

  Rng drop_rng(mix_seed(seed, 0xD509));
  Matrix x = batch;
  InputShape cur = params.spec.input;
  for (std::size_t i = 0; i < params.spec.layers.size(); ++i) {
    const LayerSpec& l = params.spec.layers[i];
    if (cache) cache->inputs.push_back(x);
    switch (l.kind) {
      case LayerKind::Dense:
        x = dense_forward(x, params.layers[i]);
        break;
      case LayerKind::Conv1D:
        x = conv1d_forward(x, l, params.layers[i], cur.length);
        break;
      case LayerKind::MaxPool1D: {
        std::vector<std::size_t>* am = cache ? &cache->pool_argmax[i] : nullptr;
        x = maxpool_forward(x, l, cur.channels, cur.length, am);
        break;
      }
      case LayerKind::ReLU:
        for (double& v : x.values) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::Dropout: {
        if (train_mode && l.rate > 0.0) {
          Matrix mask(x.rows, x.cols);
          const double keep = 1.0 - l.rate;
          for (double& m : mask.values) {
            m = drop_rng.next_double() < l.rate ? 0.0 : 1.0 / keep;
          }
          for (std::size_t k = 0; k < x.values.size(); ++k) {
            x.values[k] *= mask.values[k];
          }
          if (cache) cache->dropout_masks[i] = std::move(mask);
        }
        // inference: identity
        break;
      }
      case LayerKind::Softmax:
        x = softmax_rows(x);
        break;
    }
    check_finite(x, i, l.kind);
    cur = shapes[i];
  }
  if (cache) cache->probabilities = x;
  return x;
}

// ---------------------------------------------------------------------------
// Loss and backward
// ---------------------------------------------------------------------------

double cross_entropy(const Matrix& probabilities, const Matrix& labels) {
  if (!probabilities.same_shape(labels)) {
    throw InputError("cross_entropy: probability and label shapes differ");
  }
  if (probabilities.rows == 0) throw InputError("cross_entropy: empty input");
  double total = 0.0;
  for (std::size_t r = 0; r < probabilities.rows; ++r) {
    const double* p = probabilities.row(r);
    const double* y = labels.row(r);
    for (std::size_t c = 0; c < probabilities.cols; ++c) {
      if (y[c] != 0.0) total += y[c] * clamped_log(p[c]);
    }
  }
  return -total / static_cast<double>(probabilities.rows);
}

namespace {

void dense_backward(const Matrix& x, const LayerParams& lp, const Matrix& g,
                    LayerParams& grad, Matrix& gx) {
  // dW = X^T g ; db = colsum(g) ; dx = g W^T
  grad.w = Matrix(lp.w.rows, lp.w.cols, 0.0);
  grad.b = Matrix(1, lp.b.cols, 0.0);
  for (std::size_t n = 0; n < x.rows; ++n) {
    const double* xr = x.row(n);
    const double* gr = g.row(n);
    for (std::size_t i = 0; i < lp.w.rows; ++i) {
      const double xi = xr[i];
      if (xi == 0.0) continue;
      double* gw = grad.w.row(i);
      for (std::size_t j = 0; j < lp.w.cols; ++j) gw[j] += xi * gr[j];
    }
    for (std::size_t j = 0; j < lp.b.cols; ++j) grad.b(0, j) += gr[j];
  }
  gx = Matrix(x.rows, x.cols, 0.0);
  for (std::size_t n = 0; n < x.rows; ++n) {
    const double* gr = g.row(n);
    double* gxr = gx.row(n);
    for (std::size_t j = 0; j < lp.w.cols; ++j) {
      const double gj = gr[j];
      if (gj == 0.0) continue;
      for (std::size_t i = 0; i < lp.w.rows; ++i) {
        gxr[i] += gj * lp.w(i, j);
      }
    }
  }
}

void conv1d_backward(const Matrix& x, const LayerSpec& l, const LayerParams& lp,
                     int in_len, const Matrix& g, LayerParams& grad,
                     Matrix& gx) {
  const int out_len = in_len - l.kernel + 1;
  grad.w = Matrix(lp.w.rows, lp.w.cols, 0.0);
  grad.b = Matrix(1, l.out_channels, 0.0);
  gx = Matrix(x.rows, x.cols, 0.0);
  for (std::size_t n = 0; n < x.rows; ++n) {
    const double* xr = x.row(n);
    const double* gr = g.row(n);
    double* gxr = gx.row(n);
    for (int o = 0; o < l.out_channels; ++o) {
      const double* go = gr + static_cast<std::size_t>(o) * out_len;
      const double* wo = lp.w.row(o);
      double* gwo = grad.w.row(o);
      double gb = 0.0;
      for (int t = 0; t < out_len; ++t) gb += go[t];
      grad.b(0, o) += gb;
      for (int i = 0; i < l.in_channels; ++i) {
        const double* xi = xr + static_cast<std::size_t>(i) * in_len;
        double* gxi = gxr + static_cast<std::size_t>(i) * in_len;
        const double* wi = wo + static_cast<std::size_t>(i) * l.kernel;
        double* gwi = gwo + static_cast<std::size_t>(i) * l.kernel;
        for (int j = 0; j < l.kernel; ++j) {
          double acc = 0.0;
          const double wij = wi[j];
          for (int t = 0; t < out_len; ++t) {
            const double gt = go[t];
            acc += gt * xi[t + j];
            gxi[t + j] += gt * wij;
          }
          gwi[j] += acc;
        }
      }
    }
  }
}

}  // namespace

Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   const Matrix& labels) {
  const std::vector<InputShape> shapes = params.spec.shape_walk();
  const std::size_t L = params.spec.layers.size();
  if (cache.inputs.size() != L) {
    throw InputError("backward: cache does not match network");
  }
  if (!cache.probabilities.same_shape(labels)) {
    throw InputError("backward: label shape mismatch");
  }

  Gradients grads;
  grads.layers.resize(L);

  const double n = static_cast<double>(labels.rows);
  // Softmax + cross-entropy combined: gradient at the softmax input.
  Matrix g(labels.rows, labels.cols);
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    g.values[k] = (cache.probabilities.values[k] - labels.values[k]) / n;
  }

  for (std::size_t ii = L; ii-- > 0;) {
    const LayerSpec& l = params.spec.layers[ii];
    const Matrix& x = cache.inputs[ii];
    const InputShape in_shape = ii == 0 ? params.spec.input : shapes[ii - 1];
    switch (l.kind) {
      case LayerKind::Softmax:
        // handled by the combined softmax/cross-entropy gradient above
        break;
      case LayerKind::Dense: {
        Matrix gx;
        dense_backward(x, params.layers[ii], g, grads.layers[ii], gx);
        g = std::move(gx);
        break;
      }
      case LayerKind::Conv1D: {
        Matrix gx;
        conv1d_backward(x, l, params.layers[ii], in_shape.length, g,
                        grads.layers[ii], gx);
        g = std::move(gx);
        break;
      }
      case LayerKind::MaxPool1D: {
        Matrix gx(x.rows, x.cols, 0.0);
        const std::vector<std::size_t>& am = cache.pool_argmax[ii];
        for (std::size_t k = 0; k < g.values.size(); ++k) {
          gx.values[am[k]] += g.values[k];
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::ReLU: {
        for (std::size_t k = 0; k < g.values.size(); ++k) {
          if (x.values[k] <= 0.0) g.values[k] = 0.0;
        }
        break;
      }
      case LayerKind::Dropout: {
        const Matrix& mask = cache.dropout_masks[ii];
        if (!mask.empty()) {
          for (std::size_t k = 0; k < g.values.size(); ++k) {
            g.values[k] *= mask.values[k];
          }
        }
        break;
      }
    }
    if (!g.all_finite() ||
        !(grads.layers[ii].w.all_finite() && grads.layers[ii].b.all_finite())) {
      throw NumericError("non-finite gradient at layer " + std::to_string(ii) +
                         " (" + layer_name(l.kind) + ")");
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Optimizer and training loop
// ---------------------------------------------------------------------------

namespace {

void adam_update_tensor(Matrix& theta, Matrix& m, Matrix& v, const Matrix& g,
                        const AdamConfig& cfg, double bias1, double bias2) {
  for (std::size_t k = 0; k < theta.values.size(); ++k) {
    const double gk = g.values[k];
    m.values[k] = cfg.beta1 * m.values[k] + (1.0 - cfg.beta1) * gk;
    v.values[k] = cfg.beta2 * v.values[k] + (1.0 - cfg.beta2) * gk * gk;
    const double mhat = m.values[k] / bias1;
    const double vhat = v.values[k] / bias2;
    theta.values[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

}  // namespace

double train_step(NetworkParams& params, AdamState& adam, const Matrix& batch,
                  const Matrix& labels, std::uint64_t seed) {
  if (batch.rows != labels.rows) {
    throw InputError("train_step: batch/label row mismatch");
  }
  ForwardCache cache;
  const Matrix probs = forward(params, batch, /*train_mode=*/true,
                               mix_seed(seed, static_cast<std::uint64_t>(adam.t)),
                               &cache);
  const double loss = cross_entropy(probs, labels);
  const Gradients grads = backward(params, cache, labels);

  adam.t += 1;
  const double bias1 = 1.0 - std::pow(adam.cfg.beta1, static_cast<double>(adam.t));
  const double bias2 = 1.0 - std::pow(adam.cfg.beta2, static_cast<double>(adam.t));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (params.layers[i].w.empty()) continue;
    adam_update_tensor(params.layers[i].w, adam.m[i].w, adam.v[i].w,
                       grads.layers[i].w, adam.cfg, bias1, bias2);
    adam_update_tensor(params.layers[i].b, adam.m[i].b, adam.v[i].b,
                       grads.layers[i].b, adam.cfg, bias1, bias2);
  }
  return loss;
}

NetworkParams train(NetworkParams params, const Matrix& features,
                    const Matrix& labels, std::int64_t budget,
                    std::size_t batch_size, double learning_rate,
                    std::uint64_t seed) {
  if (budget < 1) throw InputError("train: budget must be >= 1");
  if (features.rows == 0) throw InputError("train: empty data");
  if (features.rows != labels.rows) {
    throw InputError("train: feature/label row mismatch");
  }
  if (batch_size < 1) throw InputError("train: batch size must be >= 1");

  AdamConfig cfg;
  cfg.learning_rate = learning_rate;
  AdamState adam = AdamState::for_params(params, cfg);

  std::vector<std::size_t> order(features.rows);
  std::iota(order.begin(), order.end(), 0);

  std::int64_t done = 0;
  std::uint64_t epoch = 0;
  while (done < budget) {
    Rng shuffle_rng(mix_seed(seed, 0xE90C + epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size() && done < budget;
         start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      const Matrix bx = features.gather_rows(idx);
      const Matrix by = labels.gather_rows(idx);
      train_step(params, adam, bx, by, seed);
      ++done;
    }
    ++epoch;
  }
  return params;
}

NetworkParams train(NetworkParams params, const SampleSet& data,
                    std::int64_t budget, std::size_t batch_size,
                    double learning_rate, std::uint64_t seed) {
  if (!data.labeled()) throw InputError("train: sample set has no labels");
  data.validate();
  const Matrix y = one_hot(data.labels, data.class_count);
  return train(std::move(params), data.features, y, budget, batch_size,
               learning_rate, seed);
}

Matrix one_hot(const std::vector<int>& labels, int class_count) {
  if (class_count < 2) throw InputError("one_hot: class_count must be >= 2");
  Matrix y(labels.size(), class_count, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count) {
      throw InputError("one_hot: label out of range");
    }
    y(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return y;
}

Matrix predict_proba(const NetworkParams& params, const Matrix& batch) {
  return forward(params, batch, /*train_mode=*/false, 0);
}

std::vector<int> predict(const NetworkParams& params, const Matrix& batch) {
  const Matrix probs = predict_proba(params, batch);
  std::vector<int> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const double* p = probs.row(r);
    int best = 0;
    for (std::size_t c = 1; c < probs.cols; ++c) {
      if (p[c] > p[best]) best = static_cast<int>(c);
    }
    out[r] = best;
  }
  return out;
}

double accuracy_on(const NetworkParams& params, const SampleSet& data) {
  if (!data.labeled()) throw InputError("accuracy_on: set has no labels");
  const std::vector<int> pred = predict(params, data.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == data.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace sico
