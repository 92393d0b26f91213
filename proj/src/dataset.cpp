#include "sico/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sico/rng.hpp"

namespace sico {

SampleSet rescale_pixels(const SampleSet& set) {
  set.validate();
  SampleSet out = set;
  for (double& v : out.features.values) {
    if (v < 0.0 || v > 255.0) {
      throw InputError("rescale_pixels: value outside [0,255]");
    }
    v /= 255.0;
  }
  return out;
}

namespace {

// Bilinear sample with the corner-aligned mapping src = dst*(S-1)/(T-1);
// resizing to the same side is then an exact identity.
double bilinear_at(const double* img, int side, double y, double x) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, side - 1);
  const int y1 = std::min(y0 + 1, side - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img[y0 * side + x0] * (1.0 - fx) + img[y0 * side + x1] * fx;
  const double bot = img[y1 * side + x0] * (1.0 - fx) + img[y1 * side + x1] * fx;
  return top * (1.0 - fy) + bot * fy;
}

}  // namespace

SampleSet resize_and_gray(const SampleSet& set, int target_side) {
  set.validate();
  if (set.channels != 1 && set.channels != 3) {
    throw InputError("resize_and_gray: channels must be 1 or 3");
  }
  if (target_side < 1) throw InputError("resize_and_gray: bad target side");
  const int side = static_cast<int>(std::llround(std::sqrt(
      static_cast<double>(set.length))));
  if (static_cast<std::size_t>(side) * side != static_cast<std::size_t>(set.length)) {
    throw InputError("resize_and_gray: images are not square");
  }

  const std::size_t n = set.size();
  SampleSet out;
  out.labels = set.labels;
  out.class_count = set.class_count;
  out.channels = 1;
  out.length = target_side * target_side;
  out.name = set.name;
  out.features = Matrix(n, static_cast<std::size_t>(out.length));

  std::vector<double> gray(static_cast<std::size_t>(set.length));
  const double scale =
      target_side > 1 ? static_cast<double>(side - 1) / (target_side - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = set.features.row(i);
    if (set.channels == 3) {
      const std::size_t plane = static_cast<std::size_t>(set.length);
      for (std::size_t k = 0; k < plane; ++k) {
        gray[k] = 0.299 * src[k] + 0.587 * src[plane + k] + 0.114 * src[2 * plane + k];
      }
      src = gray.data();
    }
    double* dst = out.features.row(i);
    for (int ty = 0; ty < target_side; ++ty) {
      for (int tx = 0; tx < target_side; ++tx) {
        dst[ty * target_side + tx] = bilinear_at(src, side, ty * scale, tx * scale);
      }
    }
  }
  return out;
}

ChannelStats standardize_fit(const SampleSet& set) {
  set.validate();
  ChannelStats stats;
  stats.mean.resize(set.channels);
  stats.sigma.resize(set.channels);
  const std::size_t span = static_cast<std::size_t>(set.length);
  for (int c = 0; c < set.channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const double* x = set.features.row(i) + c * span;
      for (std::size_t t = 0; t < span; ++t) sum += x[t];
    }
    const double count = static_cast<double>(set.size() * span);
    const double mean = sum / count;
    double var = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const double* x = set.features.row(i) + c * span;
      for (std::size_t t = 0; t < span; ++t) {
        const double d = x[t] - mean;
        var += d * d;
      }
    }
    const double sigma = std::sqrt(var / count);
    if (sigma <= 0.0) {
      throw DataError("standardize: channel " + std::to_string(c) +
                      " has zero variance");
    }
    stats.mean[c] = mean;
    stats.sigma[c] = sigma;
  }
  return stats;
}

SampleSet standardize_apply(const SampleSet& set, const ChannelStats& stats) {
  set.validate();
  if (stats.mean.size() != static_cast<std::size_t>(set.channels)) {
    throw InputError("standardize_apply: stats channel count mismatch");
  }
  SampleSet out = set;
  const std::size_t span = static_cast<std::size_t>(set.length);
  for (std::size_t i = 0; i < set.size(); ++i) {
    double* x = out.features.row(i);
    for (int c = 0; c < set.channels; ++c) {
      for (std::size_t t = 0; t < span; ++t) {
        x[c * span + t] = (x[c * span + t] - stats.mean[c]) / stats.sigma[c];
      }
    }
  }
  return out;
}

SampleSet standardize_per_signal(const SampleSet& set) {
  return standardize_apply(set, standardize_fit(set));
}

std::vector<double> downsample_to_1hz(const std::vector<double>& signal,
                                      int source_hz) {
  if (source_hz < 1) throw InputError("downsample: source_hz must be >= 1");
  if (signal.empty() || signal.size() % static_cast<std::size_t>(source_hz) != 0) {
    throw InputError("downsample: length not divisible by source_hz");
  }
  std::vector<double> out(signal.size() / source_hz);
  for (std::size_t b = 0; b < out.size(); ++b) {
    double sum = 0.0;
    for (int k = 0; k < source_hz; ++k) {
      sum += signal[b * source_hz + k];
    }
    out[b] = sum / source_hz;
  }
  return out;
}

SampleSet downsample_to_1hz(const SampleSet& set, int source_hz) {
  set.validate();
  if (source_hz < 1) throw InputError("downsample: source_hz must be >= 1");
  if (set.length % source_hz != 0) {
    throw InputError("downsample: window length not divisible by source_hz");
  }
  const int out_len = set.length / source_hz;
  SampleSet out;
  out.labels = set.labels;
  out.class_count = set.class_count;
  out.channels = set.channels;
  out.length = out_len;
  out.name = set.name;
  out.features =
      Matrix(set.size(), static_cast<std::size_t>(set.channels) * out_len);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double* src = set.features.row(i);
    double* dst = out.features.row(i);
    for (int c = 0; c < set.channels; ++c) {
      for (int b = 0; b < out_len; ++b) {
        double sum = 0.0;
        for (int k = 0; k < source_hz; ++k) {
          sum += src[c * set.length + b * source_hz + k];
        }
        dst[c * out_len + b] = sum / source_hz;
      }
    }
  }
  return out;
}

int merge_30s_labels(int first_half, int second_half) {
  if ((first_half != 0 && first_half != 1) ||
      (second_half != 0 && second_half != 1)) {
    throw InputError("merge_30s_labels: labels must be binary");
  }
  return (first_half == 1 || second_half == 1) ? 1 : 0;
}

namespace {

std::map<int, std::vector<std::size_t>> indices_by_class(const SampleSet& set) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < set.size(); ++i) {
    by_class[set.labels[i]].push_back(i);
  }
  return by_class;
}

}  // namespace

SampleSet rebalance(const SampleSet& set, std::uint64_t seed) {
  if (!set.labeled()) throw InputError("rebalance: set has no labels");
  set.validate();
  auto by_class = indices_by_class(set);
  std::size_t minority = set.size();
  for (const auto& [cls, idx] : by_class) minority = std::min(minority, idx.size());

  std::vector<std::size_t> keep;
  for (auto& [cls, idx] : by_class) {
    Rng rng(mix_seed(seed, 0xBA1A + static_cast<std::uint64_t>(cls)));
    rng.shuffle(idx);
    keep.insert(keep.end(), idx.begin(), idx.begin() + minority);
  }
  std::sort(keep.begin(), keep.end());
  return set.subset(keep);
}

SampleSet subsample(const SampleSet& set, std::size_t n, std::uint64_t seed) {
  if (!set.labeled()) throw InputError("subsample: set has no labels");
  set.validate();
  if (n >= set.size()) return set;
  auto by_class = indices_by_class(set);
  // Proportional quotas by largest remainder.
  std::vector<std::pair<int, std::vector<std::size_t>>> classes(by_class.begin(),
                                                                by_class.end());
  std::vector<std::size_t> quota(classes.size());
  std::vector<double> frac(classes.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const double exact = static_cast<double>(n) * classes[k].second.size() /
                         static_cast<double>(set.size());
    quota[k] = static_cast<std::size_t>(exact);
    frac[k] = exact - static_cast<double>(quota[k]);
    assigned += quota[k];
  }
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frac[a] != frac[b] ? frac[a] > frac[b] : a < b;
  });
  for (std::size_t k = 0; assigned < n; ++k) {
    quota[order[k % order.size()]] += 1;
    ++assigned;
  }

  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    auto& idx = classes[k].second;
    Rng rng(mix_seed(seed, 0x5AB5 + static_cast<std::uint64_t>(classes[k].first)));
    rng.shuffle(idx);
    const std::size_t take = std::min(quota[k], idx.size());
    keep.insert(keep.end(), idx.begin(), idx.begin() + take);
  }
  std::sort(keep.begin(), keep.end());
  return set.subset(keep);
}

std::pair<SampleSet, SampleSet> split(const SampleSet& set,
                                      const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw InputError("split: test fraction must be in (0,1)");
  }
  if (!set.labeled()) throw InputError("split: set has no labels");
  set.validate();

  auto by_class = indices_by_class(set);
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() < 2) {
      throw DataError("split: class " + std::to_string(cls) +
                      " has fewer than 2 samples");
    }
  }

  const std::size_t total_test = static_cast<std::size_t>(
      std::llround(spec.test_fraction * static_cast<double>(set.size())));

  std::vector<std::pair<int, std::vector<std::size_t>>> classes(by_class.begin(),
                                                                by_class.end());
  std::vector<std::size_t> quota(classes.size());
  std::vector<double> frac(classes.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const double exact = spec.test_fraction * classes[k].second.size();
    quota[k] = static_cast<std::size_t>(exact);
    frac[k] = exact - static_cast<double>(quota[k]);
    assigned += quota[k];
  }
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frac[a] != frac[b] ? frac[a] > frac[b] : a < b;
  });
  for (std::size_t k = 0; assigned < total_test && k < order.size(); ++k) {
    std::size_t& q = quota[order[k]];
    if (q + 1 < classes[order[k]].second.size()) {
      q += 1;
      ++assigned;
    }
  }

  std::vector<std::size_t> test_idx, train_idx;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    auto& idx = classes[k].second;
    Rng rng(mix_seed(spec.seed, 0x59A7 + static_cast<std::uint64_t>(classes[k].first)));
    rng.shuffle(idx);
    const std::size_t q = std::min(quota[k], idx.size() - 1);
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + q);
    train_idx.insert(train_idx.end(), idx.begin() + q, idx.end());
  }
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  SampleSet train = set.subset(train_idx);
  SampleSet test = set.subset(test_idx);
  train.name = set.name + "/train";
  test.name = set.name + "/test";
  return {std::move(train), std::move(test)};
}

}  // namespace sico
