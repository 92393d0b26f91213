#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sico/sample_set.hpp"

namespace sico {

// Preprocessing and split operations. All of them are pure: the input set is
// left untouched and the output is deterministic for a given seed.

struct SplitSpec {
  double test_fraction = 0.2;  // in (0,1)
  std::uint64_t seed = 0;
};

// Pixel values 0-255 -> 0-1.
SampleSet rescale_pixels(const SampleSet& set);

// Square images only. 3-channel input is converted to luminance
// (0.299/0.587/0.114) first, then bilinearly resampled to
// target_side x target_side.
SampleSet resize_and_gray(const SampleSet& set, int target_side);

// Per-channel standardization statistics (population sigma).
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> sigma;
};

ChannelStats standardize_fit(const SampleSet& set);
SampleSet standardize_apply(const SampleSet& set, const ChannelStats& stats);
// Fit and apply on the same set.
SampleSet standardize_per_signal(const SampleSet& set);

// Block-mean downsampling to 1 Hz; every channel's length must be divisible
// by source_hz.
SampleSet downsample_to_1hz(const SampleSet& set, int source_hz);
std::vector<double> downsample_to_1hz(const std::vector<double>& signal,
                                      int source_hz);

// 60 s label from two 30 s labels: non-apneic only if both are non-apneic.
int merge_30s_labels(int first_half, int second_half);

// Random undersampling of majority classes down to the minority-class count.
SampleSet rebalance(const SampleSet& set, std::uint64_t seed);

// Deterministic stratified split; per-class test counts are assigned by
// largest remainder so each class is within one sample of the requested
// fraction.
std::pair<SampleSet, SampleSet> split(const SampleSet& set,
                                      const SplitSpec& spec);

// Cap a labeled set at n samples, stratified, deterministic per seed.
SampleSet subsample(const SampleSet& set, std::size_t n, std::uint64_t seed);

}  // namespace sico
