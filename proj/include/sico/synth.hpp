#pragma once

#include <cstdint>
#include <utility>

#include "sico/sample_set.hpp"

namespace sico {

// Synthetic domain-shift generators used by the benchmark presets and tests.

struct GaussianShiftSpec {
  int n_per_class = 300;
  int class_count = 2;
  double shift_x = 0.0;
  double shift_y = 0.0;
  double rotation = 0.0;  // radians, applied about the origin
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
};

// 2D Gaussian blobs with class means on a circle of radius 3*noise_sigma.
// The target domain draws from the same blobs, rotates every point about the
// origin and then translates it; labels are retained for evaluation only.
std::pair<SampleSet, SampleSet> synth_shifted_gaussians(
    const GaussianShiftSpec& spec);

double gaussian_class_mean_x(const GaussianShiftSpec& spec, int cls);
double gaussian_class_mean_y(const GaussianShiftSpec& spec, int cls);

struct ApneaSynthSpec {
  int n_windows = 200;
  int window_len = 60;  // 1 Hz semantics
  std::uint64_t seed = 0;
  // Domain-shift knobs; the defaults generate the source domain.
  double amplitude_scale = 1.0;
  double extra_noise = 0.0;
  double baseline_drift = 0.0;
};

// Balanced binary windows of a sinusoidal breathing carrier; apneic windows
// carry a contiguous amplitude-suppressed segment of at least 10 samples.
SampleSet synth_apnea_like(const ApneaSynthSpec& spec);

}  // namespace sico
