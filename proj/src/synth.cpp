#include "sico/synth.hpp"

#include <cmath>

#include "sico/rng.hpp"

namespace sico {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace

double gaussian_class_mean_x(const GaussianShiftSpec& spec, int cls) {
  const double radius = 3.0 * spec.noise_sigma;
  return radius * std::cos(2.0 * kPi * cls / spec.class_count);
}

double gaussian_class_mean_y(const GaussianShiftSpec& spec, int cls) {
  const double radius = 3.0 * spec.noise_sigma;
  return radius * std::sin(2.0 * kPi * cls / spec.class_count);
}

std::pair<SampleSet, SampleSet> synth_shifted_gaussians(
    const GaussianShiftSpec& spec) {
  if (spec.class_count < 2) {
    throw InputError("synth_shifted_gaussians: need at least 2 classes");
  }
  if (spec.n_per_class < 1) {
    throw InputError("synth_shifted_gaussians: n_per_class must be >= 1");
  }

  const std::size_t n = static_cast<std::size_t>(spec.n_per_class) *
                        static_cast<std::size_t>(spec.class_count);
  SampleSet source, target;
  for (SampleSet* set : {&source, &target}) {
    set->features = Matrix(n, 2);
    set->labels.resize(n);
    set->class_count = spec.class_count;
    set->channels = 1;
    set->length = 2;
  }
  source.name = "gaussians/source";
  target.name = "gaussians/target";

  const double cos_r = std::cos(spec.rotation);
  const double sin_r = std::sin(spec.rotation);

  Rng src_rng(mix_seed(spec.seed, 0x60D5));
  Rng tgt_rng(mix_seed(spec.seed, 0x60D5 + 1));
  std::size_t row = 0;
  for (int cls = 0; cls < spec.class_count; ++cls) {
    const double mx = gaussian_class_mean_x(spec, cls);
    const double my = gaussian_class_mean_y(spec, cls);
    for (int i = 0; i < spec.n_per_class; ++i, ++row) {
      const double sx = mx + spec.noise_sigma * src_rng.normal();
      const double sy = my + spec.noise_sigma * src_rng.normal();
      source.features(row, 0) = sx;
      source.features(row, 1) = sy;
      source.labels[row] = cls;

      const double tx = mx + spec.noise_sigma * tgt_rng.normal();
      const double ty = my + spec.noise_sigma * tgt_rng.normal();
      target.features(row, 0) = cos_r * tx - sin_r * ty + spec.shift_x;
      target.features(row, 1) = sin_r * tx + cos_r * ty + spec.shift_y;
      target.labels[row] = cls;
    }
  }
  return {std::move(source), std::move(target)};
}

SampleSet synth_apnea_like(const ApneaSynthSpec& spec) {
  if (spec.n_windows < 2) {
    throw InputError("synth_apnea_like: need at least 2 windows");
  }
  if (spec.window_len < 20) {
    throw InputError("synth_apnea_like: window length too short");
  }

  SampleSet set;
  set.features = Matrix(spec.n_windows, spec.window_len);
  set.labels.resize(spec.n_windows);
  set.class_count = 2;
  set.channels = 1;
  set.length = spec.window_len;
  set.name = "apnea-synth";

  Rng rng(mix_seed(spec.seed, 0xA9EA));
  for (int w = 0; w < spec.n_windows; ++w) {
    const int label = w % 2;  // alternating keeps even counts exactly balanced
    set.labels[w] = label;

    const double amp = spec.amplitude_scale * rng.uniform(0.8, 1.2);
    const double freq = rng.uniform(0.2, 0.3);  // breaths per second
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const double noise = 0.02 * amp + spec.extra_noise;
    const double drift = spec.baseline_drift * rng.uniform(-1.0, 1.0);

    int apnea_start = 0, apnea_len = 0;
    if (label == 1) {
      apnea_len = 12 + static_cast<int>(rng.below(19));  // 12..30 samples
      apnea_start = static_cast<int>(
          rng.below(static_cast<std::size_t>(spec.window_len - apnea_len)));
    }

    double* x = set.features.row(w);
    for (int t = 0; t < spec.window_len; ++t) {
      double a = amp;
      if (label == 1 && t >= apnea_start && t < apnea_start + apnea_len) {
        a *= 0.08;  // suppressed breathing, well under the 25% scan threshold
      }
      x[t] = a * std::sin(2.0 * kPi * freq * t + phase) +
             noise * rng.normal() +
             drift * (static_cast<double>(t) / spec.window_len);
    }
  }
  return set;
}

}  // namespace sico
