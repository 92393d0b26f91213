#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "sico/dataset.hpp"
#include "sico/idx.hpp"
#include "sico/network.hpp"
#include "sico/rng.hpp"
#include "sico/signal_csv.hpp"
#include "sico/synth.hpp"

using namespace sico;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("sico_data_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

SampleSet labeled_set(std::size_t n, int classes, std::uint64_t seed,
                      int length = 4) {
  Rng rng(seed);
  SampleSet set;
  set.features = Matrix(n, static_cast<std::size_t>(length));
  set.labels.resize(n);
  set.class_count = classes;
  set.channels = 1;
  set.length = length;
  for (std::size_t i = 0; i < n; ++i) {
    set.labels[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    for (int d = 0; d < length; ++d) set.features(i, d) = rng.normal();
  }
  return set;
}

}  // namespace

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

TEST_CASE("idx write/read round trip preserves pixels exactly") {
  SampleSet set;
  set.features = Matrix(2, 4);
  const double pixels[8] = {0, 17, 102, 255, 34, 68, 136, 204};
  for (std::size_t k = 0; k < 8; ++k) set.features.values[k] = pixels[k];
  set.labels = {3, 7};
  set.class_count = 10;
  set.channels = 1;
  set.length = 4;

  const auto img_path = (temp_dir() / "fixture-images-idx3").string();
  const auto lab_path = (temp_dir() / "fixture-labels-idx1").string();
  save_idx(set, img_path, lab_path);
  const SampleSet loaded = load_idx(img_path, lab_path);

  CHECK(loaded.size() == 2);
  CHECK(loaded.features.values == set.features.values);
  CHECK(loaded.labels == set.labels);
}

TEST_CASE("idx loader rejects a labels file with the image magic") {
  SampleSet set = labeled_set(2, 2, 1);
  for (double& v : set.features.values) v = std::abs(v) * 10.0;
  const auto img_path = (temp_dir() / "magic-images-idx3").string();
  const auto lab_path = (temp_dir() / "magic-labels-idx1").string();
  save_idx(set, img_path, lab_path);
  // Hand the image file where labels are expected: magic 2051, not 2049.
  CHECK_THROWS_AS(load_idx(img_path, img_path), FormatError);
  CHECK_THROWS_AS(load_idx(lab_path, lab_path), FormatError);
}

TEST_CASE("idx loader names the offset of a truncation") {
  const auto img_path = (temp_dir() / "trunc-images-idx3").string();
  {
    std::FILE* f = std::fopen(img_path.c_str(), "wb");
    const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 2,
                                      0, 0, 0, 2, 0, 0, 0, 2};
    std::fwrite(header, 1, sizeof(header), f);
    const unsigned char pixels[3] = {1, 2, 3};  // needs 8
    std::fwrite(pixels, 1, sizeof(pixels), f);
    std::fclose(f);
  }
  const auto lab_path = (temp_dir() / "trunc-labels-idx1").string();
  {
    std::FILE* f = std::fopen(lab_path.c_str(), "wb");
    const unsigned char header[8] = {0, 0, 8, 1, 0, 0, 0, 2};
    std::fwrite(header, 1, sizeof(header), f);
    const unsigned char labels[2] = {0, 1};
    std::fwrite(labels, 1, sizeof(labels), f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(load_idx(img_path, lab_path),
                       doctest::Contains("offset"), FormatError);
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

TEST_CASE("rescale_pixels divides by 255 and checks the range") {
  SampleSet set = labeled_set(1, 2, 2, 3);
  set.features(0, 0) = 255.0;
  set.features(0, 1) = 0.0;
  set.features(0, 2) = 51.0;
  const SampleSet out = rescale_pixels(set);
  CHECK(out.features(0, 0) == 1.0);
  CHECK(out.features(0, 1) == 0.0);
  CHECK(out.features(0, 2) == doctest::Approx(0.2).epsilon(1e-12));

  set.features(0, 0) = 300.0;
  CHECK_THROWS_AS(rescale_pixels(set), InputError);
}

TEST_CASE("rescaling is invertible on every representable pixel value") {
  SampleSet set;
  set.features = Matrix(1, 256);
  for (int v = 0; v < 256; ++v) set.features(0, v) = static_cast<double>(v);
  set.channels = 1;
  set.length = 256;
  const SampleSet scaled = rescale_pixels(set);
  for (int v = 0; v < 256; ++v) {
    CHECK(std::llround(scaled.features(0, v) * 255.0) == v);
  }
}

TEST_CASE("resize_and_gray identity and constant cases") {
  SampleSet set;
  set.features = Matrix(1, 28 * 28);
  Rng rng(3);
  for (double& v : set.features.values) v = rng.uniform(0, 255);
  set.channels = 1;
  set.length = 28 * 28;
  set.labels = {0};
  set.class_count = 2;

  SUBCASE("same-size resize is the identity") {
    const SampleSet out = resize_and_gray(set, 28);
    for (std::size_t k = 0; k < set.features.values.size(); ++k) {
      CHECK(out.features.values[k] ==
            doctest::Approx(set.features.values[k]).epsilon(1e-12));
    }
  }

  SUBCASE("a constant image stays constant at any size") {
    SampleSet flat;
    flat.features = Matrix(1, 16 * 16, 42.0);
    flat.channels = 1;
    flat.length = 16 * 16;
    flat.labels = {1};
    flat.class_count = 2;
    const SampleSet out = resize_and_gray(flat, 28);
    CHECK(out.length == 28 * 28);
    for (double v : out.features.values) {
      CHECK(v == doctest::Approx(42.0).epsilon(1e-12));
    }
  }

  SUBCASE("non-square input is rejected") {
    SampleSet bad;
    bad.features = Matrix(1, 12, 1.0);
    bad.channels = 1;
    bad.length = 12;
    CHECK_THROWS_AS(resize_and_gray(bad, 4), InputError);
  }
}

TEST_CASE("resize matches an independent bilinear oracle on a checkerboard") {
  SampleSet board;
  board.features = Matrix(1, 4);
  board.features(0, 0) = 0.0;
  board.features(0, 1) = 1.0;
  board.features(0, 2) = 1.0;
  board.features(0, 3) = 0.0;
  board.channels = 1;
  board.length = 4;

  const int target = 4;
  const SampleSet out = resize_and_gray(board, target);

  // Direct corner-aligned bilinear formula, written independently.
  auto src_pix = [&](int y, int x) { return board.features(0, y * 2 + x); };
  const double scale = 1.0 / 3.0;  // (2-1)/(4-1)
  for (int ty = 0; ty < target; ++ty) {
    for (int tx = 0; tx < target; ++tx) {
      const double sy = ty * scale;
      const double sx = tx * scale;
      const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
      const int y1 = std::min(y0 + 1, 1), x1 = std::min(x0 + 1, 1);
      const double fy = sy - y0, fx = sx - x0;
      const double expected =
          src_pix(y0, x0) * (1 - fy) * (1 - fx) + src_pix(y0, x1) * (1 - fy) * fx +
          src_pix(y1, x0) * fy * (1 - fx) + src_pix(y1, x1) * fy * fx;
      CHECK(out.features(0, ty * target + tx) ==
            doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("resize_and_gray converts 3-channel images via BT.601 luminance") {
  SampleSet rgb;
  rgb.features = Matrix(1, 3 * 4);
  rgb.channels = 3;
  rgb.length = 4;
  for (int k = 0; k < 4; ++k) {
    rgb.features(0, k) = 100.0;       // R
    rgb.features(0, 4 + k) = 50.0;    // G
    rgb.features(0, 8 + k) = 200.0;   // B
  }
  const SampleSet out = resize_and_gray(rgb, 2);
  const double expected = 0.299 * 100.0 + 0.587 * 50.0 + 0.114 * 200.0;
  CHECK(out.channels == 1);
  for (double v : out.features.values) {
    CHECK(v == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("standardization examples") {
  SUBCASE("channel {1,2,3} maps to +-1.2247 with population sigma") {
    SampleSet set;
    set.features = Matrix(3, 1);
    set.features(0, 0) = 1.0;
    set.features(1, 0) = 2.0;
    set.features(2, 0) = 3.0;
    set.channels = 1;
    set.length = 1;
    const SampleSet out = standardize_per_signal(set);
    CHECK(out.features(0, 0) == doctest::Approx(-1.224744871).epsilon(1e-9));
    CHECK(out.features(1, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(out.features(2, 0) == doctest::Approx(1.224744871).epsilon(1e-9));
  }
  SUBCASE("standardizing twice is the identity within 1e-9") {
    SampleSet set = labeled_set(20, 2, 9, 6);
    const SampleSet once = standardize_per_signal(set);
    const SampleSet twice = standardize_per_signal(once);
    for (std::size_t k = 0; k < once.features.values.size(); ++k) {
      CHECK(twice.features.values[k] ==
            doctest::Approx(once.features.values[k]).epsilon(1e-9));
    }
  }
  SUBCASE("a constant channel is a data error") {
    SampleSet set;
    set.features = Matrix(4, 2, 3.14);
    set.channels = 2;
    set.length = 1;
    CHECK_THROWS_AS(standardize_per_signal(set), DataError);
  }
  SUBCASE("train statistics apply to the test partition") {
    SampleSet train = labeled_set(50, 2, 10, 4);
    SampleSet test = labeled_set(10, 2, 11, 4);
    const ChannelStats stats = standardize_fit(train);
    const SampleSet strain = standardize_apply(train, stats);
    const SampleSet stest = standardize_apply(test, stats);
    // Re-fitting on the standardized train set must give mean 0, sigma 1.
    const ChannelStats refit = standardize_fit(strain);
    CHECK(refit.mean[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(refit.sigma[0] == doctest::Approx(1.0).epsilon(1e-9));
    // The test partition uses the same affine map.
    CHECK(stest.features(0, 0) ==
          doctest::Approx((test.features(0, 0) - stats.mean[0]) / stats.sigma[0]));
  }
}

TEST_CASE("downsampling to 1 Hz by block mean") {
  SUBCASE("constant signal stays constant") {
    const std::vector<double> constant(300, 2.5);
    const std::vector<double> out = downsample_to_1hz(constant, 100);
    CHECK(out.size() == 3);
    for (double v : out) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("100 Hz signal of 6000 samples becomes 60 samples") {
    std::vector<double> minute(6000, 0.0);
    CHECK(downsample_to_1hz(minute, 100).size() == 60);
  }
  SUBCASE("a block of {0,...,0,100} averages to 1") {
    std::vector<double> spikes(200, 0.0);
    spikes[99] = 100.0;
    spikes[199] = 100.0;
    const std::vector<double> out = downsample_to_1hz(spikes, 100);
    CHECK(out.size() == 2);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("non-divisible length is rejected") {
    CHECK_THROWS_AS(downsample_to_1hz(std::vector<double>(150, 0.0), 100),
                    InputError);
  }
}

TEST_CASE("merge_30s_labels equals logical OR of apneic flags") {
  CHECK(merge_30s_labels(0, 0) == 0);
  CHECK(merge_30s_labels(1, 0) == 1);
  CHECK(merge_30s_labels(0, 1) == 1);
  CHECK(merge_30s_labels(1, 1) == 1);
  CHECK_THROWS_AS(merge_30s_labels(2, 0), InputError);
}

TEST_CASE("rebalance undersamples majority classes deterministically") {
  SUBCASE("already balanced sets are left with equal counts") {
    const SampleSet set = labeled_set(20, 2, 5);
    const SampleSet out = rebalance(set, 3);
    CHECK(out.size() == 20);
  }
  SUBCASE("a 30/10 split becomes 10/10") {
    SampleSet set = labeled_set(40, 2, 6);
    for (std::size_t i = 0; i < 40; ++i) set.labels[i] = i < 30 ? 0 : 1;
    const SampleSet out = rebalance(set, 3);
    std::map<int, int> counts;
    for (int y : out.labels) counts[y] += 1;
    CHECK(counts[0] == 10);
    CHECK(counts[1] == 10);
  }
  SUBCASE("the reported apneic ratio yields 238 + 238 windows") {
    SampleSet set = labeled_set(1000, 2, 7);
    for (std::size_t i = 0; i < 1000; ++i) set.labels[i] = i < 238 ? 1 : 0;
    const SampleSet out = rebalance(set, 4);
    CHECK(out.size() == 476);
    std::map<int, int> counts;
    for (int y : out.labels) counts[y] += 1;
    CHECK(counts[0] == 238);
    CHECK(counts[1] == 238);
  }
  SUBCASE("deterministic per seed") {
    SampleSet set = labeled_set(60, 3, 8);
    const SampleSet a = rebalance(set, 5);
    const SampleSet b = rebalance(set, 5);
    CHECK(a.features.values == b.features.values);
  }
}

TEST_CASE("split is stratified, deterministic, disjoint and exhaustive") {
  SUBCASE("100 samples at fraction 0.25 give 75/25") {
    const SampleSet set = labeled_set(100, 2, 12);
    const auto [train, test] = split(set, {0.25, 1});
    CHECK(train.size() == 75);
    CHECK(test.size() == 25);
  }
  SUBCASE("100 samples at fraction 0.15 give 85/15") {
    const SampleSet set = labeled_set(100, 2, 13);
    const auto [train, test] = split(set, {0.15, 1});
    CHECK(train.size() == 85);
    CHECK(test.size() == 15);
  }
  SUBCASE("same seed twice gives identical partitions") {
    const SampleSet set = labeled_set(97, 3, 14);
    const auto [train_a, test_a] = split(set, {0.3, 7});
    const auto [train_b, test_b] = split(set, {0.3, 7});
    CHECK(train_a.features.values == train_b.features.values);
    CHECK(test_a.features.values == test_b.features.values);
  }
  SUBCASE("partitions are disjoint, exhaustive and stratified") {
    Rng rng(15);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 40 + rng.below(200);
      const int classes = 2 + static_cast<int>(rng.below(4));
      SampleSet set = labeled_set(n, classes, rng.next_u64());
      // Tag each sample with a unique value for identity tracking.
      for (std::size_t i = 0; i < n; ++i) {
        set.features(i, 0) = static_cast<double>(i);
      }
      const double fraction = 0.1 + 0.5 * rng.next_double();
      const auto [train, test] = split(set, {fraction, rng.next_u64()});

      CHECK(train.size() + test.size() == n);
      std::set<double> seen;
      for (std::size_t i = 0; i < train.size(); ++i) {
        seen.insert(train.features(i, 0));
      }
      for (std::size_t i = 0; i < test.size(); ++i) {
        CHECK(seen.insert(test.features(i, 0)).second);
      }
      CHECK(seen.size() == n);

      std::map<int, std::size_t> class_total, class_test;
      for (std::size_t i = 0; i < n; ++i) class_total[set.labels[i]] += 1;
      for (std::size_t i = 0; i < test.size(); ++i) {
        class_test[test.labels[i]] += 1;
      }
      for (const auto& [cls, total] : class_total) {
        const double exact = fraction * static_cast<double>(total);
        CHECK(std::abs(static_cast<double>(class_test[cls]) - exact) <= 1.0);
      }
    }
  }
  SUBCASE("a class with fewer than 2 samples is a data error") {
    SampleSet set = labeled_set(11, 2, 16);
    for (std::size_t i = 0; i < 11; ++i) set.labels[i] = i == 10 ? 1 : 0;
    CHECK_THROWS_AS(split(set, {0.5, 0}), DataError);
  }
}

// ---------------------------------------------------------------------------
// Signal CSV
// ---------------------------------------------------------------------------

TEST_CASE("signal csv round trip for labeled and unlabeled sets") {
  SampleSet set = labeled_set(6, 2, 20, 5);
  set.channels = 1;
  set.length = 5;

  const auto path = (temp_dir() / "signals.csv").string();
  save_signal_csv(set, path);
  const SampleSet loaded = load_signal_csv(path);
  CHECK(loaded.size() == set.size());
  CHECK(loaded.labels == set.labels);
  CHECK(loaded.features.values == set.features.values);

  set.labels.clear();
  const auto path2 = (temp_dir() / "signals_unlabeled.csv").string();
  save_signal_csv(set, path2);
  const SampleSet loaded2 = load_signal_csv(path2);
  CHECK_FALSE(loaded2.labeled());
  CHECK(loaded2.features.values == set.features.values);
}

TEST_CASE("signal csv supports multi-channel windows") {
  SampleSet set;
  set.features = Matrix(3, 8);
  Rng rng(21);
  for (double& v : set.features.values) v = rng.normal();
  set.channels = 2;
  set.length = 4;
  set.labels = {1, 0, 1};
  set.class_count = 2;

  const auto path = (temp_dir() / "multichannel.csv").string();
  save_signal_csv(set, path);
  const SampleSet loaded = load_signal_csv(path);
  CHECK(loaded.channels == 2);
  CHECK(loaded.length == 4);
  CHECK(loaded.features.values == set.features.values);
}

TEST_CASE("signal csv rejects malformed files") {
  const auto path = (temp_dir() / "bad.csv").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("window_id,channel,t0,t1\n0,0,1.0\n", f);  // short row
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_signal_csv(path), FormatError);
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

TEST_CASE("gaussian shift generator") {
  SUBCASE("class means land on the configured centers") {
    GaussianShiftSpec spec;
    spec.n_per_class = 4000;
    spec.seed = 31;
    auto [source, target] = synth_shifted_gaussians(spec);
    for (int cls = 0; cls < 2; ++cls) {
      double mx = 0.0, my = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < source.size(); ++i) {
        if (source.labels[i] != cls) continue;
        mx += source.features(i, 0);
        my += source.features(i, 1);
        ++count;
      }
      mx /= static_cast<double>(count);
      my /= static_cast<double>(count);
      const double bound = 3.0 * spec.noise_sigma / std::sqrt(4000.0);
      CHECK(std::abs(mx - gaussian_class_mean_x(spec, cls)) <= bound);
      CHECK(std::abs(my - gaussian_class_mean_y(spec, cls)) <= bound);
    }
  }

  SUBCASE("zero shift and rotation give matching domains up to noise") {
    GaussianShiftSpec spec;
    spec.n_per_class = 2000;
    spec.seed = 32;
    auto [source, target] = synth_shifted_gaussians(spec);
    for (int cls = 0; cls < 2; ++cls) {
      for (int d = 0; d < 2; ++d) {
        double ms = 0.0, mt = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < source.size(); ++i) {
          if (source.labels[i] != cls) continue;
          ms += source.features(i, d);
          mt += target.features(i, d);
          ++count;
        }
        CHECK(std::abs(ms - mt) / static_cast<double>(count) <=
              4.0 / std::sqrt(static_cast<double>(count)));
      }
    }
  }

  SUBCASE("a (5,5) shift breaks a source-trained classifier") {
    GaussianShiftSpec spec;
    spec.n_per_class = 300;
    spec.shift_x = 5.0;
    spec.shift_y = 5.0;
    spec.seed = 33;
    auto [source, target] = synth_shifted_gaussians(spec);

    NetworkSpec net;
    net.input = {1, 2};
    net.layers = {LayerSpec::dense(2, 8), LayerSpec::relu(),
                  LayerSpec::dense(8, 2), LayerSpec::softmax()};
    NetworkParams params = init_network(net, 1);
    params = train(std::move(params), source, 400, 32, 0.001, 1);

    CHECK(accuracy_on(params, source) >= 0.99);
    CHECK(accuracy_on(params, target) < 0.9);
  }
}

TEST_CASE("apnea-like generator") {
  ApneaSynthSpec spec;
  spec.n_windows = 100;
  spec.seed = 41;
  const SampleSet set = synth_apnea_like(spec);

  SUBCASE("labels are exactly balanced for an even window count") {
    int positives = 0;
    for (int y : set.labels) positives += y;
    CHECK(positives == 50);
  }

  SUBCASE("apneic windows contain a contiguous low-amplitude run") {
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.labels[i] != 1) continue;
      const double* x = set.features.row(i);
      double amp = 0.0;
      for (int t = 0; t < set.length; ++t) amp = std::max(amp, std::abs(x[t]));
      int best_run = 0, run = 0;
      for (int t = 0; t < set.length; ++t) {
        run = std::abs(x[t]) < 0.25 * amp ? run + 1 : 0;
        best_run = std::max(best_run, run);
      }
      CHECK(best_run >= 10);
    }
  }

  SUBCASE("fixed seed reproduces the set exactly") {
    const SampleSet again = synth_apnea_like(spec);
    CHECK(again.features.values == set.features.values);
    CHECK(again.labels == set.labels);
  }
}
