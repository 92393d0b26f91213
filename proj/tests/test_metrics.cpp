#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sico/metrics.hpp"
#include "sico/rng.hpp"

using namespace sico;

namespace {

// Independent kappa oracle: expand the counts into explicit (truth, pred)
// pairs and compute observed/expected agreement from the pair list.
double kappa_oracle(const ConfusionCounts& counts) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t t = 0; t < counts.classes; ++t) {
    for (std::size_t p = 0; p < counts.classes; ++p) {
      for (std::size_t k = 0; k < counts.at(t, p); ++k) {
        pairs.emplace_back(static_cast<int>(t), static_cast<int>(p));
      }
    }
  }
  const double n = static_cast<double>(pairs.size());
  double agree = 0.0;
  std::vector<double> truth_counts(counts.classes, 0.0);
  std::vector<double> pred_counts(counts.classes, 0.0);
  for (const auto& [t, p] : pairs) {
    if (t == p) agree += 1.0;
    truth_counts[static_cast<std::size_t>(t)] += 1.0;
    pred_counts[static_cast<std::size_t>(p)] += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (std::size_t c = 0; c < counts.classes; ++c) {
    p_e += (truth_counts[c] / n) * (pred_counts[c] / n);
  }
  return (p_o - p_e) / (1.0 - p_e);
}

}  // namespace

TEST_CASE("confusion tallies pairs exactly") {
  SUBCASE("perfect predictions give a diagonal matrix") {
    const std::vector<int> y = {0, 1, 2, 1, 0, 2};
    const ConfusionCounts c = confusion(y, y, 3);
    CHECK(c.total() == 6);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(c.at(i, j) == (i == j ? (i == 2 ? 2u : 2u) : 0u));
      }
    }
  }
  SUBCASE("a single sample lands in one cell") {
    const ConfusionCounts c = confusion({1}, {0}, 2);
    CHECK(c.at(1, 0) == 1);
    CHECK(c.total() == 1);
  }
  SUBCASE("a scripted 10-sample case matches the hand tally") {
    const std::vector<int> truth = {0, 0, 0, 1, 1, 1, 1, 2, 2, 2};
    const std::vector<int> pred  = {0, 1, 0, 1, 1, 0, 2, 2, 2, 0};
    const ConfusionCounts c = confusion(truth, pred, 3);
    CHECK(c.at(0, 0) == 2);
    CHECK(c.at(0, 1) == 1);
    CHECK(c.at(1, 0) == 1);
    CHECK(c.at(1, 1) == 2);
    CHECK(c.at(1, 2) == 1);
    CHECK(c.at(2, 0) == 1);
    CHECK(c.at(2, 2) == 2);
  }
  SUBCASE("length mismatch is an input error") {
    CHECK_THROWS_AS(confusion({0, 1}, {0}, 2), InputError);
  }
}

TEST_CASE("kappa analytic cases") {
  SUBCASE("perfect agreement with mixed classes gives kappa 1") {
    ConfusionCounts c(3);
    c.at(0, 0) = 5;
    c.at(1, 1) = 3;
    c.at(2, 2) = 9;
    CHECK(kappa(c) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("the 40/10/10/40 table gives kappa 0.6") {
    ConfusionCounts c(2);
    c.at(0, 0) = 40;  // TN
    c.at(0, 1) = 10;  // FP
    c.at(1, 0) = 10;  // FN
    c.at(1, 1) = 40;  // TP
    CHECK(kappa(c) == doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("independent predictions give kappa 0") {
    // Marginals scripted so that p_o = p_e: rows 60/40, cols 50/50.
    ConfusionCounts c(2);
    c.at(0, 0) = 30;
    c.at(0, 1) = 30;
    c.at(1, 0) = 20;
    c.at(1, 1) = 20;
    CHECK(kappa(c) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("degenerate single-class agreement is undefined") {
    ConfusionCounts c(2);
    c.at(0, 0) = 10;
    CHECK_THROWS_AS(kappa(c), MetricError);
  }
}

TEST_CASE("kappa matches the pair-expansion oracle on random tables") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t classes = 2 + rng.below(4);
    ConfusionCounts c(classes);
    for (std::size_t& cell : c.counts) cell = rng.below(20);
    if (c.total() == 0) c.at(0, 1) = 1;

    double expected;
    try {
      expected = kappa_oracle(c);
    } catch (...) {
      continue;
    }
    if (!std::isfinite(expected)) continue;
    CHECK(kappa(c) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(kappa(c) >= -1.0 - 1e-12);
    CHECK(kappa(c) <= 1.0 + 1e-12);
  }
}

TEST_CASE("sensitivity and specificity") {
  SUBCASE("perfect classifier scores (1, 1)") {
    ConfusionCounts c(2);
    c.at(0, 0) = 7;
    c.at(1, 1) = 5;
    const SensSpec s = sensitivity_specificity(c);
    CHECK(s.sensitivity == 1.0);
    CHECK(s.specificity == 1.0);
  }
  SUBCASE("an all-negative predictor scores (0, 1)") {
    ConfusionCounts c(2);
    c.at(0, 0) = 6;
    c.at(1, 0) = 4;
    const SensSpec s = sensitivity_specificity(c);
    CHECK(s.sensitivity == 0.0);
    CHECK(s.specificity == 1.0);
  }
  SUBCASE("TP=8 FN=2 TN=6 FP=4 gives (0.8, 0.6)") {
    ConfusionCounts c(2);
    c.at(1, 1) = 8;
    c.at(1, 0) = 2;
    c.at(0, 0) = 6;
    c.at(0, 1) = 4;
    const SensSpec s = sensitivity_specificity(c);
    CHECK(s.sensitivity == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(s.specificity == doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("scaling all counts leaves both rates unchanged") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      ConfusionCounts c(2);
      c.at(0, 0) = 1 + rng.below(30);
      c.at(0, 1) = rng.below(30);
      c.at(1, 0) = rng.below(30);
      c.at(1, 1) = 1 + rng.below(30);
      const SensSpec base = sensitivity_specificity(c);
      const std::size_t k = 2 + rng.below(9);
      ConfusionCounts scaled(2);
      for (std::size_t i = 0; i < 4; ++i) scaled.counts[i] = c.counts[i] * k;
      const SensSpec s = sensitivity_specificity(scaled);
      CHECK(s.sensitivity == doctest::Approx(base.sensitivity).epsilon(1e-12));
      CHECK(s.specificity == doctest::Approx(base.specificity).epsilon(1e-12));
    }
  }
  SUBCASE("an empty class row is undefined") {
    ConfusionCounts c(2);
    c.at(0, 0) = 3;
    CHECK_THROWS_AS(sensitivity_specificity(c), MetricError);
  }
}

TEST_CASE("one-tailed paired t-test") {
  SUBCASE("identical series are not significant") {
    const std::vector<double> a = {1, 2, 3, 4};
    const TTestResult r = paired_t_one_tailed(a, a);
    CHECK(r.t == 0.0);
    CHECK_FALSE(r.significant);
  }
  SUBCASE("differences {1,2,3,4,5} follow the textbook formula") {
    const std::vector<double> b = {10, 10, 10, 10, 10};
    const std::vector<double> a = {11, 12, 13, 14, 15};
    const TTestResult r = paired_t_one_tailed(a, b);
    CHECK(r.t == doctest::Approx(4.242640687).epsilon(1e-9));
    CHECK(r.critical == doctest::Approx(2.132).epsilon(1e-3));
    CHECK(r.significant);
  }
  SUBCASE("a uniformly below b is never significant for the upper tail") {
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {2, 4, 6};
    const TTestResult r = paired_t_one_tailed(a, b);
    CHECK(r.t < 0.0);
    CHECK_FALSE(r.significant);
  }
  SUBCASE("zero variance with positive mean is significant by decision") {
    const std::vector<double> a = {2, 3, 4};
    const std::vector<double> b = {1, 2, 3};
    const TTestResult r = paired_t_one_tailed(a, b);
    CHECK(r.significant);
  }
  SUBCASE("antisymmetry in the arguments") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> a(5), b(5);
      for (int i = 0; i < 5; ++i) {
        a[static_cast<std::size_t>(i)] = rng.normal();
        b[static_cast<std::size_t>(i)] = rng.normal();
      }
      const TTestResult ab = paired_t_one_tailed(a, b);
      const TTestResult ba = paired_t_one_tailed(b, a);
      CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
    }
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(paired_t_one_tailed({1.0}, {2.0}), InputError);
    CHECK_THROWS_AS(paired_t_one_tailed({1.0, 2.0}, {1.0}), InputError);
    CHECK_THROWS_AS(paired_t_one_tailed({1, 2, 3}, {1, 2, 3}, 0.01), InputError);
  }
}

TEST_CASE("summarize") {
  SUBCASE("constant values have zero standard error") {
    const RunSummary s = summarize({3, 3, 3, 3});
    CHECK(s.mean == 3.0);
    CHECK(s.standard_error == 0.0);
    CHECK(s.se_defined);
  }
  SUBCASE("{1,2,3} gives mean 2 and SE 0.5774") {
    const RunSummary s = summarize({1, 2, 3});
    CHECK(s.mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.standard_error == doctest::Approx(0.57735026919).epsilon(1e-9));
  }
  SUBCASE("a single value has an undefined SE") {
    const RunSummary s = summarize({5});
    CHECK(s.mean == 5.0);
    CHECK_FALSE(s.se_defined);
  }
}
