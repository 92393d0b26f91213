#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "sico/criteria.hpp"
#include "sico/rng.hpp"

using namespace sico;

namespace {

Matrix random_prob_rows(std::size_t rows, std::size_t classes, Rng& rng) {
  Matrix m(rows, classes);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      m(r, c) = -std::log(std::max(rng.next_double(), 1e-12));
      sum += m(r, c);
    }
    for (std::size_t c = 0; c < classes; ++c) m(r, c) /= sum;
  }
  return m;
}

int row_argmax(const Matrix& m, std::size_t r) {
  int best = 0;
  for (std::size_t c = 1; c < m.cols; ++c) {
    if (m(r, c) > m(r, best)) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

TEST_CASE("top-m selection follows the sorting oracle on the 6-point pool") {
  // Class-0 candidates with winning probabilities 0.9, 0.8, 0.6 and class-1
  // candidates with 0.95, 0.7, 0.55, interleaved.
  Matrix probs(6, 2);
  auto set_row = [&](std::size_t r, int cls, double p) {
    probs(r, static_cast<std::size_t>(cls)) = p;
    probs(r, static_cast<std::size_t>(1 - cls)) = 1.0 - p;
  };
  set_row(0, 0, 0.6);
  set_row(1, 1, 0.95);
  set_row(2, 0, 0.9);
  set_row(3, 1, 0.55);
  set_row(4, 0, 0.8);
  set_row(5, 1, 0.7);

  const Selection sel =
      select(probs, CriterionSpec::top_m(2, 2), SelectionStage::Initial);
  CHECK(sel.indices == std::vector<std::size_t>{1, 2, 4, 5});
  CHECK(sel.labels == std::vector<int>{1, 0, 0, 1});
  CHECK(sel.per_class_counts == std::vector<std::size_t>{2, 2});
}

TEST_CASE("saturating m selects the entire pool") {
  Rng rng(1);
  const Matrix probs = random_prob_rows(23, 3, rng);
  const Selection sel =
      select(probs, CriterionSpec::top_m(100, 100), SelectionStage::Initial);
  CHECK(sel.size() == 23);
  for (std::size_t k = 0; k < sel.size(); ++k) {
    CHECK(sel.labels[k] == row_argmax(probs, sel.indices[k]));
  }
}

TEST_CASE("threshold 0.5 selects every point of a binary pool") {
  Rng rng(2);
  const Matrix probs = random_prob_rows(40, 2, rng);
  const Selection sel = select(probs, CriterionSpec::threshold_at(0.5),
                               SelectionStage::Initial);
  CHECK(sel.size() == 40);
}

TEST_CASE("stage picks the matching m value") {
  Rng rng(3);
  const Matrix probs = random_prob_rows(60, 2, rng);
  const Selection initial =
      select(probs, CriterionSpec::top_m(5, 2), SelectionStage::Initial);
  const Selection subsequent =
      select(probs, CriterionSpec::top_m(5, 2), SelectionStage::Subsequent);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(initial.per_class_counts[c] <= 5);
    CHECK(subsequent.per_class_counts[c] <= 2);
  }
  CHECK(initial.size() == 10);
  CHECK(subsequent.size() == 4);
}

TEST_CASE("top-percent takes the ceiling per argmax class") {
  Matrix probs(5, 2);
  for (std::size_t r = 0; r < 5; ++r) {
    probs(r, 0) = 0.6 + 0.05 * static_cast<double>(r);
    probs(r, 1) = 1.0 - probs(r, 0);
  }
  // All five rows are argmax class 0; ceil(0.3 * 5) = 2.
  const Selection sel = select(probs, CriterionSpec::top_percent(0.3),
                               SelectionStage::Initial);
  CHECK(sel.size() == 2);
  CHECK(sel.indices == std::vector<std::size_t>{3, 4});
}

TEST_CASE("empty pools and malformed rows") {
  const Selection sel =
      select(Matrix(0, 2), CriterionSpec::top_m(3, 3), SelectionStage::Initial);
  CHECK(sel.empty());

  Matrix bad(1, 2);
  bad(0, 0) = 0.9;
  bad(0, 1) = 0.3;  // sums to 1.2
  CHECK_THROWS_AS(select(bad, CriterionSpec::top_m(1, 1), SelectionStage::Initial),
                  InputError);

  CHECK_THROWS_AS(select(Matrix(1, 2, 0.5), CriterionSpec::top_m(0, 1),
                         SelectionStage::Initial),
                  ConfigError);
  CHECK_THROWS_AS(select(Matrix(1, 2, 0.5), CriterionSpec::top_percent(1.5),
                         SelectionStage::Initial),
                  ConfigError);
  CHECK_THROWS_AS(select(Matrix(1, 2, 0.5), CriterionSpec::threshold_at(1.0),
                         SelectionStage::Initial),
                  ConfigError);
}

TEST_CASE("selection invariants over randomized pools") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.below(60);
    const std::size_t classes = 2 + rng.below(4);
    const Matrix probs = random_prob_rows(rows, classes, rng);

    CriterionSpec crit;
    switch (rng.below(3)) {
      case 0:
        crit = CriterionSpec::top_m(1 + static_cast<int>(rng.below(8)),
                                    1 + static_cast<int>(rng.below(8)));
        break;
      case 1:
        crit = CriterionSpec::top_percent(0.05 + 0.95 * rng.next_double());
        break;
      default:
        crit = CriterionSpec::threshold_at(0.3 + 0.6 * rng.next_double());
        break;
    }
    const SelectionStage stage =
        rng.below(2) ? SelectionStage::Initial : SelectionStage::Subsequent;
    const Selection sel = select(probs, crit, stage);

    // Uniqueness, bounds, argmax consistency.
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < sel.size(); ++k) {
      CHECK(sel.indices[k] < rows);
      CHECK(seen.insert(sel.indices[k]).second);
      CHECK(sel.labels[k] == row_argmax(probs, sel.indices[k]));
    }

    // Per-class cap for top-m.
    if (crit.kind == CriterionSpec::Kind::TopMPerClass) {
      const int m = stage == SelectionStage::Initial ? crit.m_initial
                                                     : crit.m_subsequent;
      std::map<int, std::size_t> candidates;
      for (std::size_t r = 0; r < rows; ++r) candidates[row_argmax(probs, r)]++;
      for (std::size_t c = 0; c < classes; ++c) {
        CHECK(sel.per_class_counts[c] <=
              static_cast<std::size_t>(m));
        // Saturation: every class picks min(m, candidates).
        CHECK(sel.per_class_counts[c] ==
              std::min<std::size_t>(static_cast<std::size_t>(m),
                                    candidates[static_cast<int>(c)]));
      }
    }

    // Determinism.
    const Selection again = select(probs, crit, stage);
    CHECK(again.indices == sel.indices);
    CHECK(again.labels == sel.labels);
  }
}

TEST_CASE("selection is invariant under monotone rescaling of winning scores") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 5 + rng.below(40);
    const std::size_t classes = 2 + rng.below(3);
    const Matrix probs = random_prob_rows(rows, classes, rng);

    // Push every winning probability through the strictly increasing map
    // q = (1 + p) / 2 and spread the remainder evenly; ranks and argmax of
    // the winners are preserved.
    Matrix scaled(rows, classes);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t win = static_cast<std::size_t>(row_argmax(probs, r));
      const double q = (1.0 + probs(r, win)) / 2.0;
      for (std::size_t c = 0; c < classes; ++c) {
        scaled(r, c) = c == win
                           ? q
                           : (1.0 - q) / static_cast<double>(classes - 1);
      }
    }

    const CriterionSpec crit = CriterionSpec::top_m(
        1 + static_cast<int>(rng.below(6)), 1 + static_cast<int>(rng.below(6)));
    const Selection a = select(probs, crit, SelectionStage::Initial);
    const Selection b = select(scaled, crit, SelectionStage::Initial);
    CHECK(a.indices == b.indices);
    CHECK(a.labels == b.labels);
  }
}

TEST_CASE("entropy values") {
  SUBCASE("uniform row over 10 classes has entropy ln 10") {
    const EntropyResult r = entropy_of(Matrix(1, 10, 0.1));
    CHECK(r.per_row[0] == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(r.mean == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }
  SUBCASE("one-hot rows have zero entropy") {
    Matrix m(1, 4, 0.0);
    m(0, 2) = 1.0;
    CHECK(entropy_of(m).per_row[0] == 0.0);
  }
  SUBCASE("row (0.7, 0.3) has entropy 0.6109") {
    Matrix m(1, 2);
    m(0, 0) = 0.7;
    m(0, 1) = 0.3;
    const double expected = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    CHECK(entropy_of(m).per_row[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(entropy_of(m).mean == doctest::Approx(0.6109).epsilon(1e-4));
  }
  SUBCASE("mean averages the rows") {
    Matrix m(2, 2, 0.5);
    m(1, 0) = 1.0;
    m(1, 1) = 0.0;
    CHECK(entropy_of(m).mean ==
          doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));
  }
}
