#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "crossfilter/core/rng.hpp"
#include "crossfilter/metrics/metrics.hpp"
#include "test_helpers.hpp"

using namespace crossfilter;
using namespace crossfilter::metrics;
using cftest::thrown_code;

namespace {

// Brute-force label-ranking average precision straight from the set
// definitions: rank_ij = |{k: s_ik >= s_ij}|, L_ij = {k positive: s_ik >=
// s_ij}. O(n_classes^2) per clip, label-weighted across the whole matrix.
double brute_lwlrap(const ScoreMatrix& sm) {
  const std::size_t J = sm.n_classes();
  double total = 0;
  std::size_t total_pos = 0;
  for (std::size_t i = 0; i < sm.n_clips(); ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      if (!sm.labels(i, j)) continue;
      std::size_t rank = 0, hits = 0;
      for (std::size_t k = 0; k < J; ++k) {
        if (sm.scores(i, k) >= sm.scores(i, j)) {
          ++rank;
          if (sm.labels(i, k)) ++hits;
        }
      }
      total += static_cast<double>(hits) / static_cast<double>(rank);
      ++total_pos;
    }
  }
  return total / static_cast<double>(total_pos);
}

// Brute-force truncated average precision: sort classes by (score desc,
// index asc), then sum precision-at-k over ranks holding a relevant label,
// normalized by min(#relevant, 3).
double brute_map3(const ScoreMatrix& sm) {
  const std::size_t J = sm.n_classes();
  double total = 0;
  for (std::size_t i = 0; i < sm.n_clips(); ++i) {
    std::vector<std::size_t> order(J);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (sm.scores(i, a) != sm.scores(i, b)) return sm.scores(i, a) > sm.scores(i, b);
      return a < b;
    });
    std::size_t n_rel = 0;
    for (std::size_t j = 0; j < J; ++j) n_rel += sm.labels(i, j) ? 1 : 0;
    double ap = 0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < std::min<std::size_t>(3, J); ++r) {
      if (sm.labels(i, order[r])) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    total += ap / static_cast<double>(std::min<std::size_t>(n_rel, 3));
  }
  return total / static_cast<double>(sm.n_clips());
}

ScoreMatrix random_matrix(Rng& rng, std::size_t n, std::size_t j, bool multilabel) {
  ScoreMatrix sm;
  sm.scores = Matrix<double>(n, j);
  sm.labels = Matrix<std::uint8_t>(n, j, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < j; ++c) sm.scores(i, c) = rng.uniform();
    if (multilabel) {
      std::size_t pos = 0;
      for (std::size_t c = 0; c < j; ++c)
        if (rng.bernoulli(0.3)) {
          sm.labels(i, c) = 1;
          ++pos;
        }
      if (pos == 0) sm.labels(i, rng.uniform_int(j)) = 1;
    } else {
      sm.labels(i, rng.uniform_int(j)) = 1;
    }
  }
  return sm;
}

}  // namespace

TEST_CASE("accuracy: pinned values") {
  ScoreMatrix sm;
  sm.scores = Matrix<double>(4, 3);
  sm.labels = Matrix<std::uint8_t>(4, 3, 0);
  const int truth[4] = {0, 1, 2, 1};
  const int pred[4] = {0, 1, 2, 0};
  for (std::size_t i = 0; i < 4; ++i) {
    sm.labels(i, static_cast<std::size_t>(truth[i])) = 1;
    sm.scores(i, static_cast<std::size_t>(pred[i])) = 1.0;
  }
  CHECK(accuracy(sm) == doctest::Approx(0.75));

  // all correct
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) sm.scores(i, c) = sm.labels(i, c);
  CHECK(accuracy(sm) == doctest::Approx(1.0));

  // multi-label rows are rejected
  sm.labels(0, 0) = sm.labels(0, 1) = 1;
  CHECK(thrown_code([&] { accuracy(sm); }) == Errc::label_arity);
}

TEST_CASE("accuracy: random guessing converges to 1/J") {
  Rng rng(50);
  const std::size_t n = 10000, J = 5;
  auto sm = random_matrix(rng, n, J, false);
  const double acc = accuracy(sm);
  const double p = 1.0 / static_cast<double>(J);
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
  CHECK(std::abs(acc - p) < 3 * sigma + 1e-12);
}

TEST_CASE("map@3: pinned values") {
  ScoreMatrix sm;
  sm.scores = Matrix<double>(1, 5);
  sm.labels = Matrix<std::uint8_t>(1, 5, 0);
  sm.labels(0, 2) = 1;

  // true label ranked 1
  double s1[5] = {0.1, 0.2, 0.9, 0.3, 0.0};
  for (std::size_t c = 0; c < 5; ++c) sm.scores(0, c) = s1[c];
  CHECK(map_at_3(sm) == doctest::Approx(1.0));

  // ranked 2 -> 0.5
  double s2[5] = {0.1, 0.95, 0.9, 0.3, 0.0};
  for (std::size_t c = 0; c < 5; ++c) sm.scores(0, c) = s2[c];
  CHECK(map_at_3(sm) == doctest::Approx(0.5));

  // ranked 4 -> 0
  double s4[5] = {0.95, 0.94, 0.5, 0.93, 0.0};
  for (std::size_t c = 0; c < 5; ++c) sm.scores(0, c) = s4[c];
  CHECK(map_at_3(sm) == doctest::Approx(0.0));
}

TEST_CASE("lwlrap: worked example and bounds") {
  // labels {A, C}, score order A > B > C -> (1/1 + 2/3) / 2 = 5/6
  ScoreMatrix sm;
  sm.scores = Matrix<double>(1, 3);
  sm.labels = Matrix<std::uint8_t>(1, 3, 0);
  sm.labels(0, 0) = sm.labels(0, 2) = 1;
  sm.scores(0, 0) = 0.9;
  sm.scores(0, 1) = 0.5;
  sm.scores(0, 2) = 0.1;
  const auto r = lwlrap(sm);
  CHECK(r.overall == doctest::Approx(5.0 / 6.0).epsilon(1e-12));

  // perfect ranking -> 1.0
  sm.scores(0, 1) = 0.05;
  CHECK(lwlrap(sm).overall == doctest::Approx(1.0));

  // a row with no positives is an error
  sm.labels(0, 0) = sm.labels(0, 2) = 0;
  CHECK(thrown_code([&] { lwlrap(sm); }) == Errc::empty_labelset);
}

TEST_CASE("lwlrap and map@3 match brute force on random matrices") {
  Rng rng(51);
  for (int it = 0; it < 100; ++it) {
    const std::size_t n = 1 + rng.uniform_int(50);
    const std::size_t j = 2 + rng.uniform_int(9);
    auto ml = random_matrix(rng, n, j, true);
    const auto mine = lwlrap(ml);
    CHECK(mine.overall == doctest::Approx(brute_lwlrap(ml)).epsilon(1e-12));
    // weighted per-class sum reproduces the overall score
    double wsum = 0;
    for (std::size_t c = 0; c < j; ++c) wsum += mine.weights[c] * mine.per_class[c];
    CHECK(wsum == doctest::Approx(mine.overall).epsilon(1e-12));

    auto sl = random_matrix(rng, n, j, false);
    CHECK(map_at_3(sl) == doctest::Approx(brute_map3(sl)).epsilon(1e-12));
  }
}

TEST_CASE("metrics are invariant under strictly monotone score transforms") {
  Rng rng(52);
  auto sm = random_matrix(rng, 40, 8, true);
  auto sl = random_matrix(rng, 40, 8, false);
  const double base_lw = lwlrap(sm).overall;
  const double base_map = map_at_3(sl);
  const double base_acc = accuracy(sl);

  auto transform = [](ScoreMatrix m, auto&& f) {
    for (auto& v : m.scores) v = f(v);
    return m;
  };
  for (int which = 0; which < 2; ++which) {
    auto f = [which](double x) { return which == 0 ? std::exp(x) : 3.0 * x + 2.0; };
    CHECK(lwlrap(transform(sm, f)).overall == doctest::Approx(base_lw).epsilon(1e-12));
    CHECK(map_at_3(transform(sl, f)) == doctest::Approx(base_map).epsilon(1e-12));
    CHECK(accuracy(transform(sl, f)) == doctest::Approx(base_acc).epsilon(1e-12));
  }
}

TEST_CASE("map@3 dominates top-1 accuracy") {
  Rng rng(53);
  for (int it = 0; it < 20; ++it) {
    auto sl = random_matrix(rng, 60, 6, false);
    CHECK(map_at_3(sl) >= accuracy(sl) - 1e-12);
  }
}

TEST_CASE("lwlrap stays in (0, 1]") {
  Rng rng(54);
  for (int it = 0; it < 20; ++it) {
    auto sm = random_matrix(rng, 20, 7, true);
    const double v = lwlrap(sm).overall;
    CHECK(v > 0.0);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("per-class report") {
  Rng rng(55);
  auto sm = random_matrix(rng, 30, 5, false);
  const auto rep = per_class_report(sm, {"accuracy", "map3", "lwlrap"});
  CHECK(rep.n_clips == 30);

  // lwlrap weights sum to 1; weighted values reproduce the aggregate
  double wsum = 0, vsum = 0;
  for (const auto& row : rep.per_class.at("lwlrap")) {
    wsum += row.weight;
    vsum += row.weight * row.value;
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vsum == doctest::Approx(rep.overall.at("lwlrap")).epsilon(1e-12));

  // single-class dataset: per-class equals overall
  ScoreMatrix one;
  one.scores = Matrix<double>(6, 3);
  one.labels = Matrix<std::uint8_t>(6, 3, 0);
  Rng rng2(56);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 3; ++c) one.scores(i, c) = rng2.uniform();
    one.labels(i, 1) = 1;
  }
  const auto rep1 = per_class_report(one, {"map3"});
  CHECK(rep1.per_class.at("map3")[1].value == doctest::Approx(rep1.overall.at("map3")));
}
