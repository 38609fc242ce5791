#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "crossfilter/baselines/baselines.hpp"
#include "crossfilter/core/rng.hpp"
#include "test_helpers.hpp"

using namespace crossfilter;
using namespace crossfilter::baselines;
using cftest::thrown_code;

namespace {

dsp::TimeFreqRep fake_rep(Rng& rng, const std::string& id, float bias = 0.0f) {
  dsp::TimeFreqRep rep;
  rep.kind = dsp::RepKind::logmel;
  rep.hop_seconds = 0.04;
  rep.clip_id = id;
  rep.values = MatF(8, 10);
  for (auto& v : rep.values) v = static_cast<float>(rng.uniform(-1.0, 1.0)) + bias;
  return rep;
}

// Dataset whose classes are trivially separable: every clip of class c is a
// small perturbation of one per-class template.
struct SeparableWorld {
  data::BiQualityDataset ds;
  data::FeatureStore features;
  std::unordered_map<std::string, int> truth;

  SeparableWorld(std::uint64_t seed, int J, int curated_pc, int noisy_pc, double eps) {
    Rng rng(seed);
    std::vector<MatF> templates;
    for (int c = 0; c < J; ++c) {
      ds.class_names.push_back("c" + std::to_string(c));
      MatF t(8, 10);
      for (auto& v : t) v = static_cast<float>(rng.uniform(-2.0, 2.0));
      templates.push_back(std::move(t));
    }
    auto add = [&](const std::string& tag, int c, int i, data::Subset subset, int given) {
      const auto id = tag + std::to_string(c) + "_" + std::to_string(i);
      dsp::TimeFreqRep rep;
      rep.kind = dsp::RepKind::logmel;
      rep.hop_seconds = 0.04;
      rep.clip_id = id;
      rep.values = templates[static_cast<std::size_t>(c)];
      for (auto& v : rep.values) v += static_cast<float>(rng.uniform(-0.05, 0.05));
      features.put(std::move(rep));
      ds.items.push_back({id, "", {given}, subset});
      truth[id] = c;
    };
    for (int c = 0; c < J; ++c) {
      for (int i = 0; i < curated_pc; ++i) add("cur", c, i, data::Subset::curated, c);
      for (int i = 0; i < noisy_pc; ++i) {
        int given = c;
        if (rng.bernoulli(eps)) {
          given = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(J - 1)));
          if (given >= c) ++given;
        }
        add("noi", c, i, data::Subset::noisy, given);
      }
    }
  }

  nn::TrainConfig cfg() const {
    nn::TrainConfig c;
    c.epochs = 30;
    c.batch_size = 8;
    c.channels = {4, 8};
    c.segment_seconds = 0.4;
    c.use_mixup = false;
    c.use_specaugment = false;
    c.lr.lr_min_warm = 1e-3;
    c.lr.lr_peak = 5e-3;
    c.lr.lr_final = 5e-4;
    return c;
  }
};

}  // namespace

TEST_CASE("coteaching_select: pinned cases and the brute-force oracle") {
  // keep everything
  auto [for_b, for_a] = coteaching_select({1, 2, 3}, {3, 2, 1}, 1.0);
  CHECK(for_b == std::vector<std::size_t>{0, 1, 2});
  CHECK(for_a == std::vector<std::size_t>{0, 1, 2});

  // losses_a = [3,1,2], keep 2/3: B trains on the two smallest of A's losses
  std::tie(for_b, for_a) = coteaching_select({3, 1, 2}, {1, 2, 3}, 2.0 / 3.0);
  CHECK(for_b == std::vector<std::size_t>{1, 2});
  CHECK(for_a == std::vector<std::size_t>{0, 1});

  // random lists match sort-and-take
  Rng rng(90);
  for (int it = 0; it < 100; ++it) {
    const std::size_t n = 1 + rng.uniform_int(40);
    std::vector<double> la(n), lb(n);
    for (auto& v : la) v = rng.uniform(0, 5);
    for (auto& v : lb) v = rng.uniform(0, 5);
    const double keep = rng.uniform(0.05, 1.0);
    auto [sel_b, sel_a] = coteaching_select(la, lb, keep);
    const auto expect = static_cast<std::size_t>(std::ceil(keep * static_cast<double>(n) - 1e-12));
    CHECK(sel_b.size() == expect);

    auto brute = [&](const std::vector<double>& l) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t x, std::size_t y) { return l[x] < l[y]; });
      idx.resize(expect);
      std::sort(idx.begin(), idx.end());
      return idx;
    };
    CHECK(sel_b == brute(la));
    CHECK(sel_a == brute(lb));
  }
  CHECK(thrown_code([] { coteaching_select({}, {}, 0.5); }) == Errc::empty_train_set);
}

TEST_CASE("coteaching_select: permutation equivariance with stable ties") {
  // equal losses: ties resolve by index, stably
  auto [for_b, for_a] = coteaching_select({1, 1, 1, 1}, {2, 2, 2, 2}, 0.5);
  CHECK(for_b == std::vector<std::size_t>{0, 1});
  CHECK(for_a == std::vector<std::size_t>{0, 1});

  Rng rng(91);
  std::vector<double> la(10), lb(10);
  for (auto& v : la) v = rng.uniform(0, 1);
  for (auto& v : lb) v = rng.uniform(0, 1);
  auto [b1, a1] = coteaching_select(la, lb, 0.4);
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  std::vector<double> la_p(10), lb_p(10);
  for (std::size_t i = 0; i < 10; ++i) {
    la_p[i] = la[perm[i]];
    lb_p[i] = lb[perm[i]];
  }
  auto [b2, a2] = coteaching_select(la_p, lb_p, 0.4);
  // mapping the permuted selection back gives the original one
  std::set<std::size_t> mapped;
  for (const auto i : b2) mapped.insert(perm[i]);
  CHECK(mapped == std::set<std::size_t>(b1.begin(), b1.end()));
}

TEST_CASE("forget-rate schedule ramps linearly to epsilon") {
  CoteachingConfig ct;
  ct.epsilon = 0.3;
  ct.ramp_epochs = 10;
  CHECK(ct.keep_fraction(0) == doctest::Approx(1.0));
  CHECK(ct.keep_fraction(5) == doctest::Approx(1.0 - 0.15));
  CHECK(ct.keep_fraction(10) == doctest::Approx(0.7));
  CHECK(ct.keep_fraction(50) == doctest::Approx(0.7));
  ct.epsilon = 1.5;
  CHECK(thrown_code([&] { ct.validate(); }) == Errc::config_error);
}

TEST_CASE("pseudo_label: near-oracle model relabels to the truth") {
  SeparableWorld world(92, 3, 4, 6, 0.5);
  auto cfg = world.cfg();
  // train on curated only: the separable templates make this near-perfect
  auto run = train_single<float>(world.ds, world.features, cfg, SingleLoss::cce, 93);

  std::vector<nn::TrainItem> noisy;
  for (const auto idx : world.ds.indices(data::Subset::noisy))
    noisy.push_back({world.ds.items[idx].clip_id,
                     data::label_vector(world.ds.items[idx], world.ds.n_classes())});
  // relabel with the trained model
  const auto relabeled = pseudo_label(run.model, noisy, world.features, cfg.repr_kind);
  REQUIRE(relabeled.size() == noisy.size());
  std::size_t correct = 0;
  for (const auto& item : relabeled) {
    const auto cls = static_cast<int>(
        std::max_element(item.label.begin(), item.label.end()) - item.label.begin());
    if (cls == world.truth[item.clip_id]) ++correct;
  }
  // near-oracle: at least 90% of relabels match ground truth
  CHECK(static_cast<double>(correct) / relabeled.size() >= 0.9);
}

TEST_CASE("pseudo_label agreement rate tracks the clean fraction") {
  const double eps = 0.3;
  SeparableWorld world(94, 3, 4, 20, eps);
  auto run = train_single<float>(world.ds, world.features, world.cfg(), SingleLoss::cce, 95);
  std::vector<nn::TrainItem> noisy;
  std::size_t clean = 0;
  for (const auto idx : world.ds.indices(data::Subset::noisy)) {
    noisy.push_back({world.ds.items[idx].clip_id,
                     data::label_vector(world.ds.items[idx], world.ds.n_classes())});
    if (world.ds.items[idx].labels[0] == world.truth[world.ds.items[idx].clip_id]) ++clean;
  }
  const auto relabeled = pseudo_label(run.model, noisy, world.features, dsp::RepKind::logmel);
  std::size_t agree_count = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i)
    if (relabeled[i].label == noisy[i].label) ++agree_count;
  // agreement with given labels approximately equals the clean fraction
  const double agreement = static_cast<double>(agree_count) / noisy.size();
  const double clean_frac = static_cast<double>(clean) / noisy.size();
  CHECK(std::abs(agreement - clean_frac) < 0.15);
}

TEST_CASE("constant predictor collapses every pseudo label to one class") {
  // identical features for every item make any model a constant predictor
  Rng rng(96);
  data::FeatureStore features;
  const auto shared = fake_rep(rng, "");
  std::vector<nn::TrainItem> noisy;
  for (int i = 0; i < 9; ++i) {
    auto rep = shared;
    rep.clip_id = "n" + std::to_string(i);
    features.put(std::move(rep));
    std::vector<float> y(3, 0.0f);
    y[static_cast<std::size_t>(i % 3)] = 1.0f;
    noisy.push_back({"n" + std::to_string(i), y});
  }
  nn::DualHeadModel<float> model(3, dsp::RepKind::logmel, false, {4, 8}, rng);
  const auto relabeled = pseudo_label(model, noisy, features, dsp::RepKind::logmel);
  for (const auto& item : relabeled) CHECK(item.label == relabeled.front().label);
}

TEST_CASE("single lq training: frozen first batch reproduces the mean lq loss") {
  SeparableWorld world(98, 3, 3, 3, 0.0);
  auto cfg = world.cfg();
  cfg.epochs = 1;
  cfg.batch_size = 64;  // one batch
  cfg.loss.q = 0.7;
  // freeze: learning rates too small to move float parameters
  cfg.lr.lr_min_warm = 1e-30;
  cfg.lr.lr_peak = 2e-30;
  cfg.lr.lr_final = 1e-30;
  cfg.weight_decay = 0.0;

  auto run = train_single<float>(world.ds, world.features, cfg, SingleLoss::lq, 99);
  REQUIRE(run.loss_history.size() == 1);

  // expected: mean of lq values over all items under the frozen model
  double total = 0;
  std::size_t n = 0;
  for (const auto& item : world.ds.items) {
    const auto& rep = world.features.get(item.clip_id, dsp::RepKind::logmel);
    auto out = run.model.forward(rep);
    std::vector<double> y(3, 0.0);
    y[static_cast<std::size_t>(item.labels[0])] = 1.0;
    total += loss::lq(out.p_c, y, 0.7);
    ++n;
  }
  CHECK(run.loss_history[0] == doctest::Approx(total / n).epsilon(1e-5));
}

TEST_CASE("lq value at q=0.7: direct evaluation") {
  // (1 - 0.5^0.7) / 0.7
  const double expect = (1.0 - std::pow(0.5, 0.7)) / 0.7;
  CHECK(loss::lq<double>({0.5, 0.5}, {1.0, 0.0}, 0.7) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.549183).epsilon(1e-4));
}

TEST_CASE("coteaching trains two usable models on a separable task") {
  SeparableWorld world(100, 3, 3, 8, 0.3);
  auto cfg = world.cfg();
  cfg.epochs = 20;
  CoteachingConfig ct;
  ct.epsilon = 0.3;
  ct.ramp_epochs = 5;
  auto run = train_coteaching<float>(world.ds, world.features, cfg, ct, 101);

  // both models should classify the curated templates correctly
  std::size_t correct_a = 0, correct_b = 0, n = 0;
  for (const auto idx : world.ds.indices(data::Subset::curated)) {
    const auto& item = world.ds.items[idx];
    const auto& rep = world.features.get(item.clip_id, dsp::RepKind::logmel);
    auto pick = [&](nn::DualHeadModel<float>& m) {
      const auto p = nn::predict_full(m, rep);
      return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    };
    correct_a += pick(run.model_a) == item.labels[0];
    correct_b += pick(run.model_b) == item.labels[0];
    ++n;
  }
  CHECK(static_cast<double>(correct_a) / n >= 0.8);
  CHECK(static_cast<double>(correct_b) / n >= 0.8);
}
