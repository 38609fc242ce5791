#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "crossfilter/core/rng.hpp"
#include "crossfilter/data/dataset.hpp"
#include "crossfilter/data/feature_store.hpp"
#include "crossfilter/nn/trainer.hpp"

namespace crossfilter::baselines {

struct CoteachingConfig {
  double epsilon = 0.3;  // assumed noise ratio
  int ramp_epochs = 10;  // forget rate ramps 0 -> epsilon linearly, then holds

  void validate() const {
    require(epsilon >= 0.0 && epsilon < 1.0, Errc::config_error, "epsilon must lie in [0,1)");
    require(ramp_epochs >= 1, Errc::config_error, "ramp_epochs must be >= 1");
  }

  double keep_fraction(int epoch) const {
    const double forget =
        epsilon * std::min(1.0, static_cast<double>(epoch) / static_cast<double>(ramp_epochs));
    return 1.0 - forget;
  }
};

/// Small-loss exchange: each network keeps the ceil(keep_fraction * n)
/// smallest-loss indices as judged by its PEER. Ties are stable by index.
/// Returns {indices for net B (from A's losses), indices for net A}.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> coteaching_select(
    const std::vector<double>& losses_a, const std::vector<double>& losses_b,
    double keep_fraction) {
  require(!losses_a.empty() && losses_a.size() == losses_b.size(), Errc::empty_train_set,
          "coteaching_select needs two equal-length nonempty loss lists");
  require(keep_fraction > 0.0 && keep_fraction <= 1.0, Errc::config_error,
          "keep_fraction must lie in (0,1]");
  const auto n = losses_a.size();
  const auto keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(n) - 1e-12));
  auto smallest = [keep](const std::vector<double>& losses) {
    std::vector<std::size_t> idx(losses.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
  };
  return {smallest(losses_a), smallest(losses_b)};
}

/// Replaces every noisy item's label by the argmax of the model's
/// curated-head prediction on the full-length representation.
template <class Real>
std::vector<nn::TrainItem> pseudo_label(nn::DualHeadModel<Real>& model,
                                        const std::vector<nn::TrainItem>& noisy,
                                        const data::FeatureStore& features,
                                        dsp::RepKind kind) {
  std::vector<nn::TrainItem> out;
  out.reserve(noisy.size());
  for (const auto& item : noisy) {
    const auto p = nn::predict_full(model, features.get(item.clip_id, kind));
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.size(); ++j)
      if (p[j] > p[best]) best = j;
    nn::TrainItem relabeled;
    relabeled.clip_id = item.clip_id;
    relabeled.label.assign(item.label.size(), 0.0f);
    relabeled.label[best] = 1.0f;
    out.push_back(std::move(relabeled));
  }
  return out;
}

template <class Real>
struct SingleModelRun {
  nn::DualHeadModel<Real> model;
  nn::AdamW<Real> optimizer;
  Rng train_rng;
  std::vector<double> loss_history;  // mean per-epoch training loss
};

namespace detail {

template <class Real>
SingleModelRun<Real> init_single(const data::BiQualityDataset& ds, const nn::TrainConfig& cfg,
                                 std::uint64_t seed) {
  Rng root(seed);
  SingleModelRun<Real> run;
  Rng init = root.split("init.model1");
  run.train_rng = root.split("train.model1");
  run.model = nn::DualHeadModel<Real>(static_cast<std::size_t>(ds.n_classes()), cfg.repr_kind,
                                      ds.multilabel, cfg.channels, init);
  run.optimizer = nn::AdamW<Real>(cfg.adam);
  run.optimizer.attach(run.model.params());
  return run;
}

inline std::vector<nn::TrainItem> items_of(const data::BiQualityDataset& ds, data::Subset s) {
  std::vector<nn::TrainItem> out;
  for (const auto idx : ds.indices(s))
    out.push_back({ds.items[idx].clip_id, data::label_vector(ds.items[idx], ds.n_classes())});
  return out;
}

}  // namespace detail

enum class SingleLoss { cce, lq };

/// One network, one head, one loss over the entire train set (curated and
/// noisy pooled). SingleLoss::lq trains the curated head under the
/// noisy-robust loss; SingleLoss::cce is plain cross entropy on everything.
template <class Real>
SingleModelRun<Real> train_single(const data::BiQualityDataset& ds,
                                  const data::FeatureStore& features, nn::TrainConfig cfg,
                                  SingleLoss which, std::uint64_t seed) {
  cfg.validate();
  if (which == SingleLoss::lq) cfg.head_c_loss = nn::HeadCLoss::lq;
  auto run = detail::init_single<Real>(ds, cfg, seed);
  auto all = detail::items_of(ds, data::Subset::curated);
  for (auto& item : detail::items_of(ds, data::Subset::noisy)) all.push_back(std::move(item));
  require(!all.empty(), Errc::empty_train_set, "no training items");

  const auto batches = (all.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                       static_cast<std::size_t>(cfg.batch_size);
  const auto total_steps = static_cast<std::uint64_t>(cfg.epochs) * batches;
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto stats = nn::train_epoch(run.model, run.optimizer, all, {}, features, cfg, step,
                                       total_steps, run.train_rng);
    run.loss_history.push_back(stats.loss_c);
  }
  return run;
}

/// Pre-train on the curated set, relabel the noisy set with the model's own
/// predictions, then fine-tune on the union with cross entropy throughout.
/// pretrain_fraction of the epoch budget goes to the first stage.
template <class Real>
SingleModelRun<Real> train_pseudolabel(const data::BiQualityDataset& ds,
                                       const data::FeatureStore& features, nn::TrainConfig cfg,
                                       std::uint64_t seed, double pretrain_fraction = 0.5) {
  cfg.validate();
  require(pretrain_fraction > 0.0 && pretrain_fraction < 1.0, Errc::config_error,
          "pretrain_fraction must lie in (0,1)");
  auto run = detail::init_single<Real>(ds, cfg, seed);
  const auto curated = detail::items_of(ds, data::Subset::curated);
  const auto noisy = detail::items_of(ds, data::Subset::noisy);
  require(!curated.empty(), Errc::empty_train_set, "pseudo-labelling needs a curated set");

  const int pre_epochs = std::max(1, static_cast<int>(std::llround(pretrain_fraction * cfg.epochs)));
  const int fine_epochs = std::max(1, cfg.epochs - pre_epochs);

  const auto batches_pre = (curated.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                           static_cast<std::size_t>(cfg.batch_size);
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= pre_epochs; ++epoch) {
    const auto stats = nn::train_epoch(run.model, run.optimizer, curated, {}, features, cfg, step,
                                       static_cast<std::uint64_t>(pre_epochs) * batches_pre,
                                       run.train_rng);
    run.loss_history.push_back(stats.loss_c);
  }

  auto all = curated;
  for (auto& item : pseudo_label(run.model, noisy, features, cfg.repr_kind))
    all.push_back(std::move(item));
  const auto batches_fine = (all.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                            static_cast<std::size_t>(cfg.batch_size);
  step = 0;
  for (int epoch = 1; epoch <= fine_epochs; ++epoch) {
    const auto stats = nn::train_epoch(run.model, run.optimizer, all, {}, features, cfg, step,
                                       static_cast<std::uint64_t>(fine_epochs) * batches_fine,
                                       run.train_rng);
    run.loss_history.push_back(stats.loss_c);
  }
  return run;
}

template <class Real>
struct CoteachingRun {
  nn::DualHeadModel<Real> model_a, model_b;
  nn::AdamW<Real> opt_a, opt_b;
  std::vector<double> loss_history;
};

/// Co-teaching: both networks see the same representation; per batch each
/// ranks the samples by its own cross-entropy loss and its peer trains on
/// the smallest keep_fraction of them.
template <class Real>
CoteachingRun<Real> train_coteaching(const data::BiQualityDataset& ds,
                                     const data::FeatureStore& features, nn::TrainConfig cfg,
                                     CoteachingConfig ct, std::uint64_t seed) {
  cfg.validate();
  ct.validate();
  Rng root(seed);
  Rng init_a = root.split("init.model1");
  Rng init_b = root.split("init.model2");
  Rng rng = root.split("train.coteaching");

  CoteachingRun<Real> run;
  run.model_a = nn::DualHeadModel<Real>(static_cast<std::size_t>(ds.n_classes()), cfg.repr_kind,
                                        ds.multilabel, cfg.channels, init_a);
  run.model_b = nn::DualHeadModel<Real>(static_cast<std::size_t>(ds.n_classes()), cfg.repr_kind,
                                        ds.multilabel, cfg.channels, init_b);
  run.opt_a = nn::AdamW<Real>(cfg.adam);
  run.opt_b = nn::AdamW<Real>(cfg.adam);
  run.opt_a.attach(run.model_a.params());
  run.opt_b.attach(run.model_b.params());

  auto all = detail::items_of(ds, data::Subset::curated);
  for (auto& item : detail::items_of(ds, data::Subset::noisy)) all.push_back(std::move(item));
  require(!all.empty(), Errc::empty_train_set, "no training items");

  const bool multilabel = ds.multilabel;
  const double eps = cfg.loss.clip_eps;
  const auto batches = (all.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                       static_cast<std::size_t>(cfg.batch_size);
  const auto total_steps = static_cast<std::uint64_t>(cfg.epochs) * batches;
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double keep = ct.keep_fraction(epoch - 1);
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t epoch_n = 0;

    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
      std::vector<nn::TrainSample> batch;
      for (std::size_t i = pos; i < end; ++i)
        batch.push_back(nn::detail::make_sample<Real>(all[order[i]], features, cfg, rng));
      if (cfg.use_mixup) batch = nn::mixup(batch, rng, cfg.mixup_alpha);
      if (cfg.use_specaugment)
        for (auto& s : batch)
          nn::spec_augment_inplace(s.values, s.kind, rng, cfg.specaug, cfg.log_floor);

      auto model_losses = [&](nn::DualHeadModel<Real>& model) {
        std::vector<double> losses(batch.size());
        dsp::TimeFreqRep view;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          view.values = batch[i].values;
          view.kind = batch[i].kind;
          auto out = model.forward(view);
          std::vector<double> y(batch[i].label.begin(), batch[i].label.end());
          losses[i] = multilabel ? loss::bce(out.p_c, y, eps) : loss::cce_soft(out.p_c, y, eps);
        }
        return losses;
      };
      const auto losses_a = model_losses(run.model_a);
      const auto losses_b = model_losses(run.model_b);
      const auto [for_b, for_a] = coteaching_select(losses_a, losses_b, keep);

      const double lr = nn::lr_schedule(std::min(step, total_steps), total_steps, cfg.lr);
      auto train_on = [&](nn::DualHeadModel<Real>& model, nn::AdamW<Real>& opt,
                          const std::vector<std::size_t>& sel) {
        model.zero_grad();
        const double w = 1.0 / static_cast<double>(sel.size());
        dsp::TimeFreqRep view;
        std::vector<double> grad_d;
        std::vector<Real> gc;
        for (const auto i : sel) {
          view.values = batch[i].values;
          view.kind = batch[i].kind;
          auto out = model.forward(view);
          std::vector<double> y(batch[i].label.begin(), batch[i].label.end());
          double v;
          if (multilabel) v = loss::bce_grad_logits(out.logits_c, y, grad_d, eps);
          else v = loss::cce_grad_logits(out.logits_c, y, grad_d, eps);
          epoch_loss += v;
          ++epoch_n;
          gc.resize(grad_d.size());
          for (std::size_t j = 0; j < grad_d.size(); ++j)
            gc[j] = static_cast<Real>(grad_d[j] * w);
          model.backward(gc, {});
        }
        opt.step(lr, cfg.weight_decay);
      };
      train_on(run.model_a, run.opt_a, for_a);
      train_on(run.model_b, run.opt_b, for_b);
      ++step;
    }
    run.loss_history.push_back(epoch_n ? epoch_loss / static_cast<double>(epoch_n) : 0.0);
  }
  return run;
}

}  // namespace crossfilter::baselines
