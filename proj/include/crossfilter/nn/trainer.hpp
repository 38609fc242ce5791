#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/rng.hpp"
#include "crossfilter/data/feature_store.hpp"
#include "crossfilter/dsp/representations.hpp"
#include "crossfilter/loss/losses.hpp"
#include "crossfilter/nn/augment.hpp"
#include "crossfilter/nn/model.hpp"
#include "crossfilter/nn/optimizer.hpp"
#include "crossfilter/nn/schedule.hpp"

namespace crossfilter::nn {

/// Loss applied on the curated head. cross_entropy picks CCE or BCE by the
/// head's activation; lq puts the noisy-robust loss on a single softmax head
/// (the surrogate-loss baseline).
enum class HeadCLoss { cross_entropy, lq };

/// Full training recipe for one peer model.
struct TrainConfig {
  int epochs = 300;
  LrScheduleConfig lr;
  double weight_decay = 5e-6;
  double mixup_alpha = 1.0;
  bool use_mixup = true;
  SpecAugmentConfig specaug;
  bool use_specaugment = true;
  double segment_seconds = 4.0;
  int batch_size = 16;
  std::uint64_t seed = 0;
  loss::LossConfig loss;
  dsp::RepKind repr_kind = dsp::RepKind::logmel;
  std::vector<int> channels = {16, 32, 64, 128};
  double log_floor = 1e-10;  // silence value; must match the featurize config
  HeadCLoss head_c_loss = HeadCLoss::cross_entropy;
  AdamW<float>::Config adam;

  void validate() const {
    require(epochs >= 1, Errc::config_error, "epochs must be >= 1");
    require(batch_size >= 1, Errc::config_error, "batch_size must be >= 1");
    require(segment_seconds > 0, Errc::config_error, "segment_seconds must be positive");
    require(mixup_alpha > 0, Errc::config_error, "mixup_alpha must be positive");
    require(weight_decay >= 0, Errc::config_error, "weight_decay must be nonnegative");
    require(!channels.empty() && channels.size() <= 16, Errc::config_error,
            "backbone needs 1..16 blocks");
    lr.validate();
    loss.validate();
  }
};

/// One item of a training partition (curated or noisy side).
struct TrainItem {
  std::string clip_id;
  std::vector<float> label;
};

struct EpochStats {
  double loss_c = 0.0;  // mean curated-head loss over curated samples
  double loss_n = 0.0;  // mean noisy-head loss over noisy samples
  std::size_t n_curated = 0;
  std::size_t n_noisy = 0;
  double last_lr = 0.0;
};

namespace detail {

template <class Real>
TrainSample make_sample(const TrainItem& item, const data::FeatureStore& features,
                        const TrainConfig& cfg, Rng& rng) {
  const auto& rep = features.get(item.clip_id, cfg.repr_kind);
  const std::size_t target = dsp::frames_for_seconds(rep, cfg.segment_seconds);
  auto cropped = dsp::crop_or_pad(rep, target, rng, cfg.log_floor);
  TrainSample s;
  s.kind = cropped.kind;
  s.values = std::move(cropped.values);
  s.label = item.label;
  return s;
}

}  // namespace detail

/// One pass over the union of the curated and noisy partitions in shuffled
/// mini-batches. Curated items feed head_c (cross entropy; binary cross
/// entropy for multi-label targets); noisy items feed head_n through the
/// noisy-robust loss weighted by lambda. Mixup pairs items only within
/// their own stream so each loss keeps a well-defined target, and both mixup
/// and the masking augmentation run here only, never at inference.
template <class Real>
EpochStats train_epoch(DualHeadModel<Real>& model, AdamW<Real>& opt,
                       const std::vector<TrainItem>& curated,
                       const std::vector<TrainItem>& noisy,
                       const data::FeatureStore& features, const TrainConfig& cfg,
                       std::uint64_t& global_step, std::uint64_t total_steps, Rng& rng) {
  require(!curated.empty() || !noisy.empty(), Errc::empty_train_set,
          "train_epoch on an empty partition");

  // Shuffled order over the union; true marks curated membership.
  std::vector<std::pair<bool, std::size_t>> order;
  order.reserve(curated.size() + noisy.size());
  for (std::size_t i = 0; i < curated.size(); ++i) order.emplace_back(true, i);
  for (std::size_t i = 0; i < noisy.size(); ++i) order.emplace_back(false, i);
  rng.shuffle(order);

  EpochStats stats;
  const bool multilabel = model.head_c_kind() == HeadKind::sigmoid;
  const double lambda = cfg.loss.lambda;
  const double eps = cfg.loss.clip_eps;

  std::vector<TrainSample> batch_c, batch_n;
  for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
    batch_c.clear();
    batch_n.clear();
    for (std::size_t i = pos; i < end; ++i) {
      const auto& [is_curated, idx] = order[i];
      const auto& item = is_curated ? curated[idx] : noisy[idx];
      auto sample = detail::make_sample<Real>(item, features, cfg, rng);
      (is_curated ? batch_c : batch_n).push_back(std::move(sample));
    }
    if (cfg.use_mixup) {
      if (!batch_c.empty()) batch_c = mixup(batch_c, rng, cfg.mixup_alpha);
      if (!batch_n.empty()) batch_n = mixup(batch_n, rng, cfg.mixup_alpha);
    }
    if (cfg.use_specaugment) {
      for (auto& s : batch_c) spec_augment_inplace(s.values, s.kind, rng, cfg.specaug, cfg.log_floor);
      for (auto& s : batch_n) spec_augment_inplace(s.values, s.kind, rng, cfg.specaug, cfg.log_floor);
    }

    model.zero_grad();
    const double wc = batch_c.empty() ? 0.0 : 1.0 / static_cast<double>(batch_c.size());
    const double wn = batch_n.empty() ? 0.0 : lambda / static_cast<double>(batch_n.size());

    dsp::TimeFreqRep view;
    view.hop_seconds = 0;
    std::vector<double> grad_d;
    std::vector<Real> gc, gn;
    for (const auto& s : batch_c) {
      view.values = s.values;
      view.kind = s.kind;
      auto out = model.forward(view);
      std::vector<double> y(s.label.begin(), s.label.end());
      double value;
      if (cfg.head_c_loss == HeadCLoss::lq)
        value = loss::lq_grad_logits(out.logits_c, y, cfg.loss.q, grad_d, eps);
      else if (multilabel)
        value = loss::bce_grad_logits(out.logits_c, y, grad_d, eps);
      else
        value = loss::cce_grad_logits(out.logits_c, y, grad_d, eps);
      stats.loss_c += value;
      ++stats.n_curated;
      gc.resize(grad_d.size());
      for (std::size_t j = 0; j < grad_d.size(); ++j)
        gc[j] = static_cast<Real>(grad_d[j] * wc);
      model.backward(gc, {});
    }
    for (const auto& s : batch_n) {
      view.values = s.values;
      view.kind = s.kind;
      auto out = model.forward(view);
      std::vector<double> y(s.label.begin(), s.label.end());
      const double value = loss::lq_grad_logits(out.logits_n, y, cfg.loss.q, grad_d, eps);
      stats.loss_n += value;
      ++stats.n_noisy;
      if (wn != 0.0) {
        gn.resize(grad_d.size());
        for (std::size_t j = 0; j < grad_d.size(); ++j)
          gn[j] = static_cast<Real>(grad_d[j] * wn);
        model.backward({}, gn);
      }
    }

    const double lr = lr_schedule(std::min(global_step, total_steps), total_steps, cfg.lr);
    opt.step(lr, cfg.weight_decay);
    ++global_step;
    stats.last_lr = lr;
  }

  if (stats.n_curated) stats.loss_c /= static_cast<double>(stats.n_curated);
  if (stats.n_noisy) stats.loss_n /= static_cast<double>(stats.n_noisy);
  return stats;
}

/// Curated-head probabilities for a full-length representation; used for the
/// filtering snapshots, where determinism matters and global pooling makes
/// variable length legal.
template <class Real>
std::vector<double> predict_full(DualHeadModel<Real>& model, const dsp::TimeFreqRep& rep) {
  return model.forward(rep).p_c;
}

/// Inference protocol: five random fixed-length segments (padded when the
/// clip is short), forward each, and average the curated-head probabilities.
/// The noisy head takes no part in inference.
template <class Real>
std::vector<double> predict_clip(DualHeadModel<Real>& model, const dsp::TimeFreqRep& rep,
                                 double segment_seconds, Rng& rng, int n_segments = 5,
                                 double log_floor = 1e-10) {
  require(n_segments >= 1, Errc::config_error, "need at least one segment");
  const std::size_t target = dsp::frames_for_seconds(rep, segment_seconds);
  std::vector<double> avg;
  for (int s = 0; s < n_segments; ++s) {
    const auto seg = dsp::crop_or_pad(rep, target, rng, log_floor);
    const auto p = model.forward(seg).p_c;
    if (avg.empty()) avg.assign(p.size(), 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) avg[j] += p[j];
  }
  for (auto& v : avg) v /= static_cast<double>(n_segments);
  return avg;
}

}  // namespace crossfilter::nn
