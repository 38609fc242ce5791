#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "crossfilter/core/rng.hpp"
#include "crossfilter/data/dataset.hpp"
#include "crossfilter/data/feature_store.hpp"
#include "crossfilter/filter/noise_filter.hpp"
#include "crossfilter/nn/checkpoint.hpp"
#include "crossfilter/nn/trainer.hpp"

namespace crossfilter::filter {

struct CrossfilterOptions {
  bool filter_enabled = true;        // false reproduces the no-filtering ablation
  double ramp_fraction = 0.5;        // share of epochs over which k ramps to k_max
  bool agree_on_noisy_head = false;  // default agreement source: curated-path output
  bool concurrent_peers = true;      // the peers share no mutable state
};

struct HistoryRecord {
  int epoch = 0;
  int k = 0;
  std::size_t pseudo_count_1 = 0, pseudo_count_2 = 0;
  double loss_c_1 = 0, loss_n_1 = 0, loss_c_2 = 0, loss_n_2 = 0;
  double lr = 0;
  std::map<std::string, double> metrics;
};

/// Per-epoch view handed to observers after the filtering barrier. The id
/// lists are the partitions each model actually trained on this epoch.
struct EpochSnapshot {
  int epoch = 0;
  int k_selection = 0;
  const PartitionState* next_state = nullptr;
  const std::vector<nn::TrainItem>* curated[2] = {nullptr, nullptr};
  const std::vector<nn::TrainItem>* noisy[2] = {nullptr, nullptr};
};

/// Coordinates the two peer models: per epoch each trains on its own
/// partition, both then predict the entire noisy set from a consistent
/// post-epoch snapshot, and the filtering pass rebuilds both partitions for
/// the next epoch. The per-class cap follows the ramp schedule, evaluated at
/// the previous epoch index, so the first selection pass runs with k = 0 and
/// epoch one trains on the original split.
template <class Real = float>
class CrossfilterTrainer {
 public:
  using Observer = std::function<void(const EpochSnapshot&)>;
  using EvalFn =
      std::function<std::map<std::string, double>(nn::DualHeadModel<Real>&, nn::DualHeadModel<Real>&)>;

  CrossfilterTrainer(const data::BiQualityDataset& ds, const data::FeatureStore& features,
                     nn::TrainConfig cfg1, nn::TrainConfig cfg2, CrossfilterOptions opts,
                     std::uint64_t seed)
      : ds_(ds), features_(features), cfg_{std::move(cfg1), std::move(cfg2)}, opts_(opts) {
    cfg_[0].validate();
    cfg_[1].validate();
    for (const auto idx : ds.indices(data::Subset::curated))
      curated_base_.push_back({ds.items[idx].clip_id, data::label_vector(ds.items[idx], ds.n_classes())});
    for (const auto idx : ds.indices(data::Subset::noisy)) {
      noisy_base_.push_back({ds.items[idx].clip_id, ds.items[idx].labels});
      noisy_labels_[ds.items[idx].clip_id] = data::label_vector(ds.items[idx], ds.n_classes());
    }
    require(!curated_base_.empty() || !noisy_base_.empty(), Errc::empty_train_set,
            "dataset has no training items");

    Rng root(seed);
    rng_[0] = root.split("train.model1");
    rng_[1] = root.split("train.model2");
    rng_filter_ = root.split("filter");
    Rng init1 = root.split("init.model1");
    Rng init2 = root.split("init.model2");
    model_[0] = nn::DualHeadModel<Real>(static_cast<std::size_t>(ds.n_classes()), cfg_[0].repr_kind,
                                        ds.multilabel, cfg_[0].channels, init1);
    model_[1] = nn::DualHeadModel<Real>(static_cast<std::size_t>(ds.n_classes()), cfg_[1].repr_kind,
                                        ds.multilabel, cfg_[1].channels, init2);
    opt_[0] = nn::AdamW<Real>(cfg_[0].adam);
    opt_[1] = nn::AdamW<Real>(cfg_[1].adam);
    opt_[0].attach(model_[0].params());
    opt_[1].attach(model_[1].params());

    state_.delta[0].assign(static_cast<std::size_t>(ds.n_classes()), 0);
    state_.delta[1].assign(static_cast<std::size_t>(ds.n_classes()), 0);

    const auto total = curated_base_.size() + noisy_base_.size();
    const auto batches = (total + static_cast<std::size_t>(cfg_[0].batch_size) - 1) /
                         static_cast<std::size_t>(cfg_[0].batch_size);
    total_steps_ = static_cast<std::uint64_t>(cfg_[0].epochs) * batches;
  }

  void set_observer(Observer obs) { observer_ = std::move(obs); }
  void set_eval(EvalFn fn, int every) {
    eval_fn_ = std::move(fn);
    metrics_every_ = every;
  }

  /// Runs epochs epoch_done+1 .. cfg.epochs.
  void run() {
    while (epoch_done_ < cfg_[0].epochs) run_one_epoch();
  }

  void run_one_epoch() {
    const int j = epoch_done_ + 1;
    std::vector<nn::TrainItem> curated_lists[2], noisy_lists[2];
    for (int r = 0; r < 2; ++r) build_partition(r, curated_lists[r], noisy_lists[r]);

    nn::EpochStats stats[2];
    std::unordered_map<std::string, std::vector<double>> preds[2];
    auto run_model = [&](int r) {
      stats[r] = nn::train_epoch(model_[r], opt_[r], curated_lists[r], noisy_lists[r], features_,
                                 cfg_[r], step_[r], total_steps_, rng_[r]);
      if (opts_.filter_enabled) {
        preds[r].reserve(noisy_base_.size());
        for (const auto& item : noisy_base_) {
          const auto& rep = features_.get(item.clip_id, cfg_[r].repr_kind);
          auto out = model_[r].forward(rep);
          preds[r][item.clip_id] = opts_.agree_on_noisy_head ? out.p_n : out.p_c;
        }
      }
    };
    if (opts_.concurrent_peers) {
      std::thread t1([&] { run_model(0); });
      run_model(1);
      t1.join();
    } else {
      run_model(0);
      run_model(1);
    }

    // Selection cap for this epoch's pass: schedule at the previous index.
    const int k_sel = opts_.filter_enabled
                          ? step_schedule(j - 1, cfg_[0].epochs, noisy_base_.size(),
                                          ds_.n_classes(), opts_.ramp_fraction)
                          : 0;
    if (opts_.filter_enabled) {
      state_ = filter_epoch(preds[0], preds[1], noisy_base_, ds_.n_classes(), k_sel, rng_filter_);
    }
    state_.epoch = j;

    HistoryRecord rec;
    rec.epoch = j;
    rec.k = k_sel;
    rec.pseudo_count_1 = state_.pseudo_count(0);
    rec.pseudo_count_2 = state_.pseudo_count(1);
    rec.loss_c_1 = stats[0].loss_c;
    rec.loss_n_1 = stats[0].loss_n;
    rec.loss_c_2 = stats[1].loss_c;
    rec.loss_n_2 = stats[1].loss_n;
    rec.lr = stats[0].last_lr;
    if (eval_fn_ && metrics_every_ > 0 && (j % metrics_every_ == 0 || j == cfg_[0].epochs))
      rec.metrics = eval_fn_(model_[0], model_[1]);
    history_.push_back(rec);

    if (observer_) {
      EpochSnapshot snap;
      snap.epoch = j;
      snap.k_selection = k_sel;
      snap.next_state = &state_;
      for (int r = 0; r < 2; ++r) {
        snap.curated[r] = &curated_lists[r];
        snap.noisy[r] = &noisy_lists[r];
      }
      observer_(snap);
    }
    epoch_done_ = j;
  }

  nn::DualHeadModel<Real>& model(int r) { return model_[r]; }
  nn::AdamW<Real>& optimizer(int r) { return opt_[r]; }
  Rng& train_rng(int r) { return rng_[r]; }
  Rng& filter_rng() { return rng_filter_; }
  const PartitionState& state() const { return state_; }
  const std::vector<HistoryRecord>& history() const { return history_; }
  int epochs_done() const { return epoch_done_; }
  std::uint64_t steps_done(int r) const { return step_[r]; }
  const nn::TrainConfig& config(int r) const { return cfg_[r]; }

  /// Restores mid-run state saved at an epoch boundary.
  void restore(int r, nn::DualHeadModel<Real> model, nn::AdamW<Real> opt, Rng rng,
               std::uint64_t steps) {
    auto m1 = std::move(opt.moment1());
    auto m2 = std::move(opt.moment2());
    const auto step_count = opt.step_count();
    model_[r] = std::move(model);
    opt_[r] = nn::AdamW<Real>(opt.config());
    opt_[r].attach(model_[r].params());
    opt_[r].moment1() = std::move(m1);
    opt_[r].moment2() = std::move(m2);
    opt_[r].set_step_count(step_count);
    rng_[r] = rng;
    step_[r] = steps;
  }

  void restore_filter(PartitionState st, Rng filter_rng, int epochs_done) {
    state_ = std::move(st);
    rng_filter_ = filter_rng;
    epoch_done_ = epochs_done;
  }

 private:
  void build_partition(int r, std::vector<nn::TrainItem>& curated,
                       std::vector<nn::TrainItem>& noisy) const {
    curated = curated_base_;
    noisy.clear();
    for (const auto& item : noisy_base_) {
      if (state_.pseudo_ids[r].count(item.clip_id)) {
        curated.push_back({item.clip_id, noisy_labels_.at(item.clip_id)});
      } else {
        noisy.push_back({item.clip_id, noisy_labels_.at(item.clip_id)});
      }
    }
  }

  const data::BiQualityDataset& ds_;
  const data::FeatureStore& features_;
  nn::TrainConfig cfg_[2];
  CrossfilterOptions opts_;

  std::vector<nn::TrainItem> curated_base_;
  std::vector<NoisyItem> noisy_base_;
  std::unordered_map<std::string, std::vector<float>> noisy_labels_;

  nn::DualHeadModel<Real> model_[2];
  nn::AdamW<Real> opt_[2];
  Rng rng_[2], rng_filter_;
  std::uint64_t step_[2] = {0, 0};
  std::uint64_t total_steps_ = 0;
  PartitionState state_;
  std::vector<HistoryRecord> history_;
  int epoch_done_ = 0;
  Observer observer_;
  EvalFn eval_fn_;
  int metrics_every_ = 0;
};

}  // namespace crossfilter::filter
