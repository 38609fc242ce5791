#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfilter/baselines/baselines.hpp"
#include "crossfilter/data/dataset.hpp"
#include "crossfilter/data/feature_store.hpp"
#include "crossfilter/filter/crossfilter.hpp"
#include "crossfilter/metrics/metrics.hpp"
#include "crossfilter/nn/checkpoint.hpp"
#include "crossfilter/run/featurize.hpp"
#include "crossfilter/run/history.hpp"

namespace crossfilter::run {

enum class Method { crossfilter, coteaching, pseudolabel, lq, cce };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::crossfilter: return "crossfilter";
    case Method::coteaching: return "coteaching";
    case Method::pseudolabel: return "pseudolabel";
    case Method::lq: return "lq";
    case Method::cce: return "cce";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "crossfilter") return Method::crossfilter;
  if (s == "coteaching") return Method::coteaching;
  if (s == "pseudolabel") return Method::pseudolabel;
  if (s == "lq") return Method::lq;
  if (s == "cce") return Method::cce;
  raise(Errc::config_error, "unknown method: " + s);
}

inline bool method_uses_two_models(Method m) {
  return m == Method::crossfilter || m == Method::coteaching;
}

/// Everything a run needs; serialized in full (defaults materialized) next
/// to the run outputs so the run is reproducible from that file alone.
struct ExperimentConfig {
  Method method = Method::crossfilter;
  std::string manifest;
  std::string classes_file;
  std::string features_dir;
  std::string out_dir;
  dsp::RepKind rep1 = dsp::RepKind::logmel;
  dsp::RepKind rep2 = dsp::RepKind::cqt;
  std::uint64_t seed = 1;
  dsp::FrameConfig frame;
  nn::TrainConfig train;
  filter::CrossfilterOptions filter_opts;
  baselines::CoteachingConfig coteaching;
  double pseudolabel_pretrain_fraction = 0.5;
  int metrics_every = 0;
  int checkpoint_every = 0;   // additionally checkpoint every N epochs when > 0
  int stop_after_epochs = 0;  // stop this invocation early (resume later); 0 = run to epochs
  std::string test_manifest;  // optional; enables per-epoch metrics

  void validate() const {
    require(!manifest.empty(), Errc::config_error, "manifest path is required");
    require(!out_dir.empty(), Errc::config_error, "out_dir is required");
    frame.validate();
    train.validate();
    if (method == Method::coteaching) coteaching.validate();
    if (method == Method::pseudolabel)
      require(pseudolabel_pretrain_fraction > 0 && pseudolabel_pretrain_fraction < 1,
              Errc::config_error, "pseudolabel_pretrain_fraction must lie in (0,1)");
  }
};

inline nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["method"] = method_name(c.method);
  j["manifest"] = c.manifest;
  j["classes_file"] = c.classes_file;
  j["features_dir"] = c.features_dir;
  j["out_dir"] = c.out_dir;
  j["test_manifest"] = c.test_manifest;
  j["rep1"] = dsp::rep_kind_name(c.rep1);
  j["rep2"] = dsp::rep_kind_name(c.rep2);
  j["seed"] = c.seed;
  j["metrics_every"] = c.metrics_every;
  j["checkpoint_every"] = c.checkpoint_every;
  j["frame"] = {{"frame_width_seconds", c.frame.frame_width_seconds},
                {"hop_seconds", c.frame.hop_seconds},
                {"cqt_hop_samples", c.frame.cqt_hop_samples},
                {"n_bins", c.frame.n_bins},
                {"log_floor", c.frame.log_floor},
                {"cqt_fmin_hz", c.frame.cqt_fmin_hz},
                {"cqt_bins_per_octave", c.frame.cqt_bins_per_octave}};
  j["train"] = {{"epochs", c.train.epochs},
                {"lr_min_warm", c.train.lr.lr_min_warm},
                {"lr_peak", c.train.lr.lr_peak},
                {"lr_final", c.train.lr.lr_final},
                {"warmup_fraction", c.train.lr.warmup_fraction},
                {"weight_decay", c.train.weight_decay},
                {"mixup_alpha", c.train.mixup_alpha},
                {"use_mixup", c.train.use_mixup},
                {"specaug_freq_fraction", c.train.specaug.max_freq_fraction},
                {"specaug_time_fraction", c.train.specaug.max_time_fraction},
                {"use_specaugment", c.train.use_specaugment},
                {"segment_seconds", c.train.segment_seconds},
                {"batch_size", c.train.batch_size},
                {"channels", c.train.channels},
                {"q", c.train.loss.q},
                {"lambda", c.train.loss.lambda},
                {"clip_eps", c.train.loss.clip_eps}};
  j["filter"] = {{"enabled", c.filter_opts.filter_enabled},
                 {"ramp_fraction", c.filter_opts.ramp_fraction},
                 {"agree_head", c.filter_opts.agree_on_noisy_head ? "n" : "c"}};
  j["coteaching"] = {{"epsilon", c.coteaching.epsilon}, {"ramp_epochs", c.coteaching.ramp_epochs}};
  j["pseudolabel_pretrain_fraction"] = c.pseudolabel_pretrain_fraction;
  return j;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.manifest = j.at("manifest").get<std::string>();
  c.classes_file = j.value("classes_file", "");
  c.features_dir = j.value("features_dir", "");
  c.out_dir = j.at("out_dir").get<std::string>();
  c.test_manifest = j.value("test_manifest", "");
  c.rep1 = dsp::parse_rep_kind(j.value("rep1", "logmel"));
  c.rep2 = dsp::parse_rep_kind(j.value("rep2", "cqt"));
  c.seed = j.value("seed", std::uint64_t{1});
  c.metrics_every = j.value("metrics_every", 0);
  c.checkpoint_every = j.value("checkpoint_every", 0);
  if (j.contains("frame")) {
    const auto& f = j.at("frame");
    c.frame.frame_width_seconds = f.value("frame_width_seconds", c.frame.frame_width_seconds);
    c.frame.hop_seconds = f.value("hop_seconds", c.frame.hop_seconds);
    c.frame.cqt_hop_samples = f.value("cqt_hop_samples", c.frame.cqt_hop_samples);
    c.frame.n_bins = f.value("n_bins", c.frame.n_bins);
    c.frame.log_floor = f.value("log_floor", c.frame.log_floor);
    c.frame.cqt_fmin_hz = f.value("cqt_fmin_hz", c.frame.cqt_fmin_hz);
    c.frame.cqt_bins_per_octave = f.value("cqt_bins_per_octave", c.frame.cqt_bins_per_octave);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.lr.lr_min_warm = t.value("lr_min_warm", c.train.lr.lr_min_warm);
    c.train.lr.lr_peak = t.value("lr_peak", c.train.lr.lr_peak);
    c.train.lr.lr_final = t.value("lr_final", c.train.lr.lr_final);
    c.train.lr.warmup_fraction = t.value("warmup_fraction", c.train.lr.warmup_fraction);
    c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
    c.train.mixup_alpha = t.value("mixup_alpha", c.train.mixup_alpha);
    c.train.use_mixup = t.value("use_mixup", c.train.use_mixup);
    c.train.specaug.max_freq_fraction =
        t.value("specaug_freq_fraction", c.train.specaug.max_freq_fraction);
    c.train.specaug.max_time_fraction =
        t.value("specaug_time_fraction", c.train.specaug.max_time_fraction);
    c.train.use_specaugment = t.value("use_specaugment", c.train.use_specaugment);
    c.train.segment_seconds = t.value("segment_seconds", c.train.segment_seconds);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.channels = t.value("channels", c.train.channels);
    c.train.loss.q = t.value("q", c.train.loss.q);
    c.train.loss.lambda = t.value("lambda", c.train.loss.lambda);
    c.train.loss.clip_eps = t.value("clip_eps", c.train.loss.clip_eps);
  }
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    c.filter_opts.filter_enabled = f.value("enabled", true);
    c.filter_opts.ramp_fraction = f.value("ramp_fraction", 0.5);
    c.filter_opts.agree_on_noisy_head = f.value("agree_head", "c") == std::string("n");
  }
  if (j.contains("coteaching")) {
    c.coteaching.epsilon = j.at("coteaching").value("epsilon", 0.3);
    c.coteaching.ramp_epochs = j.at("coteaching").value("ramp_epochs", 10);
  }
  c.pseudolabel_pretrain_fraction =
      j.value("pseudolabel_pretrain_fraction", c.pseudolabel_pretrain_fraction);
  c.train.log_floor = c.frame.log_floor;
  return c;
}

namespace detail {

inline std::string rng_to_hex(const Rng& rng) {
  char buf[80];
  const auto s = rng.state();
  std::snprintf(buf, sizeof(buf), "%016llx%016llx%016llx%016llx",
                static_cast<unsigned long long>(s[0]), static_cast<unsigned long long>(s[1]),
                static_cast<unsigned long long>(s[2]), static_cast<unsigned long long>(s[3]));
  return buf;
}

inline Rng rng_from_hex(const std::string& hex) {
  require(hex.size() == 64, Errc::parse_error, "bad rng state string");
  Rng::State s{};
  for (int i = 0; i < 4; ++i)
    s[static_cast<std::size_t>(i)] = std::stoull(hex.substr(static_cast<std::size_t>(i) * 16, 16),
                                                 nullptr, 16);
  Rng rng;
  rng.set_state(s);
  return rng;
}

inline nlohmann::json partition_state_to_json(const filter::PartitionState& st) {
  nlohmann::json j;
  j["k"] = st.k;
  j["epoch"] = st.epoch;
  for (int r = 0; r < 2; ++r) {
    std::vector<std::string> ids(st.pseudo_ids[r].begin(), st.pseudo_ids[r].end());
    std::sort(ids.begin(), ids.end());
    j["pseudo_ids_" + std::to_string(r + 1)] = ids;
    j["delta_" + std::to_string(r + 1)] = st.delta[r];
  }
  return j;
}

inline filter::PartitionState partition_state_from_json(const nlohmann::json& j) {
  filter::PartitionState st;
  st.k = j.at("k").get<int>();
  st.epoch = j.at("epoch").get<int>();
  for (int r = 0; r < 2; ++r) {
    for (const auto& id : j.at("pseudo_ids_" + std::to_string(r + 1)))
      st.pseudo_ids[r].insert(id.get<std::string>());
    st.delta[r] = j.at("delta_" + std::to_string(r + 1)).get<std::vector<std::size_t>>();
  }
  return st;
}

}  // namespace detail

struct RunResult {
  std::vector<filter::HistoryRecord> history;
  std::vector<std::string> checkpoints;  // model1[, model2]
};

/// Dumps both partitions as manifest-style CSVs for audit.
inline void dump_partitions(const std::string& path, const data::BiQualityDataset& ds,
                            const filter::PartitionState& st) {
  std::ofstream f(path);
  require(f.good(), Errc::io_error, "cannot open for write: " + path);
  f << "clip_id,partition,side\n";
  for (const auto& item : ds.items) {
    if (item.subset == data::Subset::test) continue;
    for (int r = 0; r < 2; ++r) {
      const bool curated = item.subset == data::Subset::curated ||
                           st.pseudo_ids[r].count(item.clip_id) > 0;
      f << item.clip_id << ',' << (r + 1) << ',' << (curated ? "curated" : "noisy") << '\n';
    }
  }
}

/// Trains per the config and writes history.jsonl, resolved_config.json,
/// final checkpoints and (for the filtering method) run_state.json +
/// partition dumps into out_dir. When resume is true, continues a
/// previously interrupted run from its last epoch-boundary checkpoint.
template <class EvalHook = std::nullptr_t>
RunResult run_training(const ExperimentConfig& cfg_in, const data::BiQualityDataset& ds,
                       const data::FeatureStore& features, bool resume = false,
                       EvalHook&& eval_hook = nullptr) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  namespace fsys = std::filesystem;
  fsys::create_directories(cfg.out_dir);
  const auto out = [&](const std::string& name) {
    return (fsys::path(cfg.out_dir) / name).string();
  };
  {
    std::ofstream f(out("resolved_config.json"));
    f << experiment_to_json(cfg).dump(2) << '\n';
  }
  const std::string history_path = out("history.jsonl");
  if (!resume) std::filesystem::remove(history_path);

  RunResult result;
  auto record = [&](const filter::HistoryRecord& r) {
    append_history(history_path, r);
    result.history.push_back(r);
  };

  if (cfg.method == Method::crossfilter) {
    nn::TrainConfig cfg1 = cfg.train, cfg2 = cfg.train;
    cfg1.repr_kind = cfg.rep1;
    cfg2.repr_kind = cfg.rep2;
    filter::CrossfilterTrainer<float> trainer(ds, features, cfg1, cfg2, cfg.filter_opts, cfg.seed);
    if constexpr (!std::is_same_v<std::decay_t<EvalHook>, std::nullptr_t>) {
      if (cfg.metrics_every > 0) trainer.set_eval(eval_hook, cfg.metrics_every);
    }

    if (resume) {
      const auto state_path = out("run_state.json");
      require(fsys::exists(state_path), Errc::config_error,
              "no run_state.json to resume from in " + cfg.out_dir);
      nlohmann::json j;
      std::ifstream f(state_path);
      f >> j;
      auto ck1 = nn::load_checkpoint<float>(out("model1.ckpt"));
      auto ck2 = nn::load_checkpoint<float>(out("model2.ckpt"));
      trainer.restore(0, std::move(ck1.model), std::move(ck1.optimizer), ck1.rng,
                      ck1.optimizer.step_count());
      trainer.restore(1, std::move(ck2.model), std::move(ck2.optimizer), ck2.rng,
                      ck2.optimizer.step_count());
      trainer.restore_filter(detail::partition_state_from_json(j.at("partition")),
                             detail::rng_from_hex(j.at("filter_rng").get<std::string>()),
                             j.at("epoch_done").get<int>());
      result.history = read_history(history_path);
    }

    auto save_all = [&] {
      nn::save_checkpoint(out("model1.ckpt"), trainer.model(0), trainer.optimizer(0),
                          static_cast<std::uint32_t>(trainer.epochs_done()), trainer.train_rng(0),
                          trainer.config(0).channels);
      nn::save_checkpoint(out("model2.ckpt"), trainer.model(1), trainer.optimizer(1),
                          static_cast<std::uint32_t>(trainer.epochs_done()), trainer.train_rng(1),
                          trainer.config(1).channels);
      nlohmann::json j;
      j["epoch_done"] = trainer.epochs_done();
      j["partition"] = detail::partition_state_to_json(trainer.state());
      j["filter_rng"] = detail::rng_to_hex(trainer.filter_rng());
      std::ofstream f(out("run_state.json"));
      f << j.dump(2) << '\n';
    };

    const int stop_at = cfg.stop_after_epochs > 0
                            ? std::min(cfg.stop_after_epochs, cfg.train.epochs)
                            : cfg.train.epochs;
    while (trainer.epochs_done() < stop_at) {
      trainer.run_one_epoch();
      record(trainer.history().back());
      if (cfg.checkpoint_every > 0 && trainer.epochs_done() % cfg.checkpoint_every == 0)
        save_all();
    }
    save_all();
    dump_partitions(out("partitions.csv"), ds, trainer.state());
    result.checkpoints = {out("model1.ckpt"), out("model2.ckpt")};
    return result;
  }

  require(!resume, Errc::config_error,
          std::string("resume is supported for the crossfilter method only, not ") +
              method_name(cfg.method));

  auto push_single_history = [&](const std::vector<double>& losses) {
    for (std::size_t e = 0; e < losses.size(); ++e) {
      filter::HistoryRecord r;
      r.epoch = static_cast<int>(e + 1);
      r.loss_c_1 = losses[e];
      record(r);
    }
  };

  nn::TrainConfig tcfg = cfg.train;
  tcfg.repr_kind = cfg.rep1;
  switch (cfg.method) {
    case Method::cce:
    case Method::lq: {
      const auto which =
          cfg.method == Method::lq ? baselines::SingleLoss::lq : baselines::SingleLoss::cce;
      auto run = baselines::train_single<float>(ds, features, tcfg, which, cfg.seed);
      push_single_history(run.loss_history);
      nn::save_checkpoint(out("model1.ckpt"), run.model, run.optimizer,
                          static_cast<std::uint32_t>(cfg.train.epochs), run.train_rng,
                          tcfg.channels);
      result.checkpoints = {out("model1.ckpt")};
      return result;
    }
    case Method::pseudolabel: {
      auto run = baselines::train_pseudolabel<float>(ds, features, tcfg, cfg.seed,
                                                     cfg.pseudolabel_pretrain_fraction);
      push_single_history(run.loss_history);
      nn::save_checkpoint(out("model1.ckpt"), run.model, run.optimizer,
                          static_cast<std::uint32_t>(cfg.train.epochs), run.train_rng,
                          tcfg.channels);
      result.checkpoints = {out("model1.ckpt")};
      return result;
    }
    case Method::coteaching: {
      auto run = baselines::train_coteaching<float>(ds, features, tcfg, cfg.coteaching, cfg.seed);
      push_single_history(run.loss_history);
      Rng dummy(cfg.seed);
      nn::save_checkpoint(out("model1.ckpt"), run.model_a, run.opt_a,
                          static_cast<std::uint32_t>(cfg.train.epochs), dummy, tcfg.channels);
      nn::save_checkpoint(out("model2.ckpt"), run.model_b, run.opt_b,
                          static_cast<std::uint32_t>(cfg.train.epochs), dummy, tcfg.channels);
      result.checkpoints = {out("model1.ckpt"), out("model2.ckpt")};
      return result;
    }
    default: raise(Errc::config_error, "unhandled method");
  }
}

}  // namespace crossfilter::run
