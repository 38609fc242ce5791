#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfilter/data/dataset.hpp"
#include "crossfilter/data/feature_store.hpp"
#include "crossfilter/metrics/metrics.hpp"
#include "crossfilter/nn/checkpoint.hpp"
#include "crossfilter/nn/trainer.hpp"
#include "crossfilter/report/svg_plot.hpp"
#include "crossfilter/run/history.hpp"

namespace crossfilter::run {

/// Score matrix over the test subset via the five-segment protocol: each
/// clip gets its own rng stream derived from the eval seed and its id, so
/// scoring is deterministic and order-independent.
template <class Real>
metrics::ScoreMatrix score_test_set(nn::DualHeadModel<Real>& model,
                                    const data::BiQualityDataset& ds,
                                    const data::FeatureStore& features, double segment_seconds,
                                    std::uint64_t seed, double log_floor,
                                    int n_segments = 5) {
  const auto test_idx = ds.indices(data::Subset::test);
  require(!test_idx.empty(), Errc::empty_test, "test manifest has no test rows");
  require(static_cast<int>(model.n_classes()) == ds.n_classes(), Errc::config_error,
          "class-count mismatch between model (" + std::to_string(model.n_classes()) +
              ") and manifest (" + std::to_string(ds.n_classes()) + ")");

  metrics::ScoreMatrix sm;
  sm.scores = Matrix<double>(test_idx.size(), static_cast<std::size_t>(ds.n_classes()));
  sm.labels = Matrix<std::uint8_t>(test_idx.size(), static_cast<std::size_t>(ds.n_classes()), 0);
  Rng root(seed);
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    const auto& item = ds.items[test_idx[i]];
    const auto& rep = features.get(item.clip_id, model.repr_kind());
    Rng rng = root.split(item.clip_id);
    const auto p =
        nn::predict_clip(model, rep, segment_seconds, rng, n_segments, log_floor);
    for (std::size_t j = 0; j < p.size(); ++j) sm.scores(i, j) = p[j];
    for (const int l : item.labels) sm.labels(i, static_cast<std::size_t>(l)) = 1;
  }
  return sm;
}

struct EvalOutputs {
  std::map<std::string, metrics::EvalReport> rows;  // keys: m1, m2, ensemble
  std::size_t n_clips = 0;
};

inline void write_eval_reports(const std::string& out_dir, const EvalOutputs& ev) {
  namespace fsys = std::filesystem;
  fsys::create_directories(out_dir);
  nlohmann::json agg;
  agg["n_clips"] = ev.n_clips;
  for (const auto& [row, rep] : ev.rows)
    for (const auto& [metric, value] : rep.overall) agg["models"][row][metric] = value;
  {
    std::ofstream f((fsys::path(out_dir) / "aggregate.json").string());
    f << agg.dump(2) << '\n';
  }
  std::ofstream csv((fsys::path(out_dir) / "per_class.csv").string());
  csv << "model,metric,class_id,class_name,value,weight\n";
  for (const auto& [row, rep] : ev.rows)
    for (const auto& [metric, rows] : rep.per_class)
      for (const auto& r : rows)
        csv << row << ',' << metric << ',' << r.class_id << ',' << r.class_name << ',' << r.value
            << ',' << r.weight << '\n';
}

/// Metric-vs-epoch curves (falling back to losses when no metrics were
/// logged) and the pseudo-curated count band.
inline void write_history_plots(const std::string& out_dir,
                                const std::vector<filter::HistoryRecord>& history) {
  if (history.empty()) return;
  namespace fsys = std::filesystem;
  fsys::create_directories(out_dir);
  std::vector<double> epochs;
  for (const auto& r : history) epochs.push_back(r.epoch);

  std::vector<std::string> metric_keys;
  for (const auto& [k, v] : history.back().metrics) metric_keys.push_back(k);
  if (!metric_keys.empty()) {
    report::SvgChart chart("test metrics over training", "epoch", "metric");
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
    int ci = 0;
    for (const auto& key : metric_keys) {
      std::vector<double> xs, ys;
      for (const auto& r : history) {
        const auto it = r.metrics.find(key);
        if (it != r.metrics.end()) {
          xs.push_back(r.epoch);
          ys.push_back(it->second);
        }
      }
      chart.add_line(key, xs, ys, colors[ci++ % 5]);
    }
    chart.write((fsys::path(out_dir) / "metrics_vs_epoch.svg").string());
  }

  {
    report::SvgChart chart("training losses", "epoch", "loss");
    std::vector<double> lc1, ln1, lc2, ln2;
    for (const auto& r : history) {
      lc1.push_back(r.loss_c_1);
      ln1.push_back(r.loss_n_1);
      lc2.push_back(r.loss_c_2);
      ln2.push_back(r.loss_n_2);
    }
    chart.add_line("loss_c_1", epochs, lc1, "#1f77b4");
    chart.add_line("loss_n_1", epochs, ln1, "#aec7e8");
    chart.add_line("loss_c_2", epochs, lc2, "#d62728");
    chart.add_line("loss_n_2", epochs, ln2, "#ff9896");
    chart.write((fsys::path(out_dir) / "losses_vs_epoch.svg").string());
  }

  {
    report::SvgChart chart("pseudo-curated selections", "epoch", "count");
    std::vector<double> p1, p2;
    for (const auto& r : history) {
      p1.push_back(static_cast<double>(r.pseudo_count_1));
      p2.push_back(static_cast<double>(r.pseudo_count_2));
    }
    chart.add_band("pseudo_count_1", epochs, p1, "#2ca02c");
    chart.add_band("pseudo_count_2", epochs, p2, "#98df8a");
    chart.write((fsys::path(out_dir) / "pseudo_counts.svg").string());
  }
}

/// Evaluates the checkpoints of a finished run: per-model rows plus the
/// probability-sum ensemble when two peers exist.
inline EvalOutputs evaluate_run(const std::string& run_dir, const data::BiQualityDataset& test_ds,
                                const data::FeatureStore& features,
                                const std::vector<std::string>& metric_names,
                                double segment_seconds, std::uint64_t seed, double log_floor) {
  namespace fsys = std::filesystem;
  const auto ck1_path = (fsys::path(run_dir) / "model1.ckpt").string();
  require(fsys::exists(ck1_path), Errc::io_error, "missing checkpoint: " + ck1_path);
  auto ck1 = nn::load_checkpoint<float>(ck1_path);
  const auto ck2_path = (fsys::path(run_dir) / "model2.ckpt").string();
  const bool two = fsys::exists(ck2_path);

  EvalOutputs ev;
  auto sm1 = score_test_set(ck1.model, test_ds, features, segment_seconds, seed, log_floor);
  ev.n_clips = sm1.n_clips();
  ev.rows["m1"] = metrics::per_class_report(sm1, metric_names, test_ds.class_names);
  if (two) {
    auto ck2 = nn::load_checkpoint<float>(ck2_path);
    auto sm2 = score_test_set(ck2.model, test_ds, features, segment_seconds, seed, log_floor);
    ev.rows["m2"] = metrics::per_class_report(sm2, metric_names, test_ds.class_names);
    metrics::ScoreMatrix ens;
    ens.labels = sm1.labels;
    ens.scores = Matrix<double>(sm1.scores.rows(), sm1.scores.cols());
    for (std::size_t i = 0; i < ens.scores.rows(); ++i)
      for (std::size_t j = 0; j < ens.scores.cols(); ++j)
        ens.scores(i, j) = sm1.scores(i, j) + sm2.scores(i, j);
    ev.rows["ensemble"] = metrics::per_class_report(ens, metric_names, test_ds.class_names);
  }
  return ev;
}

}  // namespace crossfilter::run
