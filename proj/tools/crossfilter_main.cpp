// Command-line front end: synth | featurize | train | eval | report.
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crossfilter/data/synth.hpp"
#include "crossfilter/run/evaluate.hpp"
#include "crossfilter/run/experiment.hpp"
#include "crossfilter/run/featurize.hpp"

namespace fs = std::filesystem;
using namespace crossfilter;

namespace {

std::string default_cache_dir(const std::string& manifest) {
  if (const char* env = std::getenv("CROSSFILTER_CACHE_DIR")) return env;
  return (fs::path(manifest).parent_path() / "features").string();
}

std::string classes_beside(const std::string& manifest, const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  const auto guess = fs::path(manifest).parent_path() / "classes.txt";
  return fs::exists(guess) ? guess.string() : std::string{};
}

std::vector<dsp::RepKind> parse_kinds(const std::string& csv) {
  std::vector<dsp::RepKind> kinds;
  for (const auto& name : split_csv_line(csv, ','))
    if (!name.empty()) kinds.push_back(dsp::parse_rep_kind(name));
  require(!kinds.empty(), Errc::config_error, "no representation kinds given");
  return kinds;
}

void add_frame_flags(CLI::App* app, dsp::FrameConfig& frame) {
  app->add_option("--frame-width", frame.frame_width_seconds, "analysis frame width in seconds");
  app->add_option("--hop", frame.hop_seconds, "frame hop in seconds");
  app->add_option("--cqt-hop", frame.cqt_hop_samples, "constant-Q hop in samples");
  app->add_option("--n-bins", frame.n_bins, "frequency bins per representation");
  app->add_option("--log-floor", frame.log_floor, "floor applied inside logs");
  app->add_option("--cqt-fmin", frame.cqt_fmin_hz, "lowest constant-Q center frequency (Hz)");
  app->add_option("--cqt-bins-per-octave", frame.cqt_bins_per_octave, "constant-Q bins per octave");
}

struct EvalCliArgs {
  std::string run_dir, test_manifest, classes_file, cache_dir, out_dir, metrics = "";
  std::uint64_t seed = 7;
  double segment_seconds = 4.0;
  dsp::FrameConfig frame;
};

void run_eval(const EvalCliArgs& a) {
  const auto classes = classes_beside(a.test_manifest, a.classes_file);
  auto test_ds = data::load_manifest(a.test_manifest, classes);
  require(!test_ds.indices(data::Subset::test).empty(), Errc::empty_test,
          "test manifest has no test rows");

  auto ck1 = nn::load_checkpoint<float>((fs::path(a.run_dir) / "model1.ckpt").string());
  std::vector<dsp::RepKind> kinds = {ck1.model.repr_kind()};
  const auto ck2_path = (fs::path(a.run_dir) / "model2.ckpt").string();
  if (fs::exists(ck2_path)) {
    const auto k2 = nn::load_checkpoint<float>(ck2_path).model.repr_kind();
    if (k2 != kinds[0]) kinds.push_back(k2);
  }
  const auto cache = a.cache_dir.empty() ? default_cache_dir(a.test_manifest) : a.cache_dir;
  run::featurize_manifest(test_ds, kinds, a.frame, cache);
  const auto features = run::load_feature_store(test_ds, kinds, cache, {data::Subset::test});

  std::vector<std::string> metric_names;
  if (a.metrics.empty()) {
    metric_names = test_ds.multilabel ? std::vector<std::string>{"lwlrap"}
                                      : std::vector<std::string>{"accuracy", "map3", "lwlrap"};
  } else {
    for (const auto& m : split_csv_line(a.metrics, ',')) metric_names.push_back(m);
  }

  const auto out_dir = a.out_dir.empty() ? (fs::path(a.run_dir) / "eval").string() : a.out_dir;
  const auto ev = run::evaluate_run(a.run_dir, test_ds, features, metric_names, a.segment_seconds,
                                    a.seed, a.frame.log_floor);
  run::write_eval_reports(out_dir, ev);
  const auto history_path = (fs::path(a.run_dir) / "history.jsonl").string();
  if (fs::exists(history_path)) run::write_history_plots(out_dir, run::read_history(history_path));

  for (const auto& [row, rep] : ev.rows) {
    std::cout << row << ":";
    for (const auto& [metric, value] : rep.overall) std::cout << ' ' << metric << '=' << value;
    std::cout << '\n';
  }
  std::cout << "eval written to " << out_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-wise noise filtering for audio tagging"};
  app.require_subcommand(1);

  // ---- synth ----
  synth::SynthSpec spec;
  std::string synth_out;
  std::string noise_mode = "symmetric";
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic bi-quality dataset");
  cmd_synth->add_option("--out", synth_out, "output directory")->required();
  cmd_synth->add_option("--classes", spec.classes, "number of classes");
  cmd_synth->add_option("--curated-per-class", spec.curated_per_class, "curated clips per class");
  cmd_synth->add_option("--noisy-per-class", spec.noisy_per_class, "noisy clips per class");
  cmd_synth->add_option("--test-per-class", spec.test_per_class, "test clips per class");
  cmd_synth->add_option("--noise-ratio", spec.noise_ratio, "label corruption rate in [0,1)")
      ->check(CLI::Range(0.0, 0.9999).description("noise-ratio must lie in [0,1)"));
  cmd_synth->add_option("--clip-seconds-min", spec.clip_seconds_min, "shortest clip length");
  cmd_synth->add_option("--clip-seconds-max", spec.clip_seconds_max, "longest clip length");
  cmd_synth->add_option("--noise-mode", noise_mode, "symmetric | confusion")
      ->check(CLI::IsMember({"symmetric", "confusion"}));
  cmd_synth->add_flag("--multilabel", spec.multilabel, "attach 1-2 labels per clip");
  cmd_synth->add_option("--seed", spec.seed, "generation seed");

  // ---- featurize ----
  std::string fz_manifest, fz_classes, fz_cache, fz_kinds = "logmel,cqt";
  dsp::FrameConfig fz_frame;
  unsigned fz_threads = 0;
  auto* cmd_featurize = app.add_subcommand("featurize", "extract and cache representations");
  cmd_featurize->add_option("--manifest", fz_manifest, "manifest csv")->required();
  cmd_featurize->add_option("--classes", fz_classes, "classes.txt (defaults to beside manifest)");
  cmd_featurize->add_option("--cache", fz_cache,
                            "cache directory (default $CROSSFILTER_CACHE_DIR or <manifest>/features)");
  cmd_featurize->add_option("--kinds", fz_kinds, "comma list of spec,logmel,mfcc,cqt");
  cmd_featurize->add_option("--threads", fz_threads, "worker threads (0 = auto)");
  add_frame_flags(cmd_featurize, fz_frame);

  // ---- train ----
  run::ExperimentConfig xc;
  std::string tr_method = "crossfilter", tr_rep1 = "logmel", tr_rep2 = "cqt", tr_agree = "c";
  std::string tr_channels;
  bool tr_no_filter = false, tr_resume = false, tr_no_mixup = false, tr_no_specaug = false;
  auto* cmd_train = app.add_subcommand("train", "train a model per the selected method");
  cmd_train->add_option("--manifest", xc.manifest, "train manifest csv")->required();
  cmd_train->add_option("--classes", xc.classes_file, "classes.txt (defaults to beside manifest)");
  cmd_train->add_option("--cache", xc.features_dir, "feature cache directory");
  cmd_train->add_option("--out", xc.out_dir, "run output directory")->required();
  cmd_train->add_option("--method", tr_method, "crossfilter|coteaching|pseudolabel|lq|cce")
      ->check(CLI::IsMember({"crossfilter", "coteaching", "pseudolabel", "lq", "cce"}));
  cmd_train->add_option("--rep1", tr_rep1, "representation for model 1");
  cmd_train->add_option("--rep2", tr_rep2, "representation for model 2");
  cmd_train->add_option("--epochs", xc.train.epochs, "training epochs");
  cmd_train->add_option("--batch-size", xc.train.batch_size, "mini-batch size");
  cmd_train->add_option("--seed", xc.seed, "training seed");
  cmd_train->add_option("--lambda", xc.train.loss.lambda, "noisy-loss weight")
      ->check(CLI::NonNegativeNumber.description("lambda must be nonnegative"));
  cmd_train->add_option("--q", xc.train.loss.q, "noisy-robust loss exponent in (0,1]");
  cmd_train->add_option("--segment-seconds", xc.train.segment_seconds, "training crop length");
  cmd_train->add_option("--channels", tr_channels, "backbone channels, e.g. 16,32,64,128");
  cmd_train->add_option("--lr-peak", xc.train.lr.lr_peak, "peak learning rate");
  cmd_train->add_option("--lr-min-warm", xc.train.lr.lr_min_warm, "warmup start learning rate");
  cmd_train->add_option("--lr-final", xc.train.lr.lr_final, "final annealed learning rate");
  cmd_train->add_option("--warmup-fraction", xc.train.lr.warmup_fraction, "warmup share of steps");
  cmd_train->add_option("--weight-decay", xc.train.weight_decay, "decoupled L2 coefficient");
  cmd_train->add_flag("--no-mixup", tr_no_mixup, "disable mixup");
  cmd_train->add_flag("--no-specaugment", tr_no_specaug, "disable masking augmentation");
  cmd_train->add_flag("--no-filter", tr_no_filter, "disable noise filtering (ablation)");
  cmd_train->add_option("--ramp-fraction", xc.filter_opts.ramp_fraction,
                        "share of epochs over which the class cap ramps");
  cmd_train->add_option("--agree-head", tr_agree, "agreement source head: c | n")
      ->check(CLI::IsMember({"c", "n"}));
  cmd_train->add_option("--epsilon", xc.coteaching.epsilon, "co-teaching assumed noise ratio")
      ->check(CLI::Range(0.0, 0.9999).description("epsilon must lie in [0,1)"));
  cmd_train->add_option("--metrics-every", xc.metrics_every,
                        "evaluate the test manifest every N epochs (0 = never)");
  cmd_train->add_option("--checkpoint-every", xc.checkpoint_every,
                        "write resumable checkpoints every N epochs");
  cmd_train->add_option("--stop-after", xc.stop_after_epochs,
                        "stop this invocation after N epochs (resume later with --resume)");
  cmd_train->add_option("--test-manifest", xc.test_manifest, "held-out manifest for --metrics-every");
  cmd_train->add_flag("--resume", tr_resume, "continue from run_state.json in --out");
  add_frame_flags(cmd_train, xc.frame);

  // ---- eval ----
  EvalCliArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "score checkpoints on a test manifest");
  cmd_eval->add_option("--run", ev.run_dir, "run directory with checkpoints")->required();
  cmd_eval->add_option("--test-manifest", ev.test_manifest, "manifest with test rows")->required();
  cmd_eval->add_option("--classes", ev.classes_file, "classes.txt (defaults to beside manifest)");
  cmd_eval->add_option("--cache", ev.cache_dir, "feature cache directory");
  cmd_eval->add_option("--out", ev.out_dir, "report directory (default <run>/eval)");
  cmd_eval->add_option("--metrics", ev.metrics, "comma list of accuracy,map3,lwlrap");
  cmd_eval->add_option("--seed", ev.seed, "segment-sampling seed");
  cmd_eval->add_option("--segment-seconds", ev.segment_seconds, "inference crop length");
  add_frame_flags(cmd_eval, ev.frame);

  // ---- report ----
  std::string rp_run, rp_out;
  auto* cmd_report = app.add_subcommand("report", "regenerate plots from a run's history");
  cmd_report->add_option("--run", rp_run, "run directory with history.jsonl")->required();
  cmd_report->add_option("--out", rp_out, "plot directory (default <run>/eval)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_synth->parsed()) {
      spec.noise_mode =
          noise_mode == "confusion" ? synth::NoiseMode::confusion : synth::NoiseMode::symmetric;
      const auto res = synth::generate(spec, synth_out);
      std::cout << "wrote " << res.dataset.items.size() << " clips under " << synth_out << '\n';
    } else if (cmd_featurize->parsed()) {
      const auto classes = classes_beside(fz_manifest, fz_classes);
      const auto ds = data::load_manifest(fz_manifest, classes);
      const auto cache = fz_cache.empty() ? default_cache_dir(fz_manifest) : fz_cache;
      const auto stats =
          run::featurize_manifest(ds, parse_kinds(fz_kinds), fz_frame, cache, fz_threads);
      std::cout << "computed " << stats.computed << " features, skipped " << stats.skipped
                << " up-to-date entries in " << cache << '\n';
    } else if (cmd_train->parsed()) {
      xc.method = run::parse_method(tr_method);
      xc.rep1 = dsp::parse_rep_kind(tr_rep1);
      xc.rep2 = dsp::parse_rep_kind(tr_rep2);
      xc.filter_opts.filter_enabled = !tr_no_filter;
      xc.filter_opts.agree_on_noisy_head = tr_agree == "n";
      xc.train.use_mixup = !tr_no_mixup;
      xc.train.use_specaugment = !tr_no_specaug;
      xc.train.log_floor = xc.frame.log_floor;
      xc.train.seed = xc.seed;
      if (!tr_channels.empty()) {
        xc.train.channels.clear();
        for (const auto& c : split_csv_line(tr_channels, ','))
          xc.train.channels.push_back(std::stoi(c));
      }
      if (xc.method == run::Method::lq && !cmd_train->count("--q")) xc.train.loss.q = 0.7;
      xc.classes_file = classes_beside(xc.manifest, xc.classes_file);
      if (xc.features_dir.empty()) xc.features_dir = default_cache_dir(xc.manifest);
      xc.validate();

      auto ds = data::load_manifest(xc.manifest, xc.classes_file);
      std::vector<dsp::RepKind> kinds = {xc.rep1};
      if (run::method_uses_two_models(xc.method) && xc.method == run::Method::crossfilter &&
          xc.rep2 != xc.rep1)
        kinds.push_back(xc.rep2);
      run::featurize_manifest(ds, kinds, xc.frame, xc.features_dir);
      auto features = run::load_feature_store(ds, kinds, xc.features_dir,
                                              {data::Subset::curated, data::Subset::noisy});

      if (xc.metrics_every > 0 && !xc.test_manifest.empty()) {
        auto test_ds = data::load_manifest(xc.test_manifest, xc.classes_file);
        run::featurize_manifest(test_ds, kinds, xc.frame, xc.features_dir);
        auto test_features =
            run::load_feature_store(test_ds, kinds, xc.features_dir, {data::Subset::test});
        auto hook = [&, test_ds, segment = xc.train.segment_seconds, seed = xc.seed,
                     floor = xc.frame.log_floor, test_features = std::move(test_features)](
                        nn::DualHeadModel<float>& m1, nn::DualHeadModel<float>& m2) {
          std::map<std::string, double> out;
          auto sm1 = run::score_test_set(m1, test_ds, test_features, segment, seed, floor);
          auto sm2 = run::score_test_set(m2, test_ds, test_features, segment, seed, floor);
          metrics::ScoreMatrix ens;
          ens.labels = sm1.labels;
          ens.scores = Matrix<double>(sm1.scores.rows(), sm1.scores.cols());
          for (std::size_t i = 0; i < ens.scores.rows(); ++i)
            for (std::size_t j = 0; j < ens.scores.cols(); ++j)
              ens.scores(i, j) = sm1.scores(i, j) + sm2.scores(i, j);
          if (test_ds.multilabel) {
            out["lwlrap_1"] = metrics::lwlrap(sm1).overall;
            out["lwlrap_2"] = metrics::lwlrap(sm2).overall;
            out["lwlrap_ens"] = metrics::lwlrap(ens).overall;
          } else {
            out["acc_1"] = metrics::accuracy(sm1);
            out["acc_2"] = metrics::accuracy(sm2);
            out["acc_ens"] = metrics::accuracy(ens);
          }
          return out;
        };
        const auto result = run::run_training(xc, ds, features, tr_resume, hook);
        std::cout << "trained " << result.history.size() << " epochs; outputs in " << xc.out_dir
                  << '\n';
      } else {
        const auto result = run::run_training(xc, ds, features, tr_resume);
        std::cout << "trained " << result.history.size() << " epochs; outputs in " << xc.out_dir
                  << '\n';
      }
    } else if (cmd_eval->parsed()) {
      run_eval(ev);
    } else if (cmd_report->parsed()) {
      const auto history_path = (fs::path(rp_run) / "history.jsonl").string();
      require(fs::exists(history_path), Errc::io_error, "missing history: " + history_path);
      const auto out = rp_out.empty() ? (fs::path(rp_run) / "eval").string() : rp_out;
      run::write_history_plots(out, run::read_history(history_path));
      std::cout << "plots written to " << out << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return (e.code() == Errc::config_error || e.code() == Errc::parse_error) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
