#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crossfilter/core/parallel.hpp"
#include "crossfilter/core/wav.hpp"
#include "crossfilter/data/dataset.hpp"
#include "crossfilter/data/feature_store.hpp"
#include "crossfilter/dsp/feature_cache.hpp"
#include "crossfilter/dsp/representations.hpp"
#include "crossfilter/dsp/resample.hpp"

namespace crossfilter::run {

struct FeaturizeStats {
  std::size_t computed = 0;
  std::size_t skipped = 0;
};

inline dsp::AudioClip load_clip(const data::DatasetItem& item, double target_rate = 44100.0) {
  WavData wav;
  try {
    wav = read_wav(item.path);
  } catch (const Error& e) {
    // unreadable audio is a runtime data failure, tagged with the clip
    raise(Errc::io_error, "clip " + item.clip_id + ": " + e.what());
  }
  dsp::AudioClip clip;
  clip.samples = std::move(wav.samples);
  clip.sample_rate = wav.sample_rate;
  clip.clip_id = item.clip_id;
  if (clip.sample_rate != target_rate) clip = dsp::resample(clip, target_rate);
  return clip;
}

/// Computes and caches every requested (clip, kind) pair; entries that are
/// already cached with the right geometry are skipped, so a second run does
/// no work. Clip-parallel and deterministic (one output file per task).
inline FeaturizeStats featurize_manifest(const data::BiQualityDataset& ds,
                                         const std::vector<dsp::RepKind>& kinds,
                                         const dsp::FrameConfig& cfg, const std::string& cache_dir,
                                         unsigned n_threads = 0) {
  cfg.validate();
  std::filesystem::create_directories(cache_dir);

  struct Task {
    const data::DatasetItem* item;
    dsp::RepKind kind;
  };
  std::vector<Task> todo;
  FeaturizeStats stats;
  for (const auto& item : ds.items) {
    for (const auto kind : kinds) {
      const auto path = dsp::feature_cache_path(cache_dir, item.clip_id, kind);
      if (dsp::feature_cache_fresh(path, kind, cfg.n_bins)) ++stats.skipped;
      else todo.push_back({&item, kind});
    }
  }

  bool need_cqt = false;
  for (const auto& t : todo) need_cqt |= t.kind == dsp::RepKind::cqt;
  dsp::CqtKernelBank bank;
  if (need_cqt) bank = dsp::CqtKernelBank::build(cfg, 44100.0);

  parallel_for(
      todo.size(),
      [&](std::size_t i) {
        const auto& t = todo[i];
        const auto clip = load_clip(*t.item);
        dsp::TimeFreqRep rep;
        if (t.kind == dsp::RepKind::cqt) {
          rep.kind = dsp::RepKind::cqt;
          rep.hop_seconds = cfg.cqt_hop_samples / clip.sample_rate;
          rep.clip_id = clip.clip_id;
          rep.values = dsp::cqt_log_power(clip, cfg, bank);
        } else {
          rep = dsp::compute_representation(clip, t.kind, cfg);
        }
        dsp::write_feature(dsp::feature_cache_path(cache_dir, t.item->clip_id, t.kind), rep);
      },
      n_threads);
  stats.computed = todo.size();
  return stats;
}

/// Loads cached features for the given subsets into memory.
inline data::FeatureStore load_feature_store(const data::BiQualityDataset& ds,
                                             const std::vector<dsp::RepKind>& kinds,
                                             const std::string& cache_dir,
                                             const std::vector<data::Subset>& subsets) {
  data::FeatureStore fs;
  for (const auto& item : ds.items) {
    bool wanted = false;
    for (const auto s : subsets) wanted |= item.subset == s;
    if (!wanted) continue;
    for (const auto kind : kinds) fs.load_from_cache(cache_dir, item.clip_id, kind);
  }
  return fs;
}

}  // namespace crossfilter::run
