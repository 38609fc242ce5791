#pragma once

#include <string>
#include <unordered_map>

#include "crossfilter/core/error.hpp"
#include "crossfilter/dsp/feature_cache.hpp"
#include "crossfilter/dsp/types.hpp"

namespace crossfilter::data {

/// In-memory map of precomputed representations keyed by (clip_id, kind).
/// Read-only during training, so concurrent readers are safe.
class FeatureStore {
 public:
  void put(dsp::TimeFreqRep rep) {
    maps_[static_cast<std::size_t>(rep.kind)][rep.clip_id] = std::move(rep);
  }

  bool has(const std::string& clip_id, dsp::RepKind kind) const {
    const auto& m = maps_[static_cast<std::size_t>(kind)];
    return m.find(clip_id) != m.end();
  }

  const dsp::TimeFreqRep& get(const std::string& clip_id, dsp::RepKind kind) const {
    const auto& m = maps_[static_cast<std::size_t>(kind)];
    const auto it = m.find(clip_id);
    require(it != m.end(), Errc::io_error,
            std::string("feature missing for clip ") + clip_id + " kind " +
                dsp::rep_kind_name(kind) + "; run the featurize step first");
    return it->second;
  }

  std::size_t size(dsp::RepKind kind) const {
    return maps_[static_cast<std::size_t>(kind)].size();
  }

  /// Loads a cache entry from disk into the store.
  void load_from_cache(const std::string& cache_dir, const std::string& clip_id,
                       dsp::RepKind kind) {
    put(dsp::read_feature(dsp::feature_cache_path(cache_dir, clip_id, kind), clip_id));
  }

 private:
  std::unordered_map<std::string, dsp::TimeFreqRep> maps_[4];
};

}  // namespace crossfilter::data
