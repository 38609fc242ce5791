#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/rng.hpp"
#include "crossfilter/dsp/representations.hpp"
#include "crossfilter/dsp/types.hpp"

namespace crossfilter::nn {

/// A training example after cropping: fixed-width representation plus a soft
/// label vector (one-hot/multi-hot before mixup, convex mixtures after).
struct TrainSample {
  MatF values;
  std::vector<float> label;
  dsp::RepKind kind = dsp::RepKind::logmel;
};

/// Mixup: each item is paired with a random partner from the same batch (a
/// shuffled assignment), a mixing ratio gamma ~ Beta(alpha, alpha) is drawn
/// per pair, and both representations and labels are combined convexly.
inline std::vector<TrainSample> mixup(const std::vector<TrainSample>& batch, Rng& rng,
                                      double alpha) {
  require(!batch.empty(), Errc::empty_train_set, "mixup on an empty batch");
  require(alpha > 0.0, Errc::config_error, "mixup alpha must be positive");
  std::vector<std::size_t> partner(batch.size());
  std::iota(partner.begin(), partner.end(), std::size_t{0});
  rng.shuffle(partner);

  std::vector<TrainSample> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& a = batch[i];
    const auto& b = batch[partner[i]];
    require(a.values.same_shape(b.values) && a.label.size() == b.label.size(),
            Errc::shape_mismatch, "mixup requires uniform shapes within the batch");
    const auto g = static_cast<float>(rng.beta(alpha, alpha));
    TrainSample m;
    m.kind = a.kind;
    m.values = MatF(a.values.rows(), a.values.cols());
    for (std::size_t k = 0; k < m.values.size(); ++k)
      m.values.data()[k] = g * a.values.data()[k] + (1.0f - g) * b.values.data()[k];
    m.label.resize(a.label.size());
    for (std::size_t k = 0; k < m.label.size(); ++k)
      m.label[k] = g * a.label[k] + (1.0f - g) * b.label[k];
    out[i] = std::move(m);
  }
  return out;
}

struct SpecAugmentConfig {
  double max_freq_fraction = 0.10;  // one frequency mask up to this share of bins
  double max_time_fraction = 0.20;  // one time mask up to this share of frames
};

/// One contiguous frequency band and one contiguous time band are erased to
/// the representation's silence value. Widths are uniform on
/// {0..floor(frac*extent)}, positions uniform over the valid range; width 0
/// leaves the input untouched.
inline dsp::TimeFreqRep spec_augment(const dsp::TimeFreqRep& rep, Rng& rng,
                                     const SpecAugmentConfig& cfg, double log_floor = 1e-10) {
  require(cfg.max_freq_fraction > 0.0 && cfg.max_freq_fraction < 1.0 &&
              cfg.max_time_fraction > 0.0 && cfg.max_time_fraction < 1.0,
          Errc::config_error, "mask fractions must lie in (0,1)");
  dsp::TimeFreqRep out = rep;
  const std::size_t bins = rep.n_bins(), frames = rep.n_frames();

  const auto max_fw = static_cast<std::size_t>(cfg.max_freq_fraction * static_cast<double>(bins));
  const std::size_t fw = static_cast<std::size_t>(rng.uniform_int(max_fw + 1));
  const std::size_t f0 = fw < bins ? static_cast<std::size_t>(rng.uniform_int(bins - fw + 1)) : 0;
  for (std::size_t r = f0; r < f0 + fw; ++r) {
    const float fill = dsp::silence_value(rep.kind, r, bins, log_floor);
    float* row = out.values.row(r);
    for (std::size_t t = 0; t < frames; ++t) row[t] = fill;
  }

  const auto max_tw = static_cast<std::size_t>(cfg.max_time_fraction * static_cast<double>(frames));
  const std::size_t tw = static_cast<std::size_t>(rng.uniform_int(max_tw + 1));
  const std::size_t t0 = tw < frames ? static_cast<std::size_t>(rng.uniform_int(frames - tw + 1)) : 0;
  for (std::size_t r = 0; r < bins; ++r) {
    const float fill = dsp::silence_value(rep.kind, r, bins, log_floor);
    float* row = out.values.row(r);
    for (std::size_t t = t0; t < t0 + tw; ++t) row[t] = fill;
  }
  return out;
}

/// In-place variant on a bare matrix (the trainer's hot path).
inline void spec_augment_inplace(MatF& values, dsp::RepKind kind, Rng& rng,
                                 const SpecAugmentConfig& cfg, double log_floor) {
  dsp::TimeFreqRep rep;
  rep.values = std::move(values);
  rep.kind = kind;
  rep = spec_augment(rep, rng, cfg, log_floor);
  values = std::move(rep.values);
}

}  // namespace crossfilter::nn
