#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "crossfilter/core/matrix.hpp"
#include "crossfilter/core/rng.hpp"
#include "crossfilter/dsp/cqt.hpp"
#include "crossfilter/dsp/mel.hpp"
#include "crossfilter/dsp/stft.hpp"
#include "crossfilter/dsp/types.hpp"

namespace crossfilter::dsp {

/// Linear-power spectrogram, frequency axis mean-pooled down to cfg.n_bins.
/// Pool group g covers full-resolution rows [floor(g*B/n_bins),
/// floor((g+1)*B/n_bins)) where B = n_fft/2 + 1. No log is applied.
inline TimeFreqRep power_spectrogram(const AudioClip& clip, const FrameConfig& cfg) {
  const MatD full = stft_power(clip, cfg);
  const std::size_t bins = static_cast<std::size_t>(cfg.n_bins);
  const std::size_t big = full.rows();
  require(big >= bins, Errc::config_error, "n_bins exceeds the FFT resolution");

  TimeFreqRep rep;
  rep.kind = RepKind::spec;
  rep.hop_seconds = cfg.hop_seconds;
  rep.clip_id = clip.clip_id;
  rep.values = MatF(bins, full.cols());
  for (std::size_t g = 0; g < bins; ++g) {
    const std::size_t lo = g * big / bins;
    const std::size_t hi = (g + 1) * big / bins;
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (std::size_t t = 0; t < full.cols(); ++t) {
      double acc = 0;
      for (std::size_t r = lo; r < hi; ++r) acc += full(r, t);
      rep.values(g, t) = static_cast<float>(acc * inv);
    }
  }
  return rep;
}

/// Range of full-resolution spectrum rows pooled into SPEC bin g; exposed so
/// tests can build the bin-to-frequency map independently.
inline std::pair<std::size_t, std::size_t> spec_pool_group(std::size_t g, std::size_t full_bins,
                                                           std::size_t n_bins) {
  return {g * full_bins / n_bins, (g + 1) * full_bins / n_bins};
}

/// Log mel spectrogram: cfg.n_bins triangular HTK-mel filters over the
/// full-resolution power spectrum, then ln with floor.
inline TimeFreqRep logmel(const AudioClip& clip, const FrameConfig& cfg) {
  const MatD full = stft_power(clip, cfg);
  const MatD fb = mel_filterbank(cfg.n_bins, full.rows(), clip.sample_rate);

  TimeFreqRep rep;
  rep.kind = RepKind::logmel;
  rep.hop_seconds = cfg.hop_seconds;
  rep.clip_id = clip.clip_id;
  rep.values = MatF(static_cast<std::size_t>(cfg.n_bins), full.cols());
  for (std::size_t m = 0; m < rep.values.rows(); ++m) {
    // triangular filters are narrow; apply only their support
    const double* w = fb.row(m);
    std::size_t lo = 0, hi = full.rows();
    while (lo < hi && w[lo] == 0.0) ++lo;
    while (hi > lo && w[hi - 1] == 0.0) --hi;
    for (std::size_t t = 0; t < full.cols(); ++t) {
      double acc = 0;
      for (std::size_t k = lo; k < hi; ++k) acc += w[k] * full(k, t);
      rep.values(m, t) = static_cast<float>(std::log(std::max(acc, cfg.log_floor)));
    }
  }
  return rep;
}

/// MFCC: orthonormal DCT-II along the mel axis of the log mel spectrogram,
/// keeping all cfg.n_bins coefficients.
inline TimeFreqRep mfcc(const AudioClip& clip, const FrameConfig& cfg) {
  TimeFreqRep lm = logmel(clip, cfg);
  const std::size_t n = lm.n_bins();
  const MatD dct = dct2_orthonormal(n);

  TimeFreqRep rep;
  rep.kind = RepKind::mfcc;
  rep.hop_seconds = cfg.hop_seconds;
  rep.clip_id = clip.clip_id;
  rep.values = MatF(n, lm.n_frames());
  for (std::size_t t = 0; t < lm.n_frames(); ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0;
      const double* row = dct.row(k);
      for (std::size_t i = 0; i < n; ++i) acc += row[i] * static_cast<double>(lm.values(i, t));
      rep.values(k, t) = static_cast<float>(acc);
    }
  }
  return rep;
}

/// Constant-Q log-power transform; builds a kernel bank on the fly. Bulk
/// callers should build the bank once and use cqt_log_power directly.
inline TimeFreqRep cqt(const AudioClip& clip, const FrameConfig& cfg) {
  const auto bank = CqtKernelBank::build(cfg, clip.sample_rate);
  TimeFreqRep rep;
  rep.kind = RepKind::cqt;
  rep.hop_seconds = cfg.cqt_hop_samples / clip.sample_rate;
  rep.clip_id = clip.clip_id;
  rep.values = cqt_log_power(clip, cfg, bank);
  return rep;
}

inline TimeFreqRep compute_representation(const AudioClip& clip, RepKind kind,
                                          const FrameConfig& cfg) {
  switch (kind) {
    case RepKind::spec: return power_spectrogram(clip, cfg);
    case RepKind::logmel: return logmel(clip, cfg);
    case RepKind::mfcc: return mfcc(clip, cfg);
    case RepKind::cqt: return cqt(clip, cfg);
  }
  raise(Errc::config_error, "bad representation kind");
}

/// Fixed-width time window: longer inputs get a uniformly random contiguous
/// window; shorter ones are padded symmetrically with the representation's
/// silence value, the odd leftover frame going to the end.
inline TimeFreqRep crop_or_pad(const TimeFreqRep& rep, std::size_t target_frames, Rng& rng,
                               double log_floor = 1e-10) {
  require(target_frames >= 1, Errc::config_error, "target_frames must be >= 1");
  const std::size_t t = rep.n_frames();
  if (t == target_frames) return rep;

  TimeFreqRep out;
  out.kind = rep.kind;
  out.hop_seconds = rep.hop_seconds;
  out.clip_id = rep.clip_id;
  out.values = MatF(rep.n_bins(), target_frames);

  if (t > target_frames) {
    const std::size_t start = static_cast<std::size_t>(rng.uniform_int(t - target_frames + 1));
    for (std::size_t r = 0; r < rep.n_bins(); ++r)
      std::copy_n(rep.values.row(r) + start, target_frames, out.values.row(r));
    return out;
  }

  const std::size_t deficit = target_frames - t;
  const std::size_t front = deficit / 2;
  for (std::size_t r = 0; r < rep.n_bins(); ++r) {
    const float fill = silence_value(rep.kind, r, rep.n_bins(), log_floor);
    float* dst = out.values.row(r);
    std::fill_n(dst, front, fill);
    std::copy_n(rep.values.row(r), t, dst + front);
    std::fill_n(dst + front + t, target_frames - front - t, fill);
  }
  return out;
}

/// Frames covering `seconds` of audio in this representation's time base.
inline std::size_t frames_for_seconds(const TimeFreqRep& rep, double seconds) {
  return static_cast<std::size_t>(std::ceil(seconds / rep.hop_seconds - 1e-9));
}

}  // namespace crossfilter::dsp
