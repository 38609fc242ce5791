#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "crossfilter/core/matrix.hpp"
#include "crossfilter/dsp/fft.hpp"
#include "crossfilter/dsp/types.hpp"

namespace crossfilter::dsp {

/// Periodic Hann window of length n.
inline std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(6.283185307179586476925286766559 * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

inline std::size_t stft_window_samples(double sample_rate, const FrameConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.frame_width_seconds * sample_rate));
}

/// Frame count under the centered convention: ceil(duration / hop). The tiny
/// slack keeps e.g. 4 s / 5 ms from landing on 801 through representation
/// error in hop_seconds * sample_rate.
inline std::size_t stft_num_frames(std::size_t n_samples, double sample_rate,
                                   double hop_seconds) {
  const double hop_samples = hop_seconds * sample_rate;
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(n_samples) / hop_samples - 1e-9));
}

/// Short-time power spectrum at full FFT resolution: [n_fft/2+1 x n_frames],
/// entries |X|^2 (no log, no normalization). Frame t is centered at sample
/// round(t * hop_seconds * sample_rate); out-of-range samples read as zero.
/// Throws CLIP_TOO_SHORT when the clip cannot fill one analysis window.
inline MatD stft_power(const AudioClip& clip, const FrameConfig& cfg) {
  clip.validate();
  cfg.validate();
  const std::size_t win = stft_window_samples(clip.sample_rate, cfg);
  require(clip.samples.size() >= win, Errc::clip_too_short,
          clip.clip_id + ": clip shorter than one analysis frame");

  const std::size_t n_fft = next_pow2(win);
  const std::size_t n_out = n_fft / 2 + 1;
  const std::size_t n_frames = stft_num_frames(clip.samples.size(), clip.sample_rate,
                                               cfg.hop_seconds);
  const auto window = hann_periodic(win);
  const double hop_samples = cfg.hop_seconds * clip.sample_rate;
  const FftPlan plan(n_fft);

  MatD out(n_out, n_frames);
  std::vector<std::complex<double>> buf(n_fft);
  const auto n = static_cast<long long>(clip.samples.size());
  for (std::size_t t = 0; t < n_frames; ++t) {
    const long long center = std::llround(static_cast<double>(t) * hop_samples);
    const long long start = center - static_cast<long long>(win) / 2;
    for (std::size_t i = 0; i < win; ++i) {
      const long long src = start + static_cast<long long>(i);
      const double s = (src >= 0 && src < n) ? clip.samples[static_cast<std::size_t>(src)] : 0.0;
      buf[i] = {s * window[i], 0.0};
    }
    for (std::size_t i = win; i < n_fft; ++i) buf[i] = {0.0, 0.0};
    plan.forward(buf);
    for (std::size_t k = 0; k < n_out; ++k) out(k, t) = std::norm(buf[k]);
  }
  return out;
}

}  // namespace crossfilter::dsp
