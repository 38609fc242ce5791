#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "crossfilter/dsp/types.hpp"

namespace crossfilter::dsp {

/// Windowed-sinc rate conversion (polyphase evaluation at each output tap).
/// 24 zero crossings per side, Hann-windowed, cutoff at the lower Nyquist.
/// Good enough to bring incidental non-44.1 kHz input into the pipeline; the
/// synthesiser always emits 44.1 kHz directly.
inline AudioClip resample(const AudioClip& clip, double target_rate) {
  clip.validate();
  if (clip.sample_rate == target_rate) return clip;

  const double ratio = target_rate / clip.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // relative to source Nyquist
  const int half_taps = 24;
  const double support = half_taps / cutoff;
  const auto n_out = static_cast<std::size_t>(
      std::floor(static_cast<double>(clip.samples.size()) * ratio));
  const double pi = 3.14159265358979323846264338327950288;

  AudioClip out;
  out.sample_rate = target_rate;
  out.clip_id = clip.clip_id;
  out.samples.resize(std::max<std::size_t>(n_out, 1));
  const auto n_in = static_cast<long long>(clip.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double pos = static_cast<double>(i) / ratio;
    const auto lo = static_cast<long long>(std::ceil(pos - support));
    const auto hi = static_cast<long long>(std::floor(pos + support));
    double acc = 0.0;
    for (long long j = std::max<long long>(0, lo); j <= std::min(n_in - 1, hi); ++j) {
      const double x = (static_cast<double>(j) - pos) * cutoff;
      double sinc = 1.0;
      if (x != 0.0) sinc = std::sin(pi * x) / (pi * x);
      const double win = 0.5 + 0.5 * std::cos(pi * x / half_taps);
      acc += clip.samples[static_cast<std::size_t>(j)] * sinc * win * cutoff;
    }
    out.samples[i] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace crossfilter::dsp
