#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "crossfilter/core/matrix.hpp"

namespace crossfilter::dsp {

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filterbank [n_mels x n_fft_bins]: unit-peak filters whose
/// centers are equally spaced on the mel scale from 0 Hz to Nyquist.
/// n_fft_bins is n_fft/2 + 1; bin k sits at k * sample_rate / n_fft Hz.
inline MatD mel_filterbank(int n_mels, std::size_t n_fft_bins, double sample_rate) {
  const std::size_t n_fft = 2 * (n_fft_bins - 1);
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges_hz(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges_hz.size(); ++i)
    edges_hz[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  MatD fb(static_cast<std::size_t>(n_mels), n_fft_bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges_hz[static_cast<std::size_t>(m)];
    const double mid = edges_hz[static_cast<std::size_t>(m) + 1];
    const double hi = edges_hz[static_cast<std::size_t>(m) + 2];
    for (std::size_t k = 0; k < n_fft_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double v = 0.0;
      if (f > lo && f < mid) v = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) v = (hi - f) / (hi - mid);
      fb(static_cast<std::size_t>(m), k) = v;
    }
  }
  return fb;
}

/// Center frequency (Hz) of mel filter m out of n_mels.
inline double mel_filter_center_hz(int m, int n_mels, double sample_rate) {
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  return mel_to_hz(mel_max * static_cast<double>(m + 1) / static_cast<double>(n_mels + 1));
}

/// Orthonormal DCT-II matrix [n x n]; inverse is the transpose.
inline MatD dct2_orthonormal(std::size_t n) {
  MatD m(n, n);
  const double pi = 3.14159265358979323846264338327950288;
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      m(k, i) = scale * std::cos(pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                                 (2.0 * static_cast<double>(n)));
  }
  return m;
}

}  // namespace crossfilter::dsp
