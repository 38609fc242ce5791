#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "crossfilter/core/matrix.hpp"
#include "crossfilter/dsp/stft.hpp"
#include "crossfilter/dsp/types.hpp"

namespace crossfilter::dsp {

/// Time-domain constant-Q kernels: one Hann-windowed complex exponential per
/// bin, length Q * sr / f_k, normalized by window length. Building the bank
/// once and reusing it across clips dominates the cost of bulk extraction.
struct CqtKernelBank {
  double sample_rate = 0;
  std::vector<double> center_hz;
  std::vector<std::vector<float>> re, im;

  static double quality_factor(int bins_per_octave) {
    return 1.0 / (std::pow(2.0, 1.0 / bins_per_octave) - 1.0);
  }

  static CqtKernelBank build(const FrameConfig& cfg, double sample_rate) {
    cfg.validate();
    CqtKernelBank bank;
    bank.sample_rate = sample_rate;
    const double q = quality_factor(cfg.cqt_bins_per_octave);
    const double two_pi = 6.283185307179586476925286766559;
    bank.center_hz.resize(static_cast<std::size_t>(cfg.n_bins));
    bank.re.resize(bank.center_hz.size());
    bank.im.resize(bank.center_hz.size());
    for (int k = 0; k < cfg.n_bins; ++k) {
      const double fk =
          cfg.cqt_fmin_hz * std::pow(2.0, static_cast<double>(k) / cfg.cqt_bins_per_octave);
      require(fk < sample_rate / 2.0, Errc::config_error,
              "CQT bin exceeds Nyquist; lower n_bins or cqt_fmin_hz");
      bank.center_hz[static_cast<std::size_t>(k)] = fk;
      const auto len = static_cast<std::size_t>(std::llround(q * sample_rate / fk));
      const auto window = hann_periodic(len);
      auto& re = bank.re[static_cast<std::size_t>(k)];
      auto& im = bank.im[static_cast<std::size_t>(k)];
      re.resize(len);
      im.resize(len);
      const double centre = static_cast<double>(len) / 2.0;
      for (std::size_t n = 0; n < len; ++n) {
        const double phase = -two_pi * fk * (static_cast<double>(n) - centre) / sample_rate;
        re[n] = static_cast<float>(window[n] * std::cos(phase) / static_cast<double>(len));
        im[n] = static_cast<float>(window[n] * std::sin(phase) / static_cast<double>(len));
      }
    }
    return bank;
  }
};

inline std::size_t cqt_num_frames(std::size_t n_samples, int hop_samples) {
  return static_cast<std::size_t>(
      (n_samples + static_cast<std::size_t>(hop_samples) - 1) / static_cast<std::size_t>(hop_samples));
}

/// Log-power constant-Q transform. Frame t is centered at sample
/// t * cqt_hop_samples; kernel overhang reads zeros. Values are
/// ln(max(|z|^2, log_floor)).
inline MatF cqt_log_power(const AudioClip& clip, const FrameConfig& cfg,
                          const CqtKernelBank& bank) {
  clip.validate();
  require(bank.sample_rate == clip.sample_rate, Errc::config_error,
          "kernel bank sample rate mismatch for clip " + clip.clip_id);
  // The shortest (highest-frequency) kernel sets the minimum usable length.
  require(!bank.re.empty(), Errc::config_error, "empty CQT kernel bank");
  require(clip.samples.size() >= bank.re.back().size(), Errc::clip_too_short,
          clip.clip_id + ": clip shorter than one analysis frame");

  const std::size_t n_frames = cqt_num_frames(clip.samples.size(), cfg.cqt_hop_samples);
  MatF out(bank.re.size(), n_frames);
  const auto n = static_cast<long long>(clip.samples.size());
  for (std::size_t k = 0; k < bank.re.size(); ++k) {
    const auto& re = bank.re[k];
    const auto& im = bank.im[k];
    const auto len = static_cast<long long>(re.size());
    for (std::size_t t = 0; t < n_frames; ++t) {
      const long long center = static_cast<long long>(t) * cfg.cqt_hop_samples;
      const long long start = center - len / 2;
      const long long lo = std::max<long long>(0, -start);
      const long long hi = std::min<long long>(len, n - start);
      double acc_re = 0.0, acc_im = 0.0;
      const float* x = clip.samples.data() + start;
      for (long long i = lo; i < hi; ++i) {
        const float s = x[i];
        acc_re += s * re[static_cast<std::size_t>(i)];
        acc_im += s * im[static_cast<std::size_t>(i)];
      }
      const double power = acc_re * acc_re + acc_im * acc_im;
      out(k, t) = static_cast<float>(std::log(std::max(power, cfg.log_floor)));
    }
  }
  return out;
}

}  // namespace crossfilter::dsp
