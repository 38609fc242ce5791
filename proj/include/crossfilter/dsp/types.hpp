#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/matrix.hpp"

namespace crossfilter::dsp {

enum class RepKind : std::uint8_t { spec = 0, logmel = 1, mfcc = 2, cqt = 3 };

inline const char* rep_kind_name(RepKind k) {
  switch (k) {
    case RepKind::spec: return "spec";
    case RepKind::logmel: return "logmel";
    case RepKind::mfcc: return "mfcc";
    case RepKind::cqt: return "cqt";
  }
  return "?";
}

inline RepKind parse_rep_kind(const std::string& s) {
  if (s == "spec") return RepKind::spec;
  if (s == "logmel") return RepKind::logmel;
  if (s == "mfcc") return RepKind::mfcc;
  if (s == "cqt") return RepKind::cqt;
  raise(Errc::config_error, "unknown representation kind: " + s);
}

/// Mono PCM waveform with its sample rate and identity.
struct AudioClip {
  std::vector<float> samples;  // amplitudes in [-1, 1]
  double sample_rate = 44100.0;
  std::string clip_id;

  double duration_seconds() const { return samples.size() / sample_rate; }

  void validate() const {
    require(sample_rate > 0, Errc::config_error, "sample_rate must be positive: " + clip_id);
    require(!samples.empty(), Errc::config_error, "empty clip: " + clip_id);
    for (float s : samples)
      require(std::isfinite(s), Errc::config_error, "non-finite sample in clip: " + clip_id);
  }
};

/// A frequency-by-time matrix plus the metadata needed to interpret it.
struct TimeFreqRep {
  MatF values;  // [n_bins x n_frames]
  RepKind kind = RepKind::logmel;
  double hop_seconds = 0.005;
  std::string clip_id;

  std::size_t n_bins() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }
};

/// Analysis geometry shared by all representations.
///
/// Frame conventions (documented here; the geometry tests depend on them):
///  - STFT-family frames are centered at t*hop_seconds for t = 0 .. T-1 with
///    T = ceil(duration / hop_seconds); window edges are zero-padded. The
///    hop in samples may be fractional (5 ms at 44.1 kHz = 220.5); centers
///    round to the nearest sample. 4 s at the defaults gives exactly 800
///    frames.
///  - CQT frames are centered at t*cqt_hop_samples with T =
///    ceil(n_samples / cqt_hop_samples); 4 s at 44.1 kHz and hop 256 gives
///    690 frames.
///  - Log compression is ln(max(power, log_floor)); silence saturates to
///    ln(log_floor).
struct FrameConfig {
  double frame_width_seconds = 0.100;
  double hop_seconds = 0.005;
  int cqt_hop_samples = 256;
  int n_bins = 64;
  double log_floor = 1e-10;
  double cqt_fmin_hz = 32.703195662574764;  // C1
  int cqt_bins_per_octave = 12;

  void validate() const {
    require(frame_width_seconds > hop_seconds && hop_seconds > 0, Errc::config_error,
            "need frame_width_seconds > hop_seconds > 0");
    require(n_bins >= 1, Errc::config_error, "n_bins must be >= 1");
    require(log_floor > 0, Errc::config_error, "log_floor must be positive");
    require(cqt_hop_samples >= 1, Errc::config_error, "cqt_hop_samples must be >= 1");
    require(cqt_fmin_hz > 0, Errc::config_error, "cqt_fmin_hz must be positive");
    require(cqt_bins_per_octave >= 1, Errc::config_error, "cqt_bins_per_octave must be >= 1");
  }

  double hop_seconds_for(RepKind kind, double sample_rate) const {
    return kind == RepKind::cqt ? cqt_hop_samples / sample_rate : hop_seconds;
  }
};

/// Fill value representing silence for a given representation row.
/// SPEC is linear power, so silence is 0. The log kinds saturate at
/// ln(log_floor). MFCC of a silent frame is the DCT of a constant vector:
/// coefficient 0 carries ln(log_floor)*sqrt(n_bins), the rest are 0.
inline float silence_value(RepKind kind, std::size_t row, std::size_t n_bins, double log_floor) {
  switch (kind) {
    case RepKind::spec: return 0.0f;
    case RepKind::logmel:
    case RepKind::cqt: return static_cast<float>(std::log(log_floor));
    case RepKind::mfcc:
      return row == 0 ? static_cast<float>(std::log(log_floor) *
                                           std::sqrt(static_cast<double>(n_bins)))
                      : 0.0f;
  }
  return 0.0f;
}

}  // namespace crossfilter::dsp
