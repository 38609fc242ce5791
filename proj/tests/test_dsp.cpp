#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include <doctest.h>

#include "crossfilter/core/rng.hpp"
#include "crossfilter/dsp/feature_cache.hpp"
#include "crossfilter/dsp/representations.hpp"
#include "crossfilter/dsp/resample.hpp"
#include "test_helpers.hpp"

using namespace crossfilter;
using namespace crossfilter::dsp;
using cftest::thrown_code;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

AudioClip sine_clip(double freq, double seconds, double sr = 44100.0, double amp = 0.5,
                    const std::string& id = "sine") {
  AudioClip c;
  c.sample_rate = sr;
  c.clip_id = id;
  const auto n = static_cast<std::size_t>(seconds * sr);
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.samples[i] = static_cast<float>(amp * std::sin(kTwoPi * freq * static_cast<double>(i) / sr));
  return c;
}

AudioClip zero_clip(double seconds, const std::string& id = "zero") {
  AudioClip c;
  c.clip_id = id;
  c.samples.assign(static_cast<std::size_t>(seconds * 44100.0), 0.0f);
  return c;
}

AudioClip noise_clip(double seconds, Rng& rng, const std::string& id = "noise") {
  AudioClip c;
  c.clip_id = id;
  c.samples.resize(static_cast<std::size_t>(seconds * 44100.0));
  for (auto& s : c.samples) s = static_cast<float>(rng.uniform(-0.7, 0.7));
  return c;
}

// Independent HTK mel helpers for the oracle side.
double oracle_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double oracle_mel_center_hz(int m, int n_mels, double sr) {
  const double mel_max = oracle_mel(sr / 2.0);
  return 700.0 * (std::pow(10.0, mel_max * (m + 1) / (n_mels + 1) / 2595.0) - 1.0);
}

}  // namespace

TEST_CASE("power spectrogram geometry: 4 s at defaults is 64x800") {
  const FrameConfig cfg;
  const auto rep = power_spectrogram(sine_clip(440.0, 4.0), cfg);
  CHECK(rep.n_bins() == 64);
  CHECK(rep.n_frames() == 800);
  CHECK(rep.kind == RepKind::spec);
}

TEST_CASE("power spectrogram of silence is exactly zero") {
  const FrameConfig cfg;
  const auto rep = power_spectrogram(zero_clip(4.0), cfg);
  for (const float v : rep.values) CHECK(v == 0.0f);
}

TEST_CASE("pure tone lands in the pooled bin that contains its frequency") {
  const FrameConfig cfg;
  const double freq = 440.0, sr = 44100.0;
  const auto rep = power_spectrogram(sine_clip(freq, 1.0), cfg);

  // oracle bin map: window 4410 samples zero-padded to the next power of two
  const std::size_t win = 4410;
  std::size_t n_fft = 1;
  while (n_fft < win) n_fft <<= 1;
  const std::size_t full_bins = n_fft / 2 + 1;

  // column-wise argmax, majority vote over frames
  std::vector<std::size_t> votes(rep.n_bins(), 0);
  for (std::size_t t = 0; t < rep.n_frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < rep.n_bins(); ++b)
      if (rep.values(b, t) > rep.values(best, t)) best = b;
    ++votes[best];
  }
  const auto top = static_cast<std::size_t>(
      std::max_element(votes.begin(), votes.end()) - votes.begin());
  const auto [lo, hi] = spec_pool_group(top, full_bins, rep.n_bins());
  const double f_lo = static_cast<double>(lo) * sr / static_cast<double>(n_fft);
  const double f_hi = static_cast<double>(hi) * sr / static_cast<double>(n_fft);
  CHECK(f_lo <= freq);
  CHECK(freq < f_hi);
}

TEST_CASE("too-short clips are rejected") {
  const FrameConfig cfg;
  AudioClip c;
  c.clip_id = "tiny";
  c.samples.assign(1000, 0.1f);  // < 4410-sample analysis window
  CHECK(thrown_code([&] { power_spectrogram(c, cfg); }) == Errc::clip_too_short);
  CHECK(thrown_code([&] { logmel(c, cfg); }) == Errc::clip_too_short);
  AudioClip c2;
  c2.clip_id = "tinier";
  c2.samples.assign(300, 0.1f);  // < shortest constant-Q kernel
  CHECK(thrown_code([&] { cqt(c2, cfg); }) == Errc::clip_too_short);
}

TEST_CASE("logmel: silence saturates at the log floor, geometry matches") {
  const FrameConfig cfg;
  const auto rep = logmel(zero_clip(4.0), cfg);
  CHECK(rep.n_bins() == 64);
  CHECK(rep.n_frames() == 800);
  const auto expected = static_cast<float>(std::log(cfg.log_floor));
  for (const float v : rep.values) CHECK(v == doctest::Approx(expected));
}

TEST_CASE("logmel: tone peaks at the filter with the nearest center frequency") {
  const FrameConfig cfg;
  const double freq = 440.0;
  const auto rep = logmel(sine_clip(freq, 1.0), cfg);

  std::vector<double> avg(rep.n_bins(), 0.0);
  for (std::size_t b = 0; b < rep.n_bins(); ++b)
    for (std::size_t t = 0; t < rep.n_frames(); ++t) avg[b] += rep.values(b, t);
  const auto top = static_cast<std::size_t>(
      std::max_element(avg.begin(), avg.end()) - avg.begin());

  // independent filterbank construction: nearest mel center to the tone
  std::size_t expect = 0;
  double best = 1e300;
  for (int m = 0; m < cfg.n_bins; ++m) {
    const double d = std::abs(oracle_mel_center_hz(m, cfg.n_bins, 44100.0) - freq);
    if (d < best) {
      best = d;
      expect = static_cast<std::size_t>(m);
    }
  }
  CHECK(top == expect);
}

TEST_CASE("mfcc: constant log-mel frames compress into coefficient zero") {
  const FrameConfig cfg;
  const auto rep = mfcc(zero_clip(4.0), cfg);
  const double c = std::log(cfg.log_floor);
  for (std::size_t t = 0; t < rep.n_frames(); t += 97) {
    CHECK(rep.values(0, t) == doctest::Approx(c * 8.0).epsilon(1e-5));
    for (std::size_t b = 1; b < rep.n_bins(); ++b)
      CHECK(std::abs(rep.values(b, t)) < 1e-4);
  }
}

TEST_CASE("mfcc equals an orthonormal DCT-II of logmel; inverse recovers it") {
  const FrameConfig cfg;
  Rng rng(60);
  const auto clip = noise_clip(2.0, rng);
  const auto lm = logmel(clip, cfg);
  const auto mf = mfcc(clip, cfg);
  REQUIRE(mf.n_frames() == lm.n_frames());
  const std::size_t n = lm.n_bins();

  // independent orthonormal DCT-II (and its transpose as the inverse)
  const double pi = 3.14159265358979323846;
  auto dct_entry = [&](std::size_t k, std::size_t i) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    return scale * std::cos(pi * static_cast<double>(k) *
                            (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
  };

  double num = 0, den = 0, fwd_num = 0;
  for (std::size_t t = 0; t < lm.n_frames(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      // forward check
      double acc = 0;
      for (std::size_t k = 0; k < n; ++k)
        acc += dct_entry(i, k) * static_cast<double>(lm.values(k, t));
      fwd_num += (acc - mf.values(i, t)) * (acc - mf.values(i, t));
      // inverse: logmel_i = sum_k dct(k,i) * mfcc_k
      double rec = 0;
      for (std::size_t k = 0; k < n; ++k)
        rec += dct_entry(k, i) * static_cast<double>(mf.values(k, t));
      const double ref = lm.values(i, t);
      num += (rec - ref) * (rec - ref);
      den += ref * ref;
    }
  }
  CHECK(std::sqrt(num / den) <= 1e-6);       // round trip
  CHECK(std::sqrt(fwd_num / den) <= 1e-6);   // forward transform agreement
}

TEST_CASE("cqt: adjacent bins keep the constant ratio 2^(1/12)") {
  const FrameConfig cfg;
  const auto bank = CqtKernelBank::build(cfg, 44100.0);
  REQUIRE(bank.center_hz.size() == 64);
  const double ratio = std::pow(2.0, 1.0 / 12.0);
  for (std::size_t k = 0; k + 1 < bank.center_hz.size(); ++k)
    CHECK(bank.center_hz[k + 1] / bank.center_hz[k] == doctest::Approx(ratio).epsilon(1e-12));
}

TEST_CASE("cqt: frame count follows the documented hop convention") {
  const FrameConfig cfg;
  const auto rep = cqt(zero_clip(4.0), cfg);
  // ceil(4 * 44100 / 256) with the centered convention = 690; within one
  // frame of the nominal 689.06 ratio.
  CHECK(rep.n_frames() == 690);
  CHECK(std::abs(static_cast<double>(rep.n_frames()) - 4.0 * 44100.0 / 256.0) <= 1.0);
  const auto expected = static_cast<float>(std::log(cfg.log_floor));
  for (const float v : rep.values) CHECK(v == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("cqt: tone at a bin center wins that bin") {
  const FrameConfig cfg;
  const auto bank = CqtKernelBank::build(cfg, 44100.0);
  for (const std::size_t target : {20u, 40u, 56u}) {
    const double freq = bank.center_hz[target];
    const auto rep = cqt(sine_clip(freq, 1.0), cfg);
    std::vector<double> avg(rep.n_bins(), 0.0);
    for (std::size_t b = 0; b < rep.n_bins(); ++b)
      for (std::size_t t = 0; t < rep.n_frames(); ++t) avg[b] += rep.values(b, t);
    const auto top = static_cast<std::size_t>(
        std::max_element(avg.begin(), avg.end()) - avg.begin());
    CHECK(top == target);
  }
}

TEST_CASE("crop_or_pad: identity, symmetric padding, odd leftover at the end") {
  const FrameConfig cfg;
  Rng rng(61);
  TimeFreqRep rep;
  rep.kind = RepKind::logmel;
  rep.hop_seconds = 0.005;
  rep.values = MatF(3, 10);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t t = 0; t < 10; ++t) rep.values(b, t) = static_cast<float>(b * 100 + t);

  const auto same = crop_or_pad(rep, 10, rng);
  CHECK(std::memcmp(same.values.data(), rep.values.data(), sizeof(float) * rep.values.size()) == 0);

  const auto padded = crop_or_pad(rep, 14, rng, cfg.log_floor);
  REQUIRE(padded.n_frames() == 14);
  const auto fill = static_cast<float>(std::log(cfg.log_floor));
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(padded.values(b, 0) == fill);
    CHECK(padded.values(b, 1) == fill);
    CHECK(padded.values(b, 2) == rep.values(b, 0));
    CHECK(padded.values(b, 11) == rep.values(b, 9));
    CHECK(padded.values(b, 12) == fill);
    CHECK(padded.values(b, 13) == fill);
  }

  const auto odd = crop_or_pad(rep, 15, rng, cfg.log_floor);
  REQUIRE(odd.n_frames() == 15);
  CHECK(odd.values(0, 0) == fill);
  CHECK(odd.values(0, 1) == fill);
  CHECK(odd.values(0, 2) == rep.values(0, 0));
  CHECK(odd.values(0, 12) == fill);  // 2 front, 3 back
  CHECK(odd.values(0, 14) == fill);

  // mfcc padding uses the representation's own silence column
  TimeFreqRep mf = rep;
  mf.kind = RepKind::mfcc;
  const auto mfp = crop_or_pad(mf, 12, rng, cfg.log_floor);
  CHECK(mfp.values(0, 0) == doctest::Approx(std::log(cfg.log_floor) * std::sqrt(3.0)));
  CHECK(mfp.values(1, 0) == 0.0f);
}

TEST_CASE("crop window start is uniform (chi-square at the 1% level)") {
  TimeFreqRep rep;
  rep.kind = RepKind::spec;
  rep.values = MatF(1, 1000);
  for (std::size_t t = 0; t < 1000; ++t) rep.values(0, t) = static_cast<float>(t);

  Rng rng(62);
  const int n_draws = 10000;
  std::vector<int> counts(201, 0);
  for (int i = 0; i < n_draws; ++i) {
    const auto win = crop_or_pad(rep, 800, rng);
    const auto start = static_cast<std::size_t>(win.values(0, 0));
    REQUIRE(start <= 200);
    ++counts[start];
  }
  const double expect = n_draws / 201.0;
  double chi2 = 0;
  for (const int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // chi-square critical value, df = 200, upper tail 0.01
  CHECK(chi2 < 249.445);
}

TEST_CASE("determinism: identical clip, config and seed give identical bytes") {
  const FrameConfig cfg;
  Rng rng_a(63), rng_b(63);
  AudioClip clip = sine_clip(300.0, 1.5, 44100.0, 0.4, "det");
  for (const auto kind : {RepKind::spec, RepKind::logmel, RepKind::mfcc, RepKind::cqt}) {
    const auto a = compute_representation(clip, kind, cfg);
    const auto b = compute_representation(clip, kind, cfg);
    REQUIRE(a.values.size() == b.values.size());
    CHECK(std::memcmp(a.values.data(), b.values.data(), sizeof(float) * a.values.size()) == 0);
    const auto ca = crop_or_pad(a, 100, rng_a);
    const auto cb = crop_or_pad(b, 100, rng_b);
    CHECK(std::memcmp(ca.values.data(), cb.values.data(), sizeof(float) * ca.values.size()) == 0);
  }
}

TEST_CASE("geometry and finiteness across representations") {
  const FrameConfig cfg;
  Rng rng(64);
  const auto clip = noise_clip(1.3, rng, "geom");
  const auto sp = power_spectrogram(clip, cfg);
  const auto lm = logmel(clip, cfg);
  const auto mf = mfcc(clip, cfg);
  CHECK(sp.n_frames() == lm.n_frames());
  CHECK(lm.n_frames() == mf.n_frames());
  for (const auto* rep : {&sp, &lm, &mf})
    for (const float v : rep->values) CHECK(std::isfinite(v));
  const auto cq = cqt(clip, cfg);
  for (const float v : cq.values) CHECK(std::isfinite(v));
}

TEST_CASE("energy monotonicity: louder input never lowers a SPEC entry") {
  const FrameConfig cfg;
  Rng rng(65);
  auto clip = noise_clip(1.0, rng, "gain");
  const auto base = power_spectrogram(clip, cfg);
  for (auto& s : clip.samples) s *= 3.0f;
  const auto loud = power_spectrogram(clip, cfg);
  for (std::size_t i = 0; i < base.values.size(); ++i)
    CHECK(loud.values.data()[i] >= base.values.data()[i] - 1e-6f);
}

TEST_CASE("feature cache round trip preserves header and payload") {
  const FrameConfig cfg;
  Rng rng(66);
  const auto clip = noise_clip(1.0, rng, "cache_clip");
  const auto rep = logmel(clip, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "cf_cache_test";
  std::filesystem::create_directories(dir);
  const auto path = feature_cache_path(dir.string(), rep.clip_id, rep.kind);
  write_feature(path, rep);
  CHECK(feature_cache_fresh(path, RepKind::logmel, cfg.n_bins));
  CHECK(!feature_cache_fresh(path, RepKind::cqt, cfg.n_bins));
  const auto back = read_feature(path, rep.clip_id);
  CHECK(back.kind == rep.kind);
  CHECK(back.n_bins() == rep.n_bins());
  CHECK(back.n_frames() == rep.n_frames());
  CHECK(back.hop_seconds == rep.hop_seconds);
  CHECK(std::memcmp(back.values.data(), rep.values.data(), sizeof(float) * rep.values.size()) ==
        0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resample brings foreign rates to 44.1 kHz") {
  auto clip = sine_clip(440.0, 1.0, 22050.0, 0.5, "rs");
  const auto out = resample(clip, 44100.0);
  CHECK(out.sample_rate == 44100.0);
  CHECK(std::abs(static_cast<double>(out.samples.size()) - 44100.0) < 2.0);
  // the tone survives: peak amplitude in the middle stays near 0.5
  float peak = 0;
  for (std::size_t i = 10000; i < 30000; ++i) peak = std::max(peak, std::abs(out.samples[i]));
  CHECK(peak == doctest::Approx(0.5).epsilon(0.05));
}
