#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/parallel.hpp"
#include "crossfilter/core/rng.hpp"
#include "crossfilter/core/wav.hpp"
#include "crossfilter/data/dataset.hpp"

namespace crossfilter::synth {

enum class NoiseMode { symmetric, confusion };

/// Recipe for a bi-quality benchmark set with known ground truth. Each class
/// is one sound archetype around a class-specific base frequency; the noisy
/// subset's labels are corrupted at rate noise_ratio while ground truth is
/// kept on the side for selection audits.
struct SynthSpec {
  int classes = 8;
  int curated_per_class = 25;
  int noisy_per_class = 100;
  int test_per_class = 50;
  double noise_ratio = 0.3;
  double clip_seconds_min = 1.0;
  double clip_seconds_max = 6.0;
  bool multilabel = false;
  NoiseMode noise_mode = NoiseMode::symmetric;
  std::uint64_t seed = 1;
  double sample_rate = 44100.0;
  double base_freq_lo = 250.0;
  double base_freq_hi = 2000.0;
  double background_snr_db_lo = 7.0;
  double background_snr_db_hi = 7.0;
  double freq_jitter_octaves = 0.16;  // per-clip pitch wobble around the class base
  double event_span_min = 0.35;       // events occupy this..1.0 of the clip
  double amp_lo = 0.3, amp_hi = 0.8;
  // fraction of clips carrying a quieter distractor event from another
  // class; its level is drawn in [db_lo, db_hi] relative to the main event
  double distractor_prob = 0.25;
  double distractor_db_lo = -14.0;
  double distractor_db_hi = -5.0;

  void validate() const {
    require(classes >= 2, Errc::config_error, "classes must be >= 2");
    require(noise_ratio >= 0.0 && noise_ratio < 1.0, Errc::config_error,
            "noise_ratio must lie in [0,1)");
    require(curated_per_class >= 0 && noisy_per_class >= 0 && test_per_class >= 0,
            Errc::config_error, "per-class counts must be nonnegative");
    require(clip_seconds_min > 0 && clip_seconds_max >= clip_seconds_min, Errc::config_error,
            "bad clip length range");
    require(sample_rate > 0, Errc::config_error, "sample_rate must be positive");
    require(base_freq_lo > 0 && base_freq_hi > base_freq_lo, Errc::config_error,
            "bad base frequency range");
  }

  double base_freq(int cls) const {
    const double t = classes > 1 ? static_cast<double>(cls) / (classes - 1) : 0.0;
    return base_freq_lo * std::pow(base_freq_hi / base_freq_lo, t);
  }
};

inline const char* archetype_name(int cls) {
  static const char* kNames[8] = {"tone",       "chirp",    "burst",   "amtone",
                                  "clicktrain", "square",   "dualtone", "tremnoise"};
  return kNames[cls % 8];
}

inline std::string class_name(int cls) {
  return std::string(archetype_name(cls)) + "_" + std::to_string(cls);
}

namespace detail {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline void add_tone(std::vector<float>& x, double sr, double freq, double amp, double phase,
                     std::size_t lo, std::size_t hi) {
  for (std::size_t i = lo; i < hi; ++i)
    x[i] += static_cast<float>(amp * std::sin(kTwoPi * freq * static_cast<double>(i) / sr + phase));
}

/// Renders one event of the class archetype into [lo, hi).
inline void render_event(std::vector<float>& x, double sr, int cls, double f, Rng& rng,
                         std::size_t lo, std::size_t hi) {
  const int arche = cls % 8;
  const std::size_t n = hi - lo;
  switch (arche) {
    case 0: {  // tone with harmonics
      for (int h = 1; h <= 3; ++h)
        add_tone(x, sr, f * h, 0.5 / h, rng.uniform(0, kTwoPi), lo, hi);
      break;
    }
    case 1: {  // upward chirp f -> 1.7f
      const double phase0 = rng.uniform(0, kTwoPi);
      for (std::size_t i = lo; i < hi; ++i) {
        const double t = static_cast<double>(i - lo) / sr;
        const double dur = static_cast<double>(n) / sr;
        const double fi = f * std::pow(1.7, t / dur);
        // integrate frequency for a smooth sweep
        const double phase = phase0 + kTwoPi * f * dur / std::log(1.7) *
                                          (std::pow(1.7, t / dur) - 1.0);
        x[i] += static_cast<float>(0.5 * std::sin(phase));
        (void)fi;
      }
      break;
    }
    case 2: {  // band-limited noise bursts (short-lasting)
      double b0 = 0, b1 = 0;  // two-pole resonator state
      const double r = 0.995;
      const double w = kTwoPi * (2.0 * f) / sr;
      const double a1 = 2 * r * std::cos(w), a2 = -r * r;
      std::size_t i = lo;
      bool on = true;
      while (i < hi) {
        const std::size_t seg = static_cast<std::size_t>(
            sr * (on ? rng.uniform(0.05, 0.15) : rng.uniform(0.10, 0.25)));
        const std::size_t end = std::min(hi, i + std::max<std::size_t>(seg, 1));
        if (on) {
          for (; i < end; ++i) {
            const double inp = rng.normal() * 0.22;
            const double out = inp + a1 * b0 + a2 * b1;
            b1 = b0;
            b0 = out;
            x[i] += static_cast<float>(out * 0.35);
          }
        } else {
          i = end;
        }
        on = !on;
      }
      break;
    }
    case 3: {  // amplitude-modulated tone
      const double rate = rng.uniform(4.5, 6.5);
      const double phase = rng.uniform(0, kTwoPi);
      for (std::size_t i = lo; i < hi; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double env = 0.55 + 0.45 * std::sin(kTwoPi * rate * t);
        x[i] += static_cast<float>(0.5 * env * std::sin(kTwoPi * f * t + phase));
      }
      break;
    }
    case 4: {  // click train: damped sinusoid impulses (short-lasting)
      const double rate = rng.uniform(8.0, 13.0);
      const double ring = 2.2 * f;
      std::size_t next = lo;
      while (next < hi) {
        const auto len = std::min<std::size_t>(static_cast<std::size_t>(0.03 * sr), hi - next);
        for (std::size_t i = 0; i < len; ++i) {
          const double t = static_cast<double>(i) / sr;
          x[next + i] += static_cast<float>(0.8 * std::exp(-t * 120.0) *
                                            std::sin(kTwoPi * ring * t));
        }
        next += static_cast<std::size_t>(sr / rate * rng.uniform(0.8, 1.2));
      }
      break;
    }
    case 5: {  // square-ish: odd harmonics
      for (int h : {1, 3, 5})
        add_tone(x, sr, f * h, 0.45 / h, rng.uniform(0, kTwoPi), lo, hi);
      break;
    }
    case 6: {  // two-tone chord
      add_tone(x, sr, f, 0.4, rng.uniform(0, kTwoPi), lo, hi);
      add_tone(x, sr, f * 1.498, 0.4, rng.uniform(0, kTwoPi), lo, hi);
      break;
    }
    default: {  // tremolo band noise
      double b0 = 0, b1 = 0;
      const double r = 0.99;
      const double w = kTwoPi * (1.6 * f) / sr;
      const double a1 = 2 * r * std::cos(w), a2 = -r * r;
      const double rate = rng.uniform(2.5, 3.5);
      for (std::size_t i = lo; i < hi; ++i) {
        const double inp = rng.normal() * 0.3;
        const double out = inp + a1 * b0 + a2 * b1;
        b1 = b0;
        b0 = out;
        const double t = static_cast<double>(i) / sr;
        const double env = 0.6 + 0.4 * std::sin(kTwoPi * rate * t);
        x[i] += static_cast<float>(out * 0.3 * env);
      }
      break;
    }
  }
}

}  // namespace detail

/// Renders one clip of the given class (or classes, multi-label). Each event
/// occupies a random span of the clip with background elsewhere, so
/// short-lasting archetypes behave like real transient tags. A fraction of
/// clips carries a quieter distractor event from a different class, which
/// yields genuinely ambiguous instances. Deterministic in the supplied rng.
inline std::vector<float> render_clip(const SynthSpec& spec, const std::vector<int>& classes,
                                      double seconds, Rng& rng) {
  const auto n = static_cast<std::size_t>(seconds * spec.sample_rate);
  std::vector<float> x(n, 0.0f);
  auto place_event = [&](int cls, std::vector<float>& dst) {
    const double jitter =
        std::pow(2.0, rng.uniform(-spec.freq_jitter_octaves, spec.freq_jitter_octaves));
    const double f = spec.base_freq(cls) * jitter;
    const double span = rng.uniform(spec.event_span_min, 1.0);
    const auto len = static_cast<std::size_t>(span * static_cast<double>(n));
    const std::size_t lo = static_cast<std::size_t>(rng.uniform_int(n - len + 1));
    detail::render_event(dst, spec.sample_rate, cls, f, rng, lo, lo + len);
    // onset/offset ramps to avoid clicks at the event edges
    const auto ramp = std::min<std::size_t>(static_cast<std::size_t>(0.01 * spec.sample_rate),
                                            len / 2);
    for (std::size_t i = 0; i < ramp; ++i) {
      const float g = static_cast<float>(i) / static_cast<float>(ramp);
      dst[lo + i] *= g;
      dst[lo + len - 1 - i] *= g;
    }
  };
  for (const int cls : classes) place_event(cls, x);

  if (rng.bernoulli(spec.distractor_prob) && spec.classes > 1) {
    int other = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.classes - 1)));
    if (other >= classes.front()) ++other;
    std::vector<float> d(n, 0.0f);
    place_event(other, d);
    double px = 0, pd = 0;
    for (std::size_t i = 0; i < n; ++i) {
      px += static_cast<double>(x[i]) * x[i];
      pd += static_cast<double>(d[i]) * d[i];
    }
    if (pd > 0) {
      const double rel_db = rng.uniform(spec.distractor_db_lo, spec.distractor_db_hi);
      const double scale = std::sqrt(px / pd * std::pow(10.0, rel_db / 10.0));
      for (std::size_t i = 0; i < n; ++i) x[i] += static_cast<float>(scale * d[i]);
    }
  }

  // normalize event peak, then add background noise at the target SNR
  float peak = 1e-6f;
  for (float v : x) peak = std::max(peak, std::abs(v));
  const float gain = static_cast<float>(rng.uniform(spec.amp_lo, spec.amp_hi)) / peak;
  double sig_power = 0;
  for (auto& v : x) {
    v *= gain;
    sig_power += static_cast<double>(v) * v;
  }
  sig_power /= static_cast<double>(n);
  const double snr_db = rng.uniform(spec.background_snr_db_lo, spec.background_snr_db_hi);
  const double noise_power = sig_power / std::pow(10.0, snr_db / 10.0);
  const double noise_std = std::sqrt(noise_power);
  for (auto& v : x) v += static_cast<float>(rng.normal() * noise_std);
  for (auto& v : x) v = std::clamp(v, -0.98f, 0.98f);
  return x;
}

/// Symmetric label corruption: with probability eps each label is replaced
/// by a uniformly random DIFFERENT class. Confusion mode instead picks a
/// frequency-adjacent class, mimicking perceptually-near mislabels.
/// Returns the corrupted labels and a per-item corruption mask.
inline std::pair<std::vector<std::vector<int>>, std::vector<bool>> inject_label_noise(
    const std::vector<std::vector<int>>& labels, double eps, int n_classes, Rng& rng,
    NoiseMode mode = NoiseMode::symmetric) {
  require(eps >= 0.0 && eps < 1.0, Errc::config_error, "noise ratio must lie in [0,1)");
  std::vector<std::vector<int>> out = labels;
  std::vector<bool> corrupted(labels.size(), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (auto& label : out[i]) {
      if (!rng.bernoulli(eps)) continue;
      int replacement = label;
      if (mode == NoiseMode::symmetric) {
        replacement = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_classes - 1)));
        if (replacement >= label) ++replacement;
      } else {
        const int step = rng.bernoulli(0.5) ? 1 : -1;
        replacement = label + step;
        if (replacement < 0) replacement = 1;
        if (replacement >= n_classes) replacement = n_classes - 2;
      }
      if (replacement != label) {
        label = replacement;
        corrupted[i] = true;
      }
    }
    std::sort(out[i].begin(), out[i].end());
    out[i].erase(std::unique(out[i].begin(), out[i].end()), out[i].end());
  }
  return {out, corrupted};
}

struct GroundTruthRow {
  std::string clip_id;
  std::vector<int> true_labels;
  bool corrupted = false;
};

struct SynthResult {
  data::BiQualityDataset dataset;
  std::vector<GroundTruthRow> ground_truth;  // aligned with dataset.items
};

/// Writes WAVs under out_dir/audio plus manifest.csv, ground_truth.csv and
/// classes.txt. Per-clip rng streams derive from the root seed, so
/// generation is deterministic and clip-parallel. Curated and test labels
/// are always correct; the noisy subset is corrupted at spec.noise_ratio.
inline SynthResult generate(const SynthSpec& spec, const std::string& out_dir,
                            unsigned n_threads = 0) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "audio");

  SynthResult res;
  auto& ds = res.dataset;
  ds.multilabel = spec.multilabel;
  for (int c = 0; c < spec.classes; ++c) ds.class_names.push_back(class_name(c));

  Rng root(spec.seed);
  struct Plan {
    std::string clip_id;
    std::vector<int> true_labels;
    std::vector<int> given_labels;
    data::Subset subset;
    double seconds;
    std::uint64_t clip_seed;
  };
  std::vector<Plan> plans;
  Rng len_rng = root.split("lengths");
  Rng extra_rng = root.split("extra_labels");
  auto plan_subset = [&](data::Subset subset, const char* tag, int per_class) {
    for (int c = 0; c < spec.classes; ++c) {
      for (int i = 0; i < per_class; ++i) {
        Plan p;
        p.clip_id = std::string(tag) + "_" + class_name(c) + "_" + std::to_string(i);
        p.true_labels = {c};
        if (spec.multilabel && extra_rng.bernoulli(0.35)) {
          int extra = static_cast<int>(extra_rng.uniform_int(spec.classes - 1));
          if (extra >= c) ++extra;
          p.true_labels.push_back(extra);
          std::sort(p.true_labels.begin(), p.true_labels.end());
        }
        p.subset = subset;
        p.seconds = len_rng.uniform(spec.clip_seconds_min, spec.clip_seconds_max);
        plans.push_back(std::move(p));
      }
    }
  };
  plan_subset(data::Subset::curated, "cur", spec.curated_per_class);
  plan_subset(data::Subset::noisy, "noi", spec.noisy_per_class);
  plan_subset(data::Subset::test, "tst", spec.test_per_class);

  // Corrupt the noisy subset only.
  {
    std::vector<std::vector<int>> noisy_labels;
    std::vector<std::size_t> noisy_idx;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      plans[i].given_labels = plans[i].true_labels;
      if (plans[i].subset == data::Subset::noisy) {
        noisy_idx.push_back(i);
        noisy_labels.push_back(plans[i].true_labels);
      }
    }
    Rng noise_rng = root.split("label_noise");
    auto [corrupted, mask] =
        inject_label_noise(noisy_labels, spec.noise_ratio, spec.classes, noise_rng, spec.noise_mode);
    for (std::size_t k = 0; k < noisy_idx.size(); ++k)
      plans[noisy_idx[k]].given_labels = corrupted[k];
  }

  Rng seed_rng = root.split("clips");
  for (auto& p : plans) p.clip_seed = seed_rng.split(p.clip_id).next_u64();

  std::vector<std::string> paths(plans.size());
  parallel_for(
      plans.size(),
      [&](std::size_t i) {
        const auto& p = plans[i];
        Rng rng(p.clip_seed);
        const auto samples = render_clip(spec, p.true_labels, p.seconds, rng);
        const auto path = (fs::path(out_dir) / "audio" / (p.clip_id + ".wav")).string();
        write_wav16(path, samples, static_cast<std::uint32_t>(spec.sample_rate));
        paths[i] = path;
      },
      n_threads);

  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& p = plans[i];
    ds.items.push_back({p.clip_id, paths[i], p.given_labels, p.subset});
    res.ground_truth.push_back({p.clip_id, p.true_labels, p.given_labels != p.true_labels});
  }
  ds.validate();

  data::write_manifest((fs::path(out_dir) / "manifest.csv").string(), ds);
  {
    std::ofstream f((fs::path(out_dir) / "classes.txt").string());
    for (const auto& n : ds.class_names) f << n << '\n';
  }
  {
    std::ofstream f((fs::path(out_dir) / "ground_truth.csv").string());
    f << "clip_id,path,labels,subset,true_labels,corrupted\n";
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
      const auto& it = ds.items[i];
      const auto& gt = res.ground_truth[i];
      std::vector<std::string> given, truth;
      for (int l : it.labels) given.push_back(ds.class_names[static_cast<std::size_t>(l)]);
      for (int l : gt.true_labels) truth.push_back(ds.class_names[static_cast<std::size_t>(l)]);
      f << it.clip_id << ',' << it.path << ',' << join(given, ';') << ','
        << subset_name(it.subset) << ',' << join(truth, ';') << ',' << (gt.corrupted ? 1 : 0)
        << '\n';
    }
  }
  return res;
}

/// Loads the ground-truth sidecar written by generate().
inline std::vector<GroundTruthRow> load_ground_truth(const std::string& path,
                                                     const std::vector<std::string>& class_names) {
  const auto rows = read_csv(path);
  require(rows.size() >= 2 && rows[0].size() >= 6, Errc::parse_error,
          "bad ground truth file: " + path);
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < class_names.size(); ++i) ids[class_names[i]] = static_cast<int>(i);
  std::vector<GroundTruthRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    GroundTruthRow row;
    row.clip_id = rows[r][0];
    for (const auto& n : split_csv_line(rows[r][4], ';')) {
      const auto it = ids.find(n);
      require(it != ids.end(), Errc::parse_error,
              "row " + std::to_string(r + 1) + ": unknown label '" + n + "'");
      row.true_labels.push_back(it->second);
    }
    row.corrupted = rows[r][5] == "1";
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace crossfilter::synth
