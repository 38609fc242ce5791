#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "crossfilter/core/rng.hpp"
#include "crossfilter/data/dataset.hpp"
#include "crossfilter/data/synth.hpp"
#include "crossfilter/dsp/representations.hpp"
#include "crossfilter/run/featurize.hpp"
#include "test_helpers.hpp"

using namespace crossfilter;
using namespace crossfilter::synth;
using cftest::thrown_code;

namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

SynthSpec tiny_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.classes = 4;
  spec.curated_per_class = 3;
  spec.noisy_per_class = 5;
  spec.test_per_class = 2;
  spec.noise_ratio = 0.25;
  spec.clip_seconds_min = 0.8;
  spec.clip_seconds_max = 1.6;
  spec.seed = seed;
  return spec;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("inject_label_noise: identity at zero, binomial rate in general") {
  Rng rng(110);
  std::vector<std::vector<int>> labels;
  for (int i = 0; i < 10000; ++i) labels.push_back({static_cast<int>(rng.uniform_int(6))});

  auto [same, mask0] = inject_label_noise(labels, 0.0, 6, rng);
  CHECK(same == labels);
  for (const bool m : mask0) CHECK(!m);

  auto [corrupted, mask] = inject_label_noise(labels, 0.3, 6, rng);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mask[i]) {
      ++flips;
      CHECK(corrupted[i] != labels[i]);  // always a different class
    } else {
      CHECK(corrupted[i] == labels[i]);
    }
  }
  const double frac = static_cast<double>(flips) / labels.size();
  CHECK(std::abs(frac - 0.3) < 0.015);  // 3 sigma of Binomial(10000, 0.3)

  // near-total corruption corrupts nearly everything
  auto [_, mask_hi] = inject_label_noise(labels, 0.999, 6, rng);
  std::size_t hi = 0;
  for (const bool m : mask_hi) hi += m;
  CHECK(static_cast<double>(hi) / labels.size() > 0.99);

  CHECK(thrown_code([&] { inject_label_noise(labels, 1.0, 6, rng); }) == Errc::config_error);
}

TEST_CASE("confusion mode flips to an adjacent class") {
  Rng rng(111);
  std::vector<std::vector<int>> labels;
  for (int i = 0; i < 2000; ++i) labels.push_back({static_cast<int>(rng.uniform_int(5))});
  auto [corrupted, mask] = inject_label_noise(labels, 0.5, 5, rng, NoiseMode::confusion);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (mask[i]) CHECK(std::abs(corrupted[i][0] - labels[i][0]) <= 2);
}

TEST_CASE("generate: counting, label integrity, files on disk") {
  const auto dir = fresh_dir("cf_synth_count");
  auto spec = tiny_spec(7);
  const auto res = generate(spec, dir.string());
  const auto& ds = res.dataset;

  CHECK(ds.n_classes() == 4);
  CHECK(ds.indices(data::Subset::curated).size() == 12);
  CHECK(ds.indices(data::Subset::noisy).size() == 20);
  CHECK(ds.indices(data::Subset::test).size() == 8);
  CHECK(fs::exists(dir / "manifest.csv"));
  CHECK(fs::exists(dir / "classes.txt"));
  CHECK(fs::exists(dir / "ground_truth.csv"));

  // curated and test labels always match ground truth; noisy corruption flag
  // is consistent
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& item = ds.items[i];
    const auto& gt = res.ground_truth[i];
    CHECK(item.clip_id == gt.clip_id);
    if (item.subset != data::Subset::noisy) {
      CHECK(item.labels == gt.true_labels);
      CHECK(!gt.corrupted);
    } else {
      CHECK(gt.corrupted == (item.labels != gt.true_labels));
    }
    CHECK(fs::exists(item.path));
  }

  // zero noise: every noisy label equals the truth
  auto spec0 = tiny_spec(8);
  spec0.noise_ratio = 0.0;
  const auto dir0 = fresh_dir("cf_synth_zero");
  const auto res0 = generate(spec0, dir0.string());
  for (std::size_t i = 0; i < res0.dataset.items.size(); ++i)
    CHECK(res0.dataset.items[i].labels == res0.ground_truth[i].true_labels);

  fs::remove_all(dir);
  fs::remove_all(dir0);
}

TEST_CASE("generate: byte-identical reruns for a fixed seed") {
  const auto dir_a = fresh_dir("cf_synth_det_a");
  const auto dir_b = fresh_dir("cf_synth_det_b");
  auto spec = tiny_spec(9);
  const auto res_a = generate(spec, dir_a.string());
  const auto res_b = generate(spec, dir_b.string());

  auto normalize = [](std::string s, const std::string& dir) {
    // audio paths embed the output directory; strip it before comparing
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const auto hit = s.find(dir, pos);
      if (hit == std::string::npos) {
        out += s.substr(pos);
        break;
      }
      out += s.substr(pos, hit - pos);
      pos = hit + dir.size();
    }
    return out;
  };
  CHECK(normalize(slurp((dir_a / "manifest.csv").string()), dir_a.string()) ==
        normalize(slurp((dir_b / "manifest.csv").string()), dir_b.string()));
  CHECK(normalize(slurp((dir_a / "ground_truth.csv").string()), dir_a.string()) ==
        normalize(slurp((dir_b / "ground_truth.csv").string()), dir_b.string()));

  for (const auto& item : res_a.dataset.items) {
    const auto rel = fs::path(item.path).filename();
    CHECK(slurp((dir_a / "audio" / rel).string()) == slurp((dir_b / "audio" / rel).string()));
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("manifest round trip and parse errors name the row") {
  const auto dir = fresh_dir("cf_manifest");
  auto spec = tiny_spec(10);
  const auto res = generate(spec, dir.string());
  const auto loaded = data::load_manifest((dir / "manifest.csv").string(),
                                          (dir / "classes.txt").string());
  CHECK(loaded.items.size() == res.dataset.items.size());
  CHECK(loaded.class_names == res.dataset.class_names);
  for (std::size_t i = 0; i < loaded.items.size(); ++i) {
    CHECK(loaded.items[i].clip_id == res.dataset.items[i].clip_id);
    CHECK(loaded.items[i].labels == res.dataset.items[i].labels);
    CHECK(loaded.items[i].subset == res.dataset.items[i].subset);
  }

  // empty noisy section is legal
  {
    std::ofstream f((dir / "no_noisy.csv").string());
    f << "clip_id,path,labels,subset\n";
    f << "a,/tmp/a.wav,tone_0,curated\n";
    f << "b,/tmp/b.wav,chirp_1,test\n";
  }
  const auto no_noisy = data::load_manifest((dir / "no_noisy.csv").string());
  CHECK(no_noisy.indices(data::Subset::noisy).empty());

  // malformed row: error message carries the row number
  {
    std::ofstream f((dir / "bad.csv").string());
    f << "clip_id,path,labels,subset\n";
    f << "a,/tmp/a.wav,tone_0,curated\n";
    f << "b,/tmp/b.wav,tone_0\n";
  }
  try {
    data::load_manifest((dir / "bad.csv").string());
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }

  // duplicate ids rejected
  {
    std::ofstream f((dir / "dup.csv").string());
    f << "clip_id,path,labels,subset\n";
    f << "a,/tmp/a.wav,tone_0,curated\n";
    f << "a,/tmp/a.wav,tone_0,noisy\n";
  }
  CHECK(thrown_code([&] { data::load_manifest((dir / "dup.csv").string()); }) ==
        Errc::parse_error);

  // unknown label against an explicit class list
  {
    std::ofstream f((dir / "unk.csv").string());
    f << "clip_id,path,labels,subset\n";
    f << "a,/tmp/a.wav,not_a_class,curated\n";
  }
  CHECK(thrown_code([&] {
          data::load_manifest((dir / "unk.csv").string(), (dir / "classes.txt").string());
        }) == Errc::parse_error);

  fs::remove_all(dir);
}

TEST_CASE("stratified folds partition the curated set evenly") {
  const auto dir = fresh_dir("cf_folds");
  auto spec = tiny_spec(11);
  spec.curated_per_class = 11;  // not divisible by 5
  const auto res = generate(spec, dir.string());
  const auto folds = res.dataset.stratified_folds(5, 123);
  REQUIRE(folds.size() == 5);

  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& fold : folds) {
    for (const auto idx : fold) {
      CHECK(res.dataset.items[idx].subset == data::Subset::curated);
      CHECK(seen.insert(idx).second);  // each item in exactly one fold
    }
    total += fold.size();
  }
  CHECK(total == res.dataset.indices(data::Subset::curated).size());

  // per-class counts differ by at most one across folds
  for (int c = 0; c < res.dataset.n_classes(); ++c) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& fold : folds) {
      std::size_t count = 0;
      for (const auto idx : fold) count += res.dataset.items[idx].labels[0] == c;
      lo = std::min(lo, count);
      hi = std::max(hi, count);
    }
    CHECK(hi - lo <= 1);
  }
  fs::remove_all(dir);
}

TEST_CASE("archetypes are separable by a nearest-centroid oracle") {
  const auto dir = fresh_dir("cf_separable");
  SynthSpec spec;  // default spec counts; only the clip budget is trimmed
  spec.curated_per_class = 25;
  spec.noisy_per_class = 0;
  spec.test_per_class = 16;
  spec.noise_ratio = 0.0;
  spec.seed = 12;
  const auto res = generate(spec, dir.string());

  dsp::FrameConfig frame;
  frame.n_bins = 48;
  frame.hop_seconds = 0.04;
  frame.cqt_hop_samples = 2048;
  frame.cqt_fmin_hz = 65.41;

  // time-averaged logmel vectors
  auto embed = [&](const data::DatasetItem& item) {
    const auto clip = run::load_clip(item);
    const auto rep = dsp::logmel(clip, frame);
    std::vector<double> v(rep.n_bins(), 0.0);
    for (std::size_t b = 0; b < rep.n_bins(); ++b) {
      for (std::size_t t = 0; t < rep.n_frames(); ++t) v[b] += rep.values(b, t);
      v[b] /= static_cast<double>(rep.n_frames());
    }
    return v;
  };

  std::vector<std::vector<double>> centroid(8, std::vector<double>(48, 0.0));
  std::vector<std::size_t> counts(8, 0);
  for (const auto idx : res.dataset.indices(data::Subset::curated)) {
    const auto& item = res.dataset.items[idx];
    const auto v = embed(item);
    const auto c = static_cast<std::size_t>(item.labels[0]);
    for (std::size_t b = 0; b < v.size(); ++b) centroid[c][b] += v[b];
    ++counts[c];
  }
  for (std::size_t c = 0; c < 8; ++c)
    for (auto& v : centroid[c]) v /= static_cast<double>(counts[c]);

  std::size_t correct = 0, total = 0;
  for (const auto idx : res.dataset.indices(data::Subset::test)) {
    const auto& item = res.dataset.items[idx];
    const auto v = embed(item);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < 8; ++c) {
      double d = 0;
      for (std::size_t b = 0; b < v.size(); ++b)
        d += (v[b] - centroid[c][b]) * (v[b] - centroid[c][b]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    correct += best == static_cast<std::size_t>(item.labels[0]);
    ++total;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(total);
  MESSAGE("nearest-centroid accuracy: ", acc);
  CHECK(acc > 0.9);
  fs::remove_all(dir);
}
