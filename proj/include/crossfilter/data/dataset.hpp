#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crossfilter/core/csv.hpp"
#include "crossfilter/core/error.hpp"
#include "crossfilter/core/rng.hpp"

namespace crossfilter::data {

enum class Subset { curated, noisy, test };

inline const char* subset_name(Subset s) {
  switch (s) {
    case Subset::curated: return "curated";
    case Subset::noisy: return "noisy";
    case Subset::test: return "test";
  }
  return "?";
}

inline Subset parse_subset(const std::string& s, std::size_t row) {
  if (s == "curated") return Subset::curated;
  if (s == "noisy") return Subset::noisy;
  if (s == "test") return Subset::test;
  raise(Errc::parse_error, "row " + std::to_string(row) + ": unknown subset '" + s + "'");
}

struct DatasetItem {
  std::string clip_id;
  std::string path;
  std::vector<int> labels;  // class indices, ascending, nonempty
  Subset subset = Subset::curated;
};

/// A bi-quality dataset: a verified curated set, a possibly-mislabelled
/// noisy set, and a held-out test set, all sharing one label space.
struct BiQualityDataset {
  std::vector<DatasetItem> items;
  std::vector<std::string> class_names;
  bool multilabel = false;

  int n_classes() const { return static_cast<int>(class_names.size()); }

  std::vector<std::size_t> indices(Subset s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].subset == s) out.push_back(i);
    return out;
  }

  void validate() const {
    std::set<std::string> seen;
    for (const auto& it : items) {
      require(seen.insert(it.clip_id).second, Errc::parse_error,
              "duplicate clip_id: " + it.clip_id);
      require(!it.labels.empty(), Errc::empty_labelset, "no labels for clip " + it.clip_id);
      for (int l : it.labels)
        require(l >= 0 && l < n_classes(), Errc::parse_error,
                "label index out of range for clip " + it.clip_id);
    }
  }

  /// Stratified folds over the curated subset: per class, shuffled items are
  /// dealt round-robin, so per-class counts differ by at most one across
  /// folds. Stratification uses the first label of multi-label items.
  std::vector<std::vector<std::size_t>> stratified_folds(int n_folds, std::uint64_t seed) const {
    require(n_folds >= 2, Errc::config_error, "need at least 2 folds");
    std::vector<std::vector<std::size_t>> per_class(static_cast<std::size_t>(n_classes()));
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].subset == Subset::curated)
        per_class[static_cast<std::size_t>(items[i].labels.front())].push_back(i);

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(n_folds));
    for (auto& members : per_class) {
      rng.shuffle(members);
      for (std::size_t i = 0; i < members.size(); ++i)
        folds[i % static_cast<std::size_t>(n_folds)].push_back(members[i]);
    }
    return folds;
  }
};

inline std::vector<float> label_vector(const DatasetItem& item, int n_classes) {
  std::vector<float> y(static_cast<std::size_t>(n_classes), 0.0f);
  for (int l : item.labels) y[static_cast<std::size_t>(l)] = 1.0f;
  return y;
}

namespace detail {

inline std::vector<int> parse_labels(const std::string& field, const std::map<std::string, int>& class_ids,
                                     std::size_t row) {
  std::vector<int> out;
  for (const auto& name : split_csv_line(field, ';')) {
    require(!name.empty(), Errc::parse_error, "row " + std::to_string(row) + ": empty label");
    const auto it = class_ids.find(name);
    require(it != class_ids.end(), Errc::parse_error,
            "row " + std::to_string(row) + ": unknown label '" + name + "'");
    out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Reads the class list, one name per line, in index order.
inline std::vector<std::string> read_class_list(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io_error, "cannot open: " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  require(!names.empty(), Errc::parse_error, "empty class list: " + path);
  return names;
}

/// Loads a manifest CSV with header `clip_id,path,labels,subset`; labels are
/// ';'-separated class names. When classes_path is empty, the label space is
/// the sorted set of names seen in the manifest. Parse failures name the
/// offending row (1-based, header is row 1).
inline BiQualityDataset load_manifest(const std::string& manifest_path,
                                      const std::string& classes_path = "") {
  const auto rows = read_csv(manifest_path);
  require(!rows.empty(), Errc::parse_error, "empty manifest: " + manifest_path);
  require(rows[0].size() >= 4 && rows[0][0] == "clip_id" && rows[0][1] == "path" &&
              rows[0][2] == "labels" && rows[0][3] == "subset",
          Errc::parse_error, "manifest header must be clip_id,path,labels,subset");

  BiQualityDataset ds;
  if (!classes_path.empty()) {
    ds.class_names = read_class_list(classes_path);
  } else {
    std::set<std::string> names;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      require(rows[r].size() >= 4, Errc::parse_error,
              "row " + std::to_string(r + 1) + ": expected 4 fields");
      for (const auto& n : split_csv_line(rows[r][2], ';')) names.insert(n);
    }
    ds.class_names.assign(names.begin(), names.end());
  }
  std::map<std::string, int> class_ids;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i)
    class_ids[ds.class_names[i]] = static_cast<int>(i);

  for (std::size_t r = 1; r < rows.size(); ++r) {
    require(rows[r].size() >= 4, Errc::parse_error,
            "row " + std::to_string(r + 1) + ": expected 4 fields");
    DatasetItem item;
    item.clip_id = rows[r][0];
    item.path = rows[r][1];
    require(!item.clip_id.empty(), Errc::parse_error,
            "row " + std::to_string(r + 1) + ": empty clip_id");
    item.labels = detail::parse_labels(rows[r][2], class_ids, r + 1);
    item.subset = parse_subset(rows[r][3], r + 1);
    if (item.labels.size() > 1) ds.multilabel = true;
    ds.items.push_back(std::move(item));
  }
  ds.validate();
  return ds;
}

inline void write_manifest(const std::string& path, const BiQualityDataset& ds) {
  std::ofstream f(path);
  require(f.good(), Errc::io_error, "cannot open for write: " + path);
  f << "clip_id,path,labels,subset\n";
  for (const auto& it : ds.items) {
    std::vector<std::string> names;
    for (int l : it.labels) names.push_back(ds.class_names[static_cast<std::size_t>(l)]);
    f << it.clip_id << ',' << it.path << ',' << join(names, ';') << ','
      << subset_name(it.subset) << '\n';
  }
  require(f.good(), Errc::io_error, "short write: " + path);
}

}  // namespace crossfilter::data
