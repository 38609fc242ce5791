#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/rng.hpp"

namespace crossfilter::filter {

/// One noisy-set item as the filter sees it: identity plus its given label
/// set (kept verbatim when the item is promoted).
struct NoisyItem {
  std::string clip_id;
  std::vector<int> labels;
};

/// The evolving pair of partitions. Partition r (0-based here; the two peers
/// are models 0 and 1) trains model r; pseudo_ids[r] holds the noisy-set
/// clip_ids currently promoted into partition r's curated side, and
/// delta[r][y] counts them per class. Partitions are rebuilt from the
/// original split every epoch, so promotions never compound across epochs.
struct PartitionState {
  std::unordered_set<std::string> pseudo_ids[2];
  std::vector<std::size_t> delta[2];
  int k = 0;
  int epoch = 0;

  std::size_t pseudo_count(int r) const { return pseudo_ids[r].size(); }
};

/// True when the most confident class of p is a positive class of the label
/// set: equality for one-hot labels, membership for multi-hot. Score ties
/// resolve to the lowest class index.
inline bool agree(const std::vector<int>& labels, const std::vector<double>& p) {
  require(!p.empty(), Errc::shape_mismatch, "agree: empty prediction");
  std::size_t best = 0;
  for (std::size_t j = 1; j < p.size(); ++j)
    if (p[j] > p[best]) best = j;
  return std::find(labels.begin(), labels.end(), static_cast<int>(best)) != labels.end();
}

/// Per-class promotion cap for epoch j of E: a linear ramp reaching
/// k_max = ceil(|N| / J) at ramp_fraction * E and flat afterwards. k(0) = 0,
/// so nothing is promoted before any training has happened.
inline int step_schedule(int epoch_j, int total_epochs, std::size_t n_noisy, int n_classes,
                         double ramp_fraction = 0.5) {
  require(epoch_j >= 0 && epoch_j <= total_epochs, Errc::config_error,
          "epoch outside schedule range");
  require(n_classes >= 1, Errc::config_error, "need at least one class");
  require(ramp_fraction > 0.0 && ramp_fraction <= 1.0, Errc::config_error,
          "ramp_fraction must lie in (0,1]");
  const auto k_max = static_cast<double>((n_noisy + static_cast<std::size_t>(n_classes) - 1) /
                                         static_cast<std::size_t>(n_classes));
  const double ramp = ramp_fraction * static_cast<double>(total_epochs);
  const double f = ramp > 0 ? std::min(1.0, static_cast<double>(epoch_j) / ramp) : 1.0;
  return static_cast<int>(std::llround(k_max * f));
}

/// One filtering pass. The noisy set is shuffled once, then walked in that
/// order; an item whose given label agrees with model r's prediction is
/// promoted into the PEER's curated partition, provided the destination's
/// per-class pseudo count is still below k. Ties at a full class go to
/// whichever item appeared first in the shuffled order. Selections by one
/// model never touch its own partition, so a model's mistakes cannot
/// reinforce themselves.
///
/// preds[r] maps clip_id to model r's class probabilities and must cover
/// every noisy item. The class counted against the cap is the agreed class
/// (argmax of the prediction), which for single-label items is the given
/// label itself.
inline PartitionState filter_epoch(
    const std::unordered_map<std::string, std::vector<double>>& preds1,
    const std::unordered_map<std::string, std::vector<double>>& preds2,
    const std::vector<NoisyItem>& noisy, int n_classes, int k, Rng& rng) {
  require(k >= 0, Errc::config_error, "k must be nonnegative");
  PartitionState st;
  st.k = k;
  st.delta[0].assign(static_cast<std::size_t>(n_classes), 0);
  st.delta[1].assign(static_cast<std::size_t>(n_classes), 0);

  std::vector<std::size_t> order(noisy.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  const std::unordered_map<std::string, std::vector<double>>* preds[2] = {&preds1, &preds2};
  for (const std::size_t idx : order) {
    const auto& item = noisy[idx];
    for (int r = 0; r < 2; ++r) {
      const auto it = preds[r]->find(item.clip_id);
      require(it != preds[r]->end(), Errc::pred_coverage,
              "no prediction from model " + std::to_string(r + 1) + " for clip " + item.clip_id);
      if (!agree(item.labels, it->second)) continue;
      const auto agreed = static_cast<std::size_t>(
          std::max_element(it->second.begin(), it->second.end()) - it->second.begin());
      const int dest = 1 - r;  // cross-wise: r's picks repartition the peer
      if (st.delta[dest][agreed] < static_cast<std::size_t>(k)) {
        st.pseudo_ids[dest].insert(item.clip_id);
        ++st.delta[dest][agreed];
      }
    }
  }
  return st;
}

/// Partition-algebra check: curated and noisy sides of each partition must
/// tile the original data with the original curated set intact, and the
/// pseudo counts must respect the class cap. Returns a description of the
/// first violation, or empty.
inline std::string check_partition_invariants(const PartitionState& st, std::size_t n_noisy,
                                              int n_classes) {
  for (int r = 0; r < 2; ++r) {
    std::size_t total = 0;
    for (std::size_t c = 0; c < st.delta[r].size(); ++c) {
      if (st.delta[r][c] > static_cast<std::size_t>(st.k))
        return "class cap exceeded in partition " + std::to_string(r + 1) + " for class " +
               std::to_string(c);
      total += st.delta[r][c];
    }
    if (total != st.pseudo_ids[r].size())
      return "delta/pseudo count mismatch in partition " + std::to_string(r + 1);
    const std::size_t bound =
        std::min(n_noisy, static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(st.k));
    if (st.pseudo_ids[r].size() > bound)
      return "pseudo count exceeds min(|N|, J*k) in partition " + std::to_string(r + 1);
  }
  return "";
}

}  // namespace crossfilter::filter
