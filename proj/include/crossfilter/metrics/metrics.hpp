#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/matrix.hpp"

namespace crossfilter::metrics {

/// Scores and ground truth for a scored clip set: one row per clip, one
/// column per class. labels is a binary indicator matrix.
struct ScoreMatrix {
  Matrix<double> scores;
  Matrix<std::uint8_t> labels;

  std::size_t n_clips() const { return scores.rows(); }
  std::size_t n_classes() const { return scores.cols(); }

  void validate() const {
    require(scores.rows() == labels.rows() && scores.cols() == labels.cols(),
            Errc::shape_mismatch, "score/label shape mismatch");
    for (std::size_t i = 0; i < labels.rows(); ++i) {
      std::size_t pos = 0;
      for (std::size_t j = 0; j < labels.cols(); ++j) pos += labels(i, j) ? 1 : 0;
      require(pos >= 1, Errc::empty_labelset, "clip row " + std::to_string(i) + " has no labels");
    }
  }
};

struct PerClassRow {
  int class_id = 0;
  std::string class_name;
  double value = 0.0;
  double weight = 0.0;  // lwlrap label weight; 0 when not applicable
};

struct EvalReport {
  std::map<std::string, double> overall;  // keys: accuracy, map3, lwlrap
  std::map<std::string, std::vector<PerClassRow>> per_class;
  std::size_t n_clips = 0;
};

/// Top-scoring class with ties broken toward the lowest class index.
inline int argmax_class(const double* scores, std::size_t n) {
  int best = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (scores[j] > scores[best]) best = static_cast<int>(j);
  return best;
}

/// Rank of class j under descending score, ties broken by ascending class
/// index: 1 + #{k : s_k > s_j} + #{k < j : s_k == s_j}.
inline std::size_t rank_with_tie_rule(const double* scores, std::size_t n, std::size_t j) {
  std::size_t rank = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (scores[k] > scores[j]) ++rank;
    else if (scores[k] == scores[j] && k < j) ++rank;
  }
  return rank;
}

/// Fraction of clips whose top-1 prediction matches the single-label ground
/// truth. Multi-label rows are rejected.
inline double accuracy(const std::vector<int>& top1, const Matrix<std::uint8_t>& labels) {
  require(top1.size() == labels.rows(), Errc::shape_mismatch, "accuracy: row count mismatch");
  require(!top1.empty(), Errc::empty_test, "accuracy: no scored clips");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.rows(); ++i) {
    std::size_t pos = 0;
    int cls = -1;
    for (std::size_t j = 0; j < labels.cols(); ++j) {
      if (labels(i, j)) {
        ++pos;
        cls = static_cast<int>(j);
      }
    }
    require(pos == 1, Errc::label_arity, "accuracy requires single-label ground truth");
    if (top1[i] == cls) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(top1.size());
}

inline double accuracy(const ScoreMatrix& sm) {
  sm.validate();
  std::vector<int> top1(sm.n_clips());
  for (std::size_t i = 0; i < sm.n_clips(); ++i)
    top1[i] = argmax_class(sm.scores.row(i), sm.n_classes());
  return accuracy(top1, sm.labels);
}

/// Mean average precision at cutoff 3 for single-label data: per clip,
/// 1/rank of the true label when it ranks in the top 3, else 0.
inline double map_at_3(const ScoreMatrix& sm) {
  sm.validate();
  require(sm.n_clips() > 0, Errc::empty_test, "map@3: no scored clips");
  double acc = 0;
  for (std::size_t i = 0; i < sm.n_clips(); ++i) {
    std::size_t true_cls = 0, pos = 0;
    for (std::size_t j = 0; j < sm.n_classes(); ++j) {
      if (sm.labels(i, j)) {
        ++pos;
        true_cls = j;
      }
    }
    require(pos == 1, Errc::label_arity, "map@3 requires single-label ground truth");
    const std::size_t r = rank_with_tie_rule(sm.scores.row(i), sm.n_classes(), true_cls);
    if (r <= 3) acc += 1.0 / static_cast<double>(r);
  }
  return acc / static_cast<double>(sm.n_clips());
}

struct LwlrapResult {
  double overall = 0.0;
  std::vector<double> per_class;  // mean label-ranking precision per class
  std::vector<double> weights;    // positives(c) / total positives; sums to 1
};

/// Label-weighted label-ranking average precision. For every positive label
/// j of clip i: precision_ij = |{positive k : s_ik >= s_ij}| / |{k : s_ik >=
/// s_ij}|. Per-class values average precision_ij over that class's
/// positives; overall = sum_c weight_c * per_class_c.
inline LwlrapResult lwlrap(const ScoreMatrix& sm) {
  sm.validate();
  require(sm.n_clips() > 0, Errc::empty_test, "lwlrap: no scored clips");
  const std::size_t J = sm.n_classes();
  LwlrapResult out;
  out.per_class.assign(J, 0.0);
  out.weights.assign(J, 0.0);
  std::vector<std::size_t> pos_count(J, 0);

  std::vector<double> sorted_all, sorted_pos;
  for (std::size_t i = 0; i < sm.n_clips(); ++i) {
    const double* s = sm.scores.row(i);
    sorted_all.assign(s, s + J);
    std::sort(sorted_all.begin(), sorted_all.end());
    sorted_pos.clear();
    for (std::size_t j = 0; j < J; ++j)
      if (sm.labels(i, j)) sorted_pos.push_back(s[j]);
    std::sort(sorted_pos.begin(), sorted_pos.end());

    for (std::size_t j = 0; j < J; ++j) {
      if (!sm.labels(i, j)) continue;
      // #{x >= s_j} via lower_bound on ascending-sorted copies.
      const auto rank = static_cast<double>(
          sorted_all.end() - std::lower_bound(sorted_all.begin(), sorted_all.end(), s[j]));
      const auto hits = static_cast<double>(
          sorted_pos.end() - std::lower_bound(sorted_pos.begin(), sorted_pos.end(), s[j]));
      out.per_class[j] += hits / rank;
      ++pos_count[j];
    }
  }

  std::size_t total_pos = 0;
  for (std::size_t j = 0; j < J; ++j) total_pos += pos_count[j];
  double overall = 0;
  for (std::size_t j = 0; j < J; ++j) {
    out.per_class[j] = pos_count[j] ? out.per_class[j] / static_cast<double>(pos_count[j]) : 0.0;
    out.weights[j] = static_cast<double>(pos_count[j]) / static_cast<double>(total_pos);
    overall += out.weights[j] * out.per_class[j];
  }
  out.overall = overall;
  return out;
}

/// Per-class breakdown plus aggregates for the requested metrics
/// ("accuracy", "map3", "lwlrap"). Rows carry lwlrap label weights so the
/// report can be sorted into best/worst listings.
inline EvalReport per_class_report(const ScoreMatrix& sm, const std::vector<std::string>& metrics,
                                   const std::vector<std::string>& class_names = {}) {
  sm.validate();
  EvalReport rep;
  rep.n_clips = sm.n_clips();
  const std::size_t J = sm.n_classes();
  auto name_of = [&](std::size_t j) {
    return j < class_names.size() ? class_names[j] : "class" + std::to_string(j);
  };

  for (const auto& m : metrics) {
    std::vector<PerClassRow> rows(J);
    for (std::size_t j = 0; j < J; ++j) {
      rows[j].class_id = static_cast<int>(j);
      rows[j].class_name = name_of(j);
    }
    if (m == "lwlrap") {
      const auto r = lwlrap(sm);
      rep.overall["lwlrap"] = r.overall;
      for (std::size_t j = 0; j < J; ++j) {
        rows[j].value = r.per_class[j];
        rows[j].weight = r.weights[j];
      }
    } else if (m == "accuracy" || m == "map3") {
      // Single-label per-class decomposition: restrict to clips of class c.
      std::vector<double> acc(J, 0.0);
      std::vector<std::size_t> count(J, 0);
      double overall = 0;
      for (std::size_t i = 0; i < sm.n_clips(); ++i) {
        std::size_t true_cls = 0, pos = 0;
        for (std::size_t j = 0; j < J; ++j)
          if (sm.labels(i, j)) {
            ++pos;
            true_cls = j;
          }
        require(pos == 1, Errc::label_arity, m + " requires single-label ground truth");
        double v = 0;
        if (m == "accuracy") {
          v = argmax_class(sm.scores.row(i), J) == static_cast<int>(true_cls) ? 1.0 : 0.0;
        } else {
          const std::size_t r = rank_with_tie_rule(sm.scores.row(i), J, true_cls);
          v = r <= 3 ? 1.0 / static_cast<double>(r) : 0.0;
        }
        acc[true_cls] += v;
        ++count[true_cls];
        overall += v;
      }
      rep.overall[m] = overall / static_cast<double>(sm.n_clips());
      for (std::size_t j = 0; j < J; ++j)
        rows[j].value = count[j] ? acc[j] / static_cast<double>(count[j]) : 0.0;
    } else {
      raise(Errc::config_error, "unknown metric: " + m);
    }
    rep.per_class[m] = std::move(rows);
  }
  return rep;
}

}  // namespace crossfilter::metrics
