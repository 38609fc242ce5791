#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "crossfilter/core/error.hpp"
#include "crossfilter/core/matrix.hpp"
#include "crossfilter/core/rng.hpp"
#include "crossfilter/dsp/types.hpp"
#include "crossfilter/loss/losses.hpp"
#include "crossfilter/nn/backbone.hpp"
#include "crossfilter/nn/layers.hpp"

namespace crossfilter::nn {

/// Max over the frequency axis, then mean over the time axis: one value per
/// channel. Invariant to permutations of time columns and, per channel, of
/// frequency rows; duplicating the time axis leaves it unchanged.
template <class Real>
std::vector<Real> mean_max_pool(const Tensor3<Real>& fmap,
                                std::vector<std::size_t>* argmax_rows = nullptr) {
  std::vector<Real> feat(fmap.c, Real(0));
  if (argmax_rows) argmax_rows->assign(fmap.c * fmap.w, 0);
  for (std::size_t c = 0; c < fmap.c; ++c) {
    Real acc = 0;
    for (std::size_t t = 0; t < fmap.w; ++t) {
      std::size_t best = 0;
      Real bv = fmap.at(c, 0, t);
      for (std::size_t h = 1; h < fmap.h; ++h) {
        const Real v = fmap.at(c, h, t);
        if (v > bv) {
          bv = v;
          best = h;
        }
      }
      acc += bv;
      if (argmax_rows) (*argmax_rows)[c * fmap.w + t] = best;
    }
    feat[c] = acc / static_cast<Real>(fmap.w);
  }
  return feat;
}

/// Scatter the pooled-feature gradient back through mean-max pooling.
template <class Real>
Tensor3<Real> mean_max_pool_backward(const std::vector<Real>& gfeat,
                                     const std::vector<std::size_t>& argmax_rows, std::size_t c,
                                     std::size_t h, std::size_t w) {
  Tensor3<Real> g(c, h, w, Real(0));
  for (std::size_t ci = 0; ci < c; ++ci) {
    const Real share = gfeat[ci] / static_cast<Real>(w);
    for (std::size_t t = 0; t < w; ++t) g.at(ci, argmax_rows[ci * w + t], t) = share;
  }
  return g;
}

enum class HeadKind : std::uint8_t { softmax = 0, sigmoid = 1 };

struct ForwardOutput {
  std::vector<double> p_c, p_n;        // head probabilities
  std::vector<double> logits_c, logits_n;
};

/// One peer model: a backbone feeding two classifier heads that read the
/// same mean-max pooled feature. head_c serves the curated path (softmax
/// for single-label, sigmoid for multi-label); head_n always ends in a
/// softmax because its loss acts on the label-set probability mass.
template <class Real>
class DualHeadModel {
 public:
  DualHeadModel() = default;

  DualHeadModel(std::size_t n_classes, dsp::RepKind repr_kind, bool multilabel,
                std::vector<int> channels, Rng& rng)
      : J_(n_classes),
        repr_kind_(repr_kind),
        head_c_kind_(multilabel ? HeadKind::sigmoid : HeadKind::softmax) {
    auto cnn = std::make_unique<SmallCnnBackbone<Real>>(std::move(channels));
    cnn->init(rng);
    backbone_ = std::move(cnn);
    head_c_ = Linear<Real>(backbone_->out_channels(), J_);
    head_n_ = Linear<Real>(backbone_->out_channels(), J_);
    head_c_.init(rng);
    head_n_.init(rng);
  }

  std::size_t n_classes() const { return J_; }
  dsp::RepKind repr_kind() const { return repr_kind_; }
  HeadKind head_c_kind() const { return head_c_kind_; }
  Backbone<Real>& backbone() { return *backbone_; }

  ForwardOutput forward(const dsp::TimeFreqRep& rep) {
    require(rep.kind == repr_kind_, Errc::rep_mismatch,
            std::string("model expects ") + dsp::rep_kind_name(repr_kind_) + ", got " +
                dsp::rep_kind_name(rep.kind));
    fmap_ = backbone_->forward(rep.values);
    feat_ = mean_max_pool(fmap_, &argmax_rows_);

    ForwardOutput out;
    const auto zc = head_c_.forward(feat_);
    const auto zn = head_n_.forward(feat_);
    out.logits_c.assign(zc.begin(), zc.end());
    out.logits_n.assign(zn.begin(), zn.end());
    std::vector<double> zc_d(zc.begin(), zc.end()), zn_d(zn.begin(), zn.end());
    out.p_c = head_c_kind_ == HeadKind::softmax ? loss::softmax(zc_d) : loss::sigmoid(zc_d);
    out.p_n = loss::softmax(zn_d);
    return out;
  }

  /// Backpropagates loss gradients w.r.t. the two heads' logits through the
  /// heads, the pooling, and the backbone, accumulating parameter grads.
  /// Pass an empty vector for a head that takes no loss on this sample.
  void backward(const std::vector<Real>& glogits_c, const std::vector<Real>& glogits_n) {
    std::vector<Real> gfeat(feat_.size(), Real(0));
    if (!glogits_c.empty()) {
      const auto g = head_c_.backward(glogits_c);
      for (std::size_t i = 0; i < gfeat.size(); ++i) gfeat[i] += g[i];
    }
    if (!glogits_n.empty()) {
      const auto g = head_n_.backward(glogits_n);
      for (std::size_t i = 0; i < gfeat.size(); ++i) gfeat[i] += g[i];
    }
    const auto gmap = mean_max_pool_backward(gfeat, argmax_rows_, fmap_.c, fmap_.h, fmap_.w);
    backbone_->backward(gmap);
  }

  std::vector<ParamBlock<Real>> params() {
    auto out = backbone_->params();
    for (auto& p : head_c_.params()) out.push_back(p);
    for (auto& p : head_n_.params()) out.push_back(p);
    return out;
  }

  std::vector<ParamBlock<Real>> head_c_params() { return head_c_.params(); }
  std::vector<ParamBlock<Real>> head_n_params() { return head_n_.params(); }

  void zero_grad() {
    for (auto& blk : params())
      for (std::size_t i = 0; i < blk.n; ++i) blk.grad[i] = Real(0);
  }

 private:
  std::size_t J_ = 0;
  dsp::RepKind repr_kind_ = dsp::RepKind::logmel;
  HeadKind head_c_kind_ = HeadKind::softmax;
  std::unique_ptr<Backbone<Real>> backbone_;
  Linear<Real> head_c_, head_n_;

  Tensor3<Real> fmap_;
  std::vector<Real> feat_;
  std::vector<std::size_t> argmax_rows_;
};

/// Elementwise sum of two probability vectors; used only for ranking, so it
/// is deliberately not renormalized.
inline std::vector<double> ensemble(const std::vector<double>& p1, const std::vector<double>& p2) {
  require(p1.size() == p2.size(), Errc::shape_mismatch, "ensemble: length mismatch");
  std::vector<double> out(p1.size());
  for (std::size_t i = 0; i < p1.size(); ++i) out[i] = p1[i] + p2[i];
  return out;
}

}  // namespace crossfilter::nn
