#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "crossfilter/core/matrix.hpp"
#include "crossfilter/core/rng.hpp"
#include "crossfilter/nn/layers.hpp"

namespace crossfilter::nn {

/// Feature extractor contract: representation matrix in, feature map out.
/// Implementations are swappable behind this interface; the bundled one is a
/// small conv net sized for CPU experiments.
template <class Real>
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual std::size_t out_channels() const = 0;
  virtual Tensor3<Real> forward(const MatF& rep) = 0;
  virtual void backward(const Tensor3<Real>& grad_out) = 0;
  virtual std::vector<ParamBlock<Real>> params() = 0;
};

/// conv3x3 -> instance norm -> ReLU -> 2x2 max pool, repeated once per entry
/// of `channels`. Input is the single-channel representation matrix.
template <class Real>
class SmallCnnBackbone final : public Backbone<Real> {
 public:
  explicit SmallCnnBackbone(std::vector<int> channels = {16, 32, 64, 128})
      : channels_(std::move(channels)) {
    std::size_t in = 1;
    for (int ch : channels_) {
      const auto out = static_cast<std::size_t>(ch);
      convs_.emplace_back(in, out);
      norms_.emplace_back(out);
      relus_.emplace_back();
      pools_.emplace_back();
      in = out;
    }
  }

  void init(Rng& rng) {
    for (auto& c : convs_) c.init(rng);
  }

  std::size_t out_channels() const override {
    return channels_.empty() ? 1 : static_cast<std::size_t>(channels_.back());
  }

  const std::vector<int>& channels() const { return channels_; }

  Tensor3<Real> forward(const MatF& rep) override {
    // Standardize the input map per sample: log-domain representations carry
    // large constant offsets that would otherwise dominate the first
    // convolution. No parameters, so nothing to backprop here.
    Tensor3<Real> x(1, rep.rows(), rep.cols());
    double mean = 0;
    for (std::size_t i = 0; i < rep.size(); ++i) mean += rep.data()[i];
    mean /= static_cast<double>(rep.size());
    double var = 0;
    for (std::size_t i = 0; i < rep.size(); ++i) {
      const double d = rep.data()[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(rep.size());
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (std::size_t i = 0; i < rep.size(); ++i)
      x.v[i] = static_cast<Real>((rep.data()[i] - mean) * inv);
    for (std::size_t b = 0; b < convs_.size(); ++b) {
      x = convs_[b].forward(x);
      x = norms_[b].forward(x);
      x = relus_[b].forward(x);
      if (x.h >= 2 && x.w >= 2) {
        x = pools_[b].forward(x);
        pooled_[b] = true;
      } else {
        pooled_[b] = false;
      }
    }
    return x;
  }

  void backward(const Tensor3<Real>& grad_out) override {
    Tensor3<Real> g = grad_out;
    for (std::size_t b = convs_.size(); b-- > 0;) {
      if (pooled_[b]) g = pools_[b].backward(g);
      g = relus_[b].backward(g);
      g = norms_[b].backward(g);
      g = convs_[b].backward(g);
    }
  }

  std::vector<ParamBlock<Real>> params() override {
    std::vector<ParamBlock<Real>> out;
    for (std::size_t b = 0; b < convs_.size(); ++b) {
      for (auto& p : convs_[b].params()) out.push_back(p);
      for (auto& p : norms_[b].params()) out.push_back(p);
    }
    return out;
  }

 private:
  std::vector<int> channels_;
  std::vector<Conv3x3<Real>> convs_;
  std::vector<InstanceNorm<Real>> norms_;
  std::vector<ReLU<Real>> relus_;
  std::vector<MaxPool2<Real>> pools_;
  bool pooled_[16] = {false};
};

}  // namespace crossfilter::nn
