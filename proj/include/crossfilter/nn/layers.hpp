#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "crossfilter/core/matrix.hpp"
#include "crossfilter/core/rng.hpp"

namespace crossfilter::nn {

/// Contiguous view onto one parameter tensor plus its gradient; the
/// optimizer walks a flat list of these.
template <class Real>
struct ParamBlock {
  Real* param = nullptr;
  Real* grad = nullptr;
  std::size_t n = 0;
};

/// Layers keep the activations of the most recent forward pass, so one layer
/// instance serves exactly one in-flight sample; the trainer runs samples
/// through a model sequentially.

template <class Real>
class Conv3x3 {
 public:
  Conv3x3() = default;
  Conv3x3(std::size_t in_ch, std::size_t out_ch) : in_(in_ch), out_(out_ch) {
    w_.assign(out_ * in_ * 9, Real(0));
    b_.assign(out_, Real(0));
    gw_.assign(w_.size(), Real(0));
    gb_.assign(b_.size(), Real(0));
  }

  void init(Rng& rng) {
    // He initialization for ReLU nets.
    const double std_dev = std::sqrt(2.0 / static_cast<double>(in_ * 9));
    for (auto& v : w_) v = static_cast<Real>(rng.normal() * std_dev);
    for (auto& v : b_) v = Real(0);
  }

  Tensor3<Real> forward(const Tensor3<Real>& x) {
    x_ = x;
    Tensor3<Real> y(out_, x.h, x.w, Real(0));
    const std::size_t H = x.h, W = x.w;
    for (std::size_t oc = 0; oc < out_; ++oc) {
      Real* yp = y.plane(oc);
      for (std::size_t ic = 0; ic < in_; ++ic) {
        const Real* xp = x.plane(ic);
        const Real* k = w_.data() + (oc * in_ + ic) * 9;
        for (std::size_t h = 0; h < H; ++h) {
          const std::size_t h0 = h > 0 ? h - 1 : 0;
          const std::size_t h1 = h + 1 < H ? h + 1 : H - 1;
          const bool top = h > 0, bot = h + 1 < H;
          Real* yrow = yp + h * W;
          const Real* r0 = xp + h0 * W;
          const Real* r1 = xp + h * W;
          const Real* r2 = xp + h1 * W;
          for (std::size_t w = 0; w < W; ++w) {
            const bool left = w > 0, right = w + 1 < W;
            Real acc = 0;
            if (top) {
              if (left) acc += k[0] * r0[w - 1];
              acc += k[1] * r0[w];
              if (right) acc += k[2] * r0[w + 1];
            }
            if (left) acc += k[3] * r1[w - 1];
            acc += k[4] * r1[w];
            if (right) acc += k[5] * r1[w + 1];
            if (bot) {
              if (left) acc += k[6] * r2[w - 1];
              acc += k[7] * r2[w];
              if (right) acc += k[8] * r2[w + 1];
            }
            yrow[w] += acc;
          }
        }
      }
      const Real bias = b_[oc];
      for (std::size_t i = 0; i < H * W; ++i) yp[i] += bias;
    }
    return y;
  }

  Tensor3<Real> backward(const Tensor3<Real>& gy) {
    const std::size_t H = x_.h, W = x_.w;
    Tensor3<Real> gx(in_, H, W, Real(0));
    for (std::size_t oc = 0; oc < out_; ++oc) {
      const Real* gp = gy.plane(oc);
      Real gb_acc = 0;
      for (std::size_t i = 0; i < H * W; ++i) gb_acc += gp[i];
      gb_[oc] += gb_acc;
      for (std::size_t ic = 0; ic < in_; ++ic) {
        const Real* xp = x_.plane(ic);
        Real* gxp = gx.plane(ic);
        const Real* k = w_.data() + (oc * in_ + ic) * 9;
        Real* gk = gw_.data() + (oc * in_ + ic) * 9;
        for (std::size_t h = 0; h < H; ++h) {
          const Real* grow = gp + h * W;
          for (std::size_t w = 0; w < W; ++w) {
            const Real g = grow[w];
            if (g == Real(0)) continue;
            for (int dh = -1; dh <= 1; ++dh) {
              const long long hh = static_cast<long long>(h) + dh;
              if (hh < 0 || hh >= static_cast<long long>(H)) continue;
              for (int dw = -1; dw <= 1; ++dw) {
                const long long ww = static_cast<long long>(w) + dw;
                if (ww < 0 || ww >= static_cast<long long>(W)) continue;
                const std::size_t ki = static_cast<std::size_t>((dh + 1) * 3 + (dw + 1));
                const std::size_t xi = static_cast<std::size_t>(hh) * W + static_cast<std::size_t>(ww);
                gk[ki] += g * xp[xi];
                gxp[xi] += g * k[ki];
              }
            }
          }
        }
      }
    }
    return gx;
  }

  std::vector<ParamBlock<Real>> params() {
    return {{w_.data(), gw_.data(), w_.size()}, {b_.data(), gb_.data(), b_.size()}};
  }

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  std::vector<Real> w_, b_, gw_, gb_;
  Tensor3<Real> x_;
};

/// Per-sample, per-channel normalization with learnable affine; statistics
/// are taken over each channel's own HxW plane, so inference needs no
/// running averages and results do not depend on batch composition.
template <class Real>
class InstanceNorm {
 public:
  InstanceNorm() = default;
  explicit InstanceNorm(std::size_t channels) : c_(channels) {
    gamma_.assign(c_, Real(1));
    beta_.assign(c_, Real(0));
    gg_.assign(c_, Real(0));
    gb_.assign(c_, Real(0));
  }

  Tensor3<Real> forward(const Tensor3<Real>& x) {
    const std::size_t plane = x.h * x.w;
    xhat_ = Tensor3<Real>(x.c, x.h, x.w);
    inv_std_.assign(x.c, Real(0));
    Tensor3<Real> y(x.c, x.h, x.w);
    for (std::size_t c = 0; c < x.c; ++c) {
      const Real* xp = x.plane(c);
      Real mean = 0;
      for (std::size_t i = 0; i < plane; ++i) mean += xp[i];
      mean /= static_cast<Real>(plane);
      Real var = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        const Real d = xp[i] - mean;
        var += d * d;
      }
      var /= static_cast<Real>(plane);
      const Real inv = Real(1) / std::sqrt(var + Real(1e-5));
      inv_std_[c] = inv;
      Real* hp = xhat_.plane(c);
      Real* yp = y.plane(c);
      for (std::size_t i = 0; i < plane; ++i) {
        hp[i] = (xp[i] - mean) * inv;
        yp[i] = gamma_[c] * hp[i] + beta_[c];
      }
    }
    return y;
  }

  Tensor3<Real> backward(const Tensor3<Real>& gy) {
    const std::size_t plane = gy.h * gy.w;
    Tensor3<Real> gx(gy.c, gy.h, gy.w);
    for (std::size_t c = 0; c < gy.c; ++c) {
      const Real* gp = gy.plane(c);
      const Real* hp = xhat_.plane(c);
      Real sum_g = 0, sum_gh = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += gp[i];
        sum_gh += gp[i] * hp[i];
      }
      gb_[c] += sum_g;
      gg_[c] += sum_gh;
      const Real inv_n = Real(1) / static_cast<Real>(plane);
      const Real coef = gamma_[c] * inv_std_[c];
      Real* gxp = gx.plane(c);
      for (std::size_t i = 0; i < plane; ++i)
        gxp[i] = coef * (gp[i] - sum_g * inv_n - hp[i] * sum_gh * inv_n);
    }
    return gx;
  }

  std::vector<ParamBlock<Real>> params() {
    return {{gamma_.data(), gg_.data(), gamma_.size()}, {beta_.data(), gb_.data(), beta_.size()}};
  }

 private:
  std::size_t c_ = 0;
  std::vector<Real> gamma_, beta_, gg_, gb_;
  Tensor3<Real> xhat_;
  std::vector<Real> inv_std_;
};

template <class Real>
class ReLU {
 public:
  Tensor3<Real> forward(const Tensor3<Real>& x) {
    mask_.assign(x.size(), 0);
    Tensor3<Real> y = x;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      if (y.v[i] > Real(0)) mask_[i] = 1;
      else y.v[i] = Real(0);
    }
    return y;
  }

  Tensor3<Real> backward(const Tensor3<Real>& gy) {
    Tensor3<Real> gx = gy;
    for (std::size_t i = 0; i < gx.v.size(); ++i)
      if (!mask_[i]) gx.v[i] = Real(0);
    return gx;
  }

 private:
  std::vector<char> mask_;
};

/// 2x2 max pooling with stride 2; trailing odd rows/columns are dropped.
template <class Real>
class MaxPool2 {
 public:
  Tensor3<Real> forward(const Tensor3<Real>& x) {
    in_h_ = x.h;
    in_w_ = x.w;
    const std::size_t oh = x.h / 2, ow = x.w / 2;
    Tensor3<Real> y(x.c, oh, ow);
    arg_.assign(x.c * oh * ow, 0);
    for (std::size_t c = 0; c < x.c; ++c) {
      const Real* xp = x.plane(c);
      Real* yp = y.plane(c);
      for (std::size_t h = 0; h < oh; ++h) {
        for (std::size_t w = 0; w < ow; ++w) {
          const std::size_t base = (2 * h) * x.w + 2 * w;
          std::size_t best = base;
          Real bv = xp[base];
          const std::size_t candidates[3] = {base + 1, base + x.w, base + x.w + 1};
          for (std::size_t cand : candidates) {
            if (xp[cand] > bv) {
              bv = xp[cand];
              best = cand;
            }
          }
          yp[h * ow + w] = bv;
          arg_[(c * oh + h) * ow + w] = best;
        }
      }
    }
    return y;
  }

  Tensor3<Real> backward(const Tensor3<Real>& gy) {
    Tensor3<Real> gx(gy.c, in_h_, in_w_, Real(0));
    const std::size_t plane = gy.h * gy.w;
    for (std::size_t c = 0; c < gy.c; ++c) {
      const Real* gp = gy.plane(c);
      Real* gxp = gx.plane(c);
      for (std::size_t i = 0; i < plane; ++i) gxp[arg_[c * plane + i]] += gp[i];
    }
    return gx;
  }

 private:
  std::size_t in_h_ = 0, in_w_ = 0;
  std::vector<std::size_t> arg_;
};

template <class Real>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out) : in_(in), out_(out) {
    w_.assign(out_ * in_, Real(0));
    b_.assign(out_, Real(0));
    gw_.assign(w_.size(), Real(0));
    gb_.assign(b_.size(), Real(0));
  }

  void init(Rng& rng) {
    const double std_dev = std::sqrt(1.0 / static_cast<double>(in_));
    for (auto& v : w_) v = static_cast<Real>(rng.normal() * std_dev);
    for (auto& v : b_) v = Real(0);
  }

  std::vector<Real> forward(const std::vector<Real>& x) {
    x_ = x;
    std::vector<Real> y(out_);
    for (std::size_t o = 0; o < out_; ++o) {
      const Real* wr = w_.data() + o * in_;
      Real acc = b_[o];
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * x[i];
      y[o] = acc;
    }
    return y;
  }

  std::vector<Real> backward(const std::vector<Real>& gy) {
    std::vector<Real> gx(in_, Real(0));
    for (std::size_t o = 0; o < out_; ++o) {
      const Real g = gy[o];
      gb_[o] += g;
      Real* gwr = gw_.data() + o * in_;
      const Real* wr = w_.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        gwr[i] += g * x_[i];
        gx[i] += g * wr[i];
      }
    }
    return gx;
  }

  std::vector<ParamBlock<Real>> params() {
    return {{w_.data(), gw_.data(), w_.size()}, {b_.data(), gb_.data(), b_.size()}};
  }

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  std::vector<Real> w_, b_, gw_, gb_;
  std::vector<Real> x_;
};

}  // namespace crossfilter::nn
