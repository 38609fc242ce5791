#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "crossfilter/nn/layers.hpp"

namespace crossfilter::nn {

/// Adaptive moment estimation with decoupled L2 weight decay. Moments are
/// kept in the block order supplied at attach time, which the checkpoint
/// format relies on.
template <class Real>
class AdamW {
 public:
  struct Config {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  AdamW() = default;
  explicit AdamW(Config cfg) : cfg_(cfg) {}

  void attach(std::vector<ParamBlock<Real>> blocks) {
    blocks_ = std::move(blocks);
    std::size_t total = 0;
    for (const auto& b : blocks_) total += b.n;
    m_.assign(total, Real(0));
    v_.assign(total, Real(0));
    step_count_ = 0;
  }

  void step(double lr, double weight_decay) {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    std::size_t off = 0;
    for (const auto& blk : blocks_) {
      for (std::size_t i = 0; i < blk.n; ++i) {
        const double g = static_cast<double>(blk.grad[i]);
        double m = cfg_.beta1 * static_cast<double>(m_[off + i]) + (1.0 - cfg_.beta1) * g;
        double v = cfg_.beta2 * static_cast<double>(v_[off + i]) + (1.0 - cfg_.beta2) * g * g;
        m_[off + i] = static_cast<Real>(m);
        v_[off + i] = static_cast<Real>(v);
        const double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
        blk.param[i] -= static_cast<Real>(lr * (update + weight_decay * blk.param[i]));
      }
      off += blk.n;
    }
  }

  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }
  std::vector<Real>& moment1() { return m_; }
  std::vector<Real>& moment2() { return v_; }
  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  std::vector<ParamBlock<Real>> blocks_;
  std::vector<Real> m_, v_;
  std::uint64_t step_count_ = 0;
};

}  // namespace crossfilter::nn
