#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "crossfilter/core/error.hpp"

namespace crossfilter::dsp {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Iterative radix-2 FFT with precomputed twiddles and bit-reversal table.
/// One plan per transform size; reusable across frames.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    require(n >= 1 && (n & (n - 1)) == 0, Errc::config_error, "FFT size must be a power of two");
    rev_.resize(n);
    std::size_t log2n = 0;
    while ((std::size_t(1) << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < log2n; ++b)
        if (i & (std::size_t(1) << b)) r |= std::size_t(1) << (log2n - 1 - b);
      rev_[i] = r;
    }
    tw_.resize(n / 2);
    const double step = -6.283185307179586476925286766559 / static_cast<double>(n);
    for (std::size_t k = 0; k < n / 2; ++k)
      tw_[k] = {std::cos(step * static_cast<double>(k)), std::sin(step * static_cast<double>(k))};
  }

  std::size_t size() const { return n_; }

  void forward(std::vector<std::complex<double>>& a) const {
    require(a.size() == n_, Errc::shape_mismatch, "FFT buffer size mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (rev_[i] > i) std::swap(a[i], a[rev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len >> 1;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const auto w = tw_[k * stride];
          const auto u = a[start + k];
          const auto v = a[start + k + half] * w;
          a[start + k] = u + v;
          a[start + k + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<std::complex<double>> tw_;
};

}  // namespace crossfilter::dsp
