#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "crossfilter/core/error.hpp"

namespace crossfilter::loss {

/// Loss hyper-parameters shared by the training paths.
///   q        exponent of the noisy-robust loss, in (0, 1]
///   lambda   weight of the noisy-set term in the combined risk
///   clip_eps numeric floor applied inside logs and fractional powers
struct LossConfig {
  double q = 0.5;
  double lambda = 1.0;
  double clip_eps = 1e-7;

  void validate() const {
    require(q > 0.0 && q <= 1.0, Errc::bad_q, "q must lie in (0,1]");
    require(lambda >= 0.0, Errc::config_error, "lambda must be nonnegative");
    require(clip_eps > 0.0, Errc::config_error, "clip_eps must be positive");
  }
};

template <class Real>
bool is_binary_label(const std::vector<Real>& y) {
  bool any = false;
  for (Real v : y) {
    if (v == Real(1)) {
      any = true;
    } else if (v != Real(0)) {
      return false;
    }
  }
  return any;
}

template <class Real>
std::size_t positive_count(const std::vector<Real>& y) {
  std::size_t n = 0;
  for (Real v : y)
    if (v > Real(0)) ++n;
  return n;
}

template <class Real>
bool is_one_hot(const std::vector<Real>& y) {
  return is_binary_label(y) && positive_count(y) == 1;
}

template <class Real>
std::vector<Real> softmax(const std::vector<Real>& logits) {
  Real m = logits.empty() ? Real(0) : *std::max_element(logits.begin(), logits.end());
  std::vector<Real> p(logits.size());
  Real sum = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - m);
    sum += p[j];
  }
  for (auto& v : p) v /= sum;
  return p;
}

template <class Real>
std::vector<Real> sigmoid(const std::vector<Real>& logits) {
  std::vector<Real> p(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) p[j] = Real(1) / (Real(1) + std::exp(-logits[j]));
  return p;
}

/// Cross entropy against an arbitrary target distribution; used internally
/// for mixup targets, which are convex combinations of one-hot vectors.
template <class Real>
Real cce_soft(const std::vector<Real>& p, const std::vector<Real>& y, Real clip_eps = Real(1e-7)) {
  require(p.size() == y.size(), Errc::shape_mismatch, "cce: p/y length mismatch");
  Real acc = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (y[j] == Real(0)) continue;
    const Real pj = std::clamp(p[j], clip_eps, Real(1));
    acc -= y[j] * std::log(pj);
  }
  return acc;
}

/// Categorical cross entropy for a softmax output and a strictly one-hot
/// label. Probabilities are clamped to [clip_eps, 1] inside the log.
template <class Real>
Real cce(const std::vector<Real>& p, const std::vector<Real>& y, Real clip_eps = Real(1e-7)) {
  require(is_one_hot(y), Errc::label_arity, "cce requires a one-hot label");
  return cce_soft(p, y, clip_eps);
}

/// Binary cross entropy over independent per-class sigmoid outputs.
/// Probabilities are clamped to [clip_eps, 1-clip_eps] on both sides.
template <class Real>
Real bce(const std::vector<Real>& p, const std::vector<Real>& y, Real clip_eps = Real(1e-7)) {
  require(p.size() == y.size(), Errc::shape_mismatch, "bce: p/y length mismatch");
  Real acc = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Real pj = std::clamp(p[j], clip_eps, Real(1) - clip_eps);
    acc -= y[j] * std::log(pj) + (Real(1) - y[j]) * std::log(Real(1) - pj);
  }
  return acc;
}

/// Noisy-robust loss (1 - s^q)/q where s is the probability mass the softmax
/// places on the (possibly multi-hot) label set. Interpolates between cross
/// entropy (q -> 0) and a scaled absolute error (q = 1).
template <class Real>
Real lq(const std::vector<Real>& p, const std::vector<Real>& y, Real q,
        Real clip_eps = Real(1e-7)) {
  require(q > Real(0) && q <= Real(1), Errc::bad_q, "q must lie in (0,1]");
  require(p.size() == y.size(), Errc::shape_mismatch, "lq: p/y length mismatch");
  Real s = 0;
  for (std::size_t j = 0; j < p.size(); ++j) s += y[j] * p[j];
  s = std::clamp(s, clip_eps, Real(1));
  return (Real(1) - std::pow(s, q)) / q;
}

/// Sum of absolute errors between probabilities and targets. For one-hot
/// targets and softmax outputs this equals 2*(1 - p_true) = 2*lq(p, y, 1).
template <class Real>
Real mae(const std::vector<Real>& p, const std::vector<Real>& y) {
  require(p.size() == y.size(), Errc::shape_mismatch, "mae: p/y length mismatch");
  Real acc = 0;
  for (std::size_t j = 0; j < p.size(); ++j) acc += std::abs(y[j] - p[j]);
  return acc;
}

/// Bi-quality mini-batch risk: mean(curated) + lambda * mean(noisy).
/// An empty list contributes zero, so single-kind batches are legal.
template <class Real>
Real combined_risk(const std::vector<Real>& curated_losses, const std::vector<Real>& noisy_losses,
                   Real lambda) {
  auto mean = [](const std::vector<Real>& v) -> Real {
    if (v.empty()) return Real(0);
    Real acc = 0;
    for (Real x : v) acc += x;
    return acc / static_cast<Real>(v.size());
  };
  return mean(curated_losses) + lambda * mean(noisy_losses);
}

// ---- gradients with respect to pre-activation logits -----------------------
//
// Each returns the loss value and fills grad with d(loss)/d(logit). The
// activation named in the loss definition is applied internally.

template <class Real>
Real cce_grad_logits(const std::vector<Real>& logits, const std::vector<Real>& y,
                     std::vector<Real>& grad, Real clip_eps = Real(1e-7)) {
  const auto p = softmax(logits);
  grad.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) grad[j] = p[j] - y[j];
  return cce_soft(p, y, clip_eps);
}

template <class Real>
Real bce_grad_logits(const std::vector<Real>& logits, const std::vector<Real>& y,
                     std::vector<Real>& grad, Real clip_eps = Real(1e-7)) {
  const auto p = sigmoid(logits);
  grad.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) grad[j] = p[j] - y[j];
  return bce(p, y, clip_eps);
}

template <class Real>
Real lq_grad_logits(const std::vector<Real>& logits, const std::vector<Real>& y, Real q,
                    std::vector<Real>& grad, Real clip_eps = Real(1e-7)) {
  require(q > Real(0) && q <= Real(1), Errc::bad_q, "q must lie in (0,1]");
  const auto p = softmax(logits);
  grad.assign(logits.size(), Real(0));
  Real s = 0;
  for (std::size_t j = 0; j < p.size(); ++j) s += y[j] * p[j];
  const Real s_raw = s;
  s = std::clamp(s, clip_eps, Real(1));
  // Flat region once the label mass hits the clamp.
  if (s_raw > clip_eps && s_raw < Real(1)) {
    const Real coef = std::pow(s, q - Real(1));
    for (std::size_t k = 0; k < p.size(); ++k) grad[k] = coef * p[k] * (s - y[k]);
  }
  return (Real(1) - std::pow(s, q)) / q;
}

template <class Real>
Real mae_grad_logits(const std::vector<Real>& logits, const std::vector<Real>& y,
                     std::vector<Real>& grad) {
  const auto p = softmax(logits);
  grad.resize(logits.size());
  Real dot = 0;  // sum_j sign(p_j - y_j) * p_j
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Real sg = p[j] > y[j] ? Real(1) : (p[j] < y[j] ? Real(-1) : Real(0));
    dot += sg * p[j];
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Real sg = p[k] > y[k] ? Real(1) : (p[k] < y[k] ? Real(-1) : Real(0));
    grad[k] = p[k] * (sg - dot);
  }
  return mae(p, y);
}

}  // namespace crossfilter::loss
