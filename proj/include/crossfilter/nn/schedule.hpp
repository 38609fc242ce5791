#pragma once

#include <cmath>
#include <cstdint>

#include "crossfilter/core/error.hpp"

namespace crossfilter::nn {

struct LrScheduleConfig {
  double lr_min_warm = 5e-5;
  double lr_peak = 5e-4;
  double lr_final = 5e-6;
  double warmup_fraction = 0.10;

  void validate() const {
    require(lr_min_warm < lr_peak, Errc::config_error, "need lr_min_warm < lr_peak");
    require(lr_final < lr_peak, Errc::config_error, "need lr_final < lr_peak");
    require(warmup_fraction > 0.0 && warmup_fraction < 1.0, Errc::config_error,
            "warmup_fraction must lie in (0,1)");
  }
};

/// Linear warmup from lr_min_warm to lr_peak over the first warmup_fraction
/// of steps, then cosine annealing from lr_peak to lr_final. Continuous at
/// the junction: both pieces evaluate to lr_peak there.
inline double lr_schedule(std::uint64_t step, std::uint64_t total_steps,
                          const LrScheduleConfig& cfg) {
  cfg.validate();
  require(step <= total_steps, Errc::config_error, "step beyond total_steps");
  if (total_steps == 0) return cfg.lr_peak;
  const auto warm_end =
      static_cast<std::uint64_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total_steps)));
  if (step <= warm_end) {
    if (warm_end == 0) return cfg.lr_peak;
    const double f = static_cast<double>(step) / static_cast<double>(warm_end);
    return cfg.lr_min_warm + (cfg.lr_peak - cfg.lr_min_warm) * f;
  }
  const double prog = static_cast<double>(step - warm_end) /
                      static_cast<double>(total_steps - warm_end);
  const double pi = 3.14159265358979323846264338327950288;
  return cfg.lr_final + (cfg.lr_peak - cfg.lr_final) * 0.5 * (1.0 + std::cos(pi * prog));
}

}  // namespace crossfilter::nn
