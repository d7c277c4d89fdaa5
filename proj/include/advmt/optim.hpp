#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>

#include "advmt/errors.hpp"
#include "advmt/parameter.hpp"

namespace advmt {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moments and step counts are kept per
// parameter, since the alternating trainer updates disjoint parameter
// subsets on different steps.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every parameter in `params` from its gradient, then clears the
  // gradients. Throws DivergenceError (leaving all parameters untouched) if
  // any gradient is non-finite.
  void step(std::span<Parameter* const> params);

  const AdamConfig& config() const { return config_; }
  long steps_taken(const Parameter& p) const;

 private:
  struct Slot {
    Tensor m;
    Tensor v;
    long t = 0;
  };
  AdamConfig config_;
  std::unordered_map<const Parameter*, Slot> slots_;
};

// Central-difference gradient check. `loss` must recompute the scalar loss
// from the current parameter values; `analytic` must populate the gradients
// of `params` (starting from zero). Reports the worst coordinate-wise
// relative error |a - n| / max(|a|, |n|, 1e-6); the floor keeps coordinates
// whose true gradient is ~0 from dividing rounding noise by ~0.
struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;
};

GradCheckResult finite_difference_check(std::span<Parameter* const> params,
                                        const std::function<double()>& loss,
                                        const std::function<void()>& analytic, double h = 1e-5);

}  // namespace advmt
