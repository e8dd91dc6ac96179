#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gki/autodiff.hpp"

namespace gki {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter, plus the step count.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;

  void reset(std::span<Param* const> params);
};

/// One bias-corrected Adam update. Increments `state.step` before use, so the
/// first call runs with t = 1. Throws NumericError on a non-finite gradient.
void adam_step(std::span<Param* const> params, AdamState& state, const AdamConfig& cfg);

struct GradCheckReport {
  bool pass = false;
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Objective for grad_check. Called with `true` it must accumulate analytic
/// gradients into the params' `grad` (which grad_check zeroes beforehand);
/// called with `false` only the value is needed.
using Objective = std::function<double(bool with_grad)>;

/// Compares analytic gradients against central differences entry by entry.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as the denominator.
GradCheckReport grad_check(const Objective& f, std::span<Param* const> params,
                           double rtol = 1e-4, double h = 1e-5);

}  // namespace gki
