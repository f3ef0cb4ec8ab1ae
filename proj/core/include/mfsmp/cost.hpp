#pragma once

#include "mfsmp/backward.hpp"
#include "mfsmp/forward.hpp"

namespace mfsmp {

/// Cost functional evaluated on a simulated ensemble. `value` integrates the
/// density pathwise per particle; `alt_value` factors the measure change
/// through self-normalized weights and the mean density. The two are
/// algebraically identical on the same ensemble.
struct CostReport {
  double value = 0.0;
  double alt_value = 0.0;
  double value_se = 0.0;  // standard error of the per-particle cost mean
  double running = 0.0;   // density-weighted running cost integral
  double terminal = 0.0;  // density-weighted terminal cost
  double initial = 0.0;   // cost of the backward value at time 0
};

CostReport evaluate_cost(const CoefficientSet& model, const ForwardEnsemble& fwd,
                         const BackwardEnsemble& bwd);

/// Convenience: simulate with the given noise, solve the backward equation
/// and return the pathwise cost. Used by line searches under common random
/// numbers.
double cost_of_policy(const CoefficientSet& model, const Policy& policy, const TimeGrid& grid,
                      const Mat& dW, const Mat& dY, int basis_degree = 2, int workers = 1);

}  // namespace mfsmp
