#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfsmp/backward.hpp"
#include "mfsmp/cost.hpp"
#include "mfsmp/smp.hpp"

namespace mfsmp {

struct OptimizerConfig {
  TimeGrid grid{1.0, 50};
  int particles = 2000;
  std::uint64_t seed = 1;
  int workers = 1;
  int basis_degree = 2;
  PicardOptions picard{};

  int max_iters = 40;
  double step0 = 1.0;
  double backtrack = 0.5;   // step shrink factor
  double armijo_c1 = 1e-4;
  int max_backtracks = 30;
  int max_line_failures = 5;  // consecutive failed line searches before giving up
  double grad_tol = 1e-5;
  double residual_tol = 1e-2;  // stop once the worst node residual >= -residual_tol
};

struct IterRecord {
  int iter = 0;
  double cost = 0.0;       // at the incumbent, this iteration's noise
  double cost_se = 0.0;    // Monte Carlo standard error of that cost
  double grad_norm = 0.0;  // |dJ/dtheta|
  double residual = 0.0;   // worst normalized first-order residual
  double step = 0.0;       // accepted step size (0 when rejected)
  int backtracks = 0;
  double seconds = 0.0;
  bool accepted = false;
};

struct RunTrace {
  std::vector<IterRecord> iters;
  std::string stop_reason;
  Vec theta_final;
  double final_cost = 0.0;
};

/// Gradient descent on the policy parameters with Armijo backtracking.
/// Each outer iteration draws fresh noise from a seed derived as
/// derive(seed, iter); the line search holds that noise fixed, so cost
/// comparisons within it use common random numbers. Returns the iterate
/// with the best cost estimate seen.
LinearFeaturePolicy optimize(const CoefficientSet& model, const LinearFeaturePolicy& init,
                             const OptimizerConfig& cfg, RunTrace* trace = nullptr);

}  // namespace mfsmp
