#pragma once

#include <cstdint>
#include <vector>

#include "mfsmp/model.hpp"
#include "mfsmp/policy.hpp"
#include "mfsmp/types.hpp"

namespace mfsmp {

/// Interacting particle ensemble simulated under the reference measure:
/// state x, Girsanov density rho, noises (W, Y) and per-node empirical
/// mean-field curves. Immutable after construction.
struct ForwardEnsemble {
  TimeGrid grid;
  int particles = 0;
  std::uint64_t seed = 0;

  std::vector<Mat> x;    // per node: particles x n
  std::vector<Mat> u;    // per node: particles x k_u
  std::vector<Mat> psi;  // per node: particles x d_f (policy features)
  Mat rho;               // particles x nodes
  Mat W, Y;              // particles x nodes
  Mat dW, dY;            // particles x steps

  Mat x_mean;  // nodes x n
  Mat u_mean;  // nodes x k_u

  int nodes() const { return grid.nodes(); }
};

/// Brownian increments ~ N(0, dt), one pair of channels per (particle, step),
/// generated from counter-based streams keyed by (seed, particle, step).
void fill_noise(std::uint64_t seed, const TimeGrid& grid, int particles, Mat& dW, Mat& dY,
                int workers = 1);

/// Euler-Maruyama on x with drift (b - sigma2 h); rho advanced by the exact
/// exponential-martingale step in log space. Mean-field arguments are the
/// ensemble's empirical means at the current node.
ForwardEnsemble simulate_forward(const CoefficientSet& model, const Policy& policy,
                                 const TimeGrid& grid, int particles, std::uint64_t seed,
                                 int workers = 1);

/// Same, with caller-supplied increments (used for common-random-number and
/// adaptedness studies).
ForwardEnsemble simulate_forward_given_noise(const CoefficientSet& model, const Policy& policy,
                                             const TimeGrid& grid, const Mat& dW, const Mat& dY,
                                             std::uint64_t seed = 0, int workers = 1);

/// Self-normalized importance weights rho_j(t_i) / sum_j rho_j(t_i).
Vec girsanov_weights(const ForwardEnsemble& ens, int node);

struct PerturbationScaling {
  std::vector<double> eps;
  std::vector<double> x_moment;    // E[sup_t |x_eps - x_base|^4]
  std::vector<double> rho_moment;  // E[sup_t |rho_eps - rho_base|^2]
  double x_slope = 0.0;
  double rho_slope = 0.0;
  bool degenerate = false;  // identical policies: all differences exactly zero
};

/// Simulates u_eps = base + eps (other - base) under common random numbers
/// and fits log-log slopes of the sup-path moments against eps.
PerturbationScaling perturbation_scaling(const CoefficientSet& model, const Policy& other,
                                         const Policy& base, const std::vector<double>& eps_list,
                                         const TimeGrid& grid, int particles, std::uint64_t seed);

}  // namespace mfsmp
