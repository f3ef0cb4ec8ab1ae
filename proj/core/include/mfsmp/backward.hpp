#pragma once

#include <vector>

#include "mfsmp/forward.hpp"
#include "mfsmp/regression.hpp"

namespace mfsmp {

/// Per-particle (y, z1, z2) from the regression-based backward Euler solve.
struct BackwardEnsemble {
  std::vector<Mat> y, z1, z2;  // per node: particles x m
  Mat y_mean, z1_mean, z2_mean;  // nodes x m

  PolyBasis basis;
  std::vector<RegressionDiagnostics> node_diagnostics;  // per step
};

/// Column-wise conditional expectation of targets given the node's (x, Y)
/// polynomial basis. Node 0 carries the trivial sigma-field, so plain
/// ensemble means are used there.
Mat conditional_expectation(const PolyBasis& basis, const ForwardEnsemble& fwd, int node,
                            const Mat& targets, RegressionDiagnostics* diag = nullptr);

/// Backward Euler from y(T) = phi(x(T), mean x(T)):
///   z1(t_i) = E[y(t_{i+1}) dW_i | basis] / dt,
///   z2(t_i) = E[y(t_{i+1}) dY_i | basis] / dt,
///   y(t_i)  = E[y(t_{i+1}) | basis] - (f - z2 h) dt
/// with current-node arguments and empirical mean-field terms. At node 0 the
/// conditional expectation is the plain ensemble mean (trivial sigma-field).
BackwardEnsemble solve_backward_y(const CoefficientSet& model, const ForwardEnsemble& fwd,
                                  const Policy& policy, int basis_degree = 2);

/// Per-particle adjoint 7-tuple (p, q1, q2, k, r, R1, R2).
struct AdjointEnsemble {
  std::vector<Mat> p, q1, q2;  // per node: particles x n
  std::vector<Mat> p_pred;     // E[p(t_{i+1}) | basis at t_i]; p(T) at the last node
  // Pathwise accumulation p(T) + sum of drift increments from t_i on. Its
  // ensemble mean telescopes to the mean of p, while its spread keeps the
  // terminal variance that regression smoothing hides; used for standard
  // errors of gradient-field means.
  std::vector<Mat> p_raw;
  std::vector<Mat> k;          // per node: particles x m
  Mat r, R1, R2;               // particles x nodes (R1, R2 on step nodes)

  std::vector<double> picard_residuals;  // sup-node L2 change per sweep
  PolyBasis basis;
};

struct PicardOptions {
  int max_sweeps = 25;
  double damping = 0.5;
  double tol = 1e-6;
};

/// Solves the adjoint FBSDE: the (r, R1, R2) BSDE with driver -(l + R2 h),
/// then a damped Picard iteration alternating the p-BSDE (backward, given the
/// k-path) and the k-SDE (forward from k(0) = -gamma_y(mean y(0))). All
/// Hamiltonian partials use the modified substitution
/// R2 -> R2 - sigma2.p - z2.k, and every mean term under the controlled
/// measure is a rho-weighted ensemble mean at the matching node.
AdjointEnsemble solve_adjoint(const CoefficientSet& model, const ForwardEnsemble& fwd,
                              const BackwardEnsemble& bwd, const Policy& policy,
                              const PicardOptions& opts = {}, int basis_degree = 2);

}  // namespace mfsmp
