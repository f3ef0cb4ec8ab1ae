#pragma once

#include <cstdint>

#include "mfsmp/backward.hpp"
#include "mfsmp/optimizer.hpp"

namespace mfsmp {

/// Scalar LQ Riccati solution for
///   dx = (a x + c u) dt + sigma dW,  cost q x^2 + r u^2 + g x(T)^2.
struct RiccatiSolution {
  TimeGrid grid;
  Vec P;     // value coefficient at each node, P(T) = g
  Vec gain;  // optimal feedback gain kappa(t) = -(c / r) P(t)
};

/// Integrates -dP/dt = 2 a P + q - c^2 P^2 / r backwards with RK4
/// (substepped well below the grid resolution).
RiccatiSolution solve_riccati(double a, double c, double q, double r, double g,
                              const TimeGrid& grid);

/// Closed-form reference for the scalar LQ problem restricted to controls
/// that cannot see the state (the best open-loop control): u*(t) follows the
/// deterministic Riccati feedback along the mean path, and the noise adds an
/// uncontrollable offset to the cost.
struct LqReference {
  RiccatiSolution riccati;
  Vec x_mean;   // deterministic optimal mean path
  Vec u_star;   // open-loop optimal control at each node
  double mean_cost = 0.0;   // P(0) x0^2
  double noise_cost = 0.0;  // q int E[xi^2] dt + g E[xi(T)^2]
  double total_cost() const { return mean_cost + noise_cost; }
};

LqReference lq_reference(double a, double c, double sigma, double q, double r, double g,
                         double x0, const TimeGrid& grid);

/// Central finite differences of the simulated cost in the policy
/// parameters, all evaluations under one frozen noise draw.
Vec fd_gradient(const CoefficientSet& model, const LinearFeaturePolicy& policy,
                const TimeGrid& grid, int particles, std::uint64_t seed, double step = 1e-4,
                int basis_degree = 2, int workers = 1);

/// Output of the observation-free reference pipeline.
struct ReferenceRun {
  std::vector<Mat> x;  // per node: particles x n
  std::vector<Mat> y;  // per node: particles x m
  std::vector<Mat> p;  // per node: particles x n
  std::vector<Mat> k;  // per node: particles x m
  Vec grad;            // parameter gradient
};

/// Reference pipeline with no density process, no measure change and no
/// mean-interaction terms: plain forward Euler, LSMC backward solve and the
/// classical adjoint pair, written as its own loops. It only shares the
/// model, policy, noise generation and least-squares solver with the main
/// path. Valid as a cross-check exactly when h vanishes identically and the
/// model ignores its mean-field arguments.
ReferenceRun reference_run_no_observation(const CoefficientSet& model,
                                          const LinearFeaturePolicy& policy, const TimeGrid& grid,
                                          int particles, std::uint64_t seed,
                                          const PicardOptions& picard = {}, int basis_degree = 2);

}  // namespace mfsmp
