#include "mfsmp/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "mfsmp/rng.hpp"

namespace mfsmp {

LinearFeaturePolicy optimize(const CoefficientSet& model, const LinearFeaturePolicy& init,
                             const OptimizerConfig& cfg, RunTrace* trace) {
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    throw ConfigError("optimize: backtrack factor must lie in (0, 1)");
  if (!(cfg.armijo_c1 > 0.0 && cfg.armijo_c1 < 1.0))
    throw ConfigError("optimize: armijo_c1 must lie in (0, 1)");
  if (!(cfg.step0 > 0.0) || !(cfg.grad_tol > 0.0) || cfg.max_iters < 1 || cfg.particles < 2)
    throw ConfigError("optimize: step0, grad_tol, max_iters, particles must be positive");
  if (!(cfg.residual_tol > 0.0))
    throw ConfigError("optimize: residual_tol must be positive");

  LinearFeaturePolicy policy = init;
  RunTrace local;
  RunTrace& tr = trace ? *trace : local;
  tr = RunTrace{};

  int consecutive_failures = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  Vec best_theta = policy.theta_vec();
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t iter_seed = rng::derive(cfg.seed, iter);
    Mat dW, dY;
    fill_noise(iter_seed, cfg.grid, cfg.particles, dW, dY, cfg.workers);

    const ForwardEnsemble fwd =
        simulate_forward_given_noise(model, policy, cfg.grid, dW, dY, iter_seed, cfg.workers);
    const BackwardEnsemble bwd = solve_backward_y(model, fwd, policy, cfg.basis_degree);
    const AdjointEnsemble adj =
        solve_adjoint(model, fwd, bwd, policy, cfg.picard, cfg.basis_degree);
    const GradientField gf = gradient(model, fwd, bwd, adj, policy);
    const CostReport cr = evaluate_cost(model, fwd, bwd);
    const double J0 = cr.value;
    if (J0 < best_cost) {
      best_cost = J0;
      best_theta = policy.theta_vec();
    }

    IterRecord rec;
    rec.iter = iter;
    rec.cost = J0;
    rec.cost_se = cr.value_se;
    rec.grad_norm = gf.grad_theta.norm();
    rec.residual = necessary_residual(model, fwd, gf).worst;
    if (rec.grad_norm <= cfg.grad_tol || rec.residual >= -cfg.residual_tol) {
      const auto t1 = std::chrono::steady_clock::now();
      rec.seconds = std::chrono::duration<double>(t1 - t0).count();
      tr.iters.push_back(rec);
      tr.stop_reason = rec.grad_norm <= cfg.grad_tol ? "gradient tolerance reached"
                                                     : "necessary residual within tolerance";
      break;
    }

    // Armijo backtracking under this iteration's (frozen) noise.
    const Vec theta0 = policy.theta_vec();
    const double g2 = gf.grad_theta.squaredNorm();
    double s = cfg.step0;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      const LinearFeaturePolicy cand = policy.with_theta_vec(theta0 - s * gf.grad_theta);
      const double Jc = cost_of_policy(model, cand, cfg.grid, dW, dY, cfg.basis_degree,
                                       cfg.workers);
      if (std::isfinite(Jc) && Jc <= J0 - cfg.armijo_c1 * s * g2) {
        policy = cand;
        rec.step = s;
        rec.backtracks = bt;
        accepted = true;
        break;
      }
      s *= cfg.backtrack;
    }
    rec.accepted = accepted;
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    tr.iters.push_back(rec);

    if (accepted) {
      consecutive_failures = 0;
    } else if (++consecutive_failures >= cfg.max_line_failures) {
      tr.stop_reason = "line search stalled";
      break;
    }
  }
  if (tr.stop_reason.empty()) tr.stop_reason = "max iterations reached";

  // Return the best iterate seen rather than the last accepted step.
  policy = policy.with_theta_vec(best_theta);
  tr.theta_final = best_theta;
  tr.final_cost = best_cost;
  return policy;
}

}  // namespace mfsmp
