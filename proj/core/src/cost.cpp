#include "mfsmp/cost.hpp"

#include <algorithm>
#include <cmath>

#include "mfsmp/smp.hpp"

namespace mfsmp {

CostReport evaluate_cost(const CoefficientSet& model, const ForwardEnsemble& fwd,
                         const BackwardEnsemble& bwd) {
  const int N_p = fwd.particles;
  const int steps = fwd.grid.steps;
  const double dt = fwd.grid.dt();

  CostReport rep;
  double alt_running = 0.0;
  Vec per_particle = Vec::Zero(N_p);
  for (int i = 0; i < steps; ++i) {
    Vec lv(N_p);
    for (int j = 0; j < N_p; ++j) lv[j] = model.l(driver_args(fwd, bwd, i, j));
    rep.running += (fwd.rho.col(i).array() * lv.array()).mean() * dt;
    per_particle.array() += fwd.rho.col(i).array() * lv.array() * dt;
    const Vec w = girsanov_weights(fwd, i);
    alt_running += w.dot(lv) * fwd.rho.col(i).mean() * dt;
  }

  const Vec xTm = fwd.x_mean.row(steps).transpose();
  Vec PhiV(N_p);
  for (int j = 0; j < N_p; ++j) PhiV[j] = model.Phi(fwd.x[steps].row(j).transpose(), xTm);
  rep.terminal = (fwd.rho.col(steps).array() * PhiV.array()).mean();
  per_particle.array() += fwd.rho.col(steps).array() * PhiV.array();
  const double mu = per_particle.mean();
  rep.value_se = std::sqrt((per_particle.array() - mu).square().sum() /
                           std::max(1, N_p - 1) / N_p);
  const double alt_terminal =
      girsanov_weights(fwd, steps).dot(PhiV) * fwd.rho.col(steps).mean();

  rep.initial = model.gamma(bwd.y_mean.row(0).transpose());

  rep.value = rep.running + rep.terminal + rep.initial;
  rep.alt_value = alt_running + alt_terminal + rep.initial;
  return rep;
}

double cost_of_policy(const CoefficientSet& model, const Policy& policy, const TimeGrid& grid,
                      const Mat& dW, const Mat& dY, int basis_degree, int workers) {
  const ForwardEnsemble fwd =
      simulate_forward_given_noise(model, policy, grid, dW, dY, 0, workers);
  const BackwardEnsemble bwd = solve_backward_y(model, fwd, policy, basis_degree);
  return evaluate_cost(model, fwd, bwd).value;
}

}  // namespace mfsmp
