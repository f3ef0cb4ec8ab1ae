#include "mfsmp/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfsmp/cost.hpp"
#include "mfsmp/smp.hpp"
#include "mfsmp/verify.hpp"

namespace mfsmp {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

InvariantReport run_invariant_suite(const CoefficientSet& model,
                                    const LinearFeaturePolicy& policy, const TimeGrid& grid,
                                    int particles, std::uint64_t seed,
                                    const std::vector<std::string>& scope) {
  InvariantReport rep;
  auto in_scope = [&](const std::string& mod) {
    return scope.empty() || std::find(scope.begin(), scope.end(), mod) != scope.end();
  };
  auto add = [&](const std::string& mod, const std::string& name, bool passed, double margin,
                 const std::string& detail) {
    rep.checks.push_back({mod, name, passed, margin, detail});
  };

  if (in_scope("model")) {
    const ValidationReport vr = validate_assumptions(model, 64, seed);
    add("model", "derivative maps match finite differences", vr.ok(), vr.max_error(),
        "max relative derivative error " + fmt(vr.max_error()) + ", bound 1e-4");
  }

  ForwardEnsemble fwd = simulate_forward(model, policy, grid, particles, seed);
  const int N_p = fwd.particles;
  const int steps = grid.steps;

  if (in_scope("forward_engine")) {
    // Increment columns are mean-zero within Monte Carlo resolution.
    double worst_se_units = 0.0;
    const double se = std::sqrt(grid.dt() / N_p);
    for (int i = 0; i < steps; ++i) {
      worst_se_units = std::max(worst_se_units, std::abs(fwd.dW.col(i).mean()) / se);
      worst_se_units = std::max(worst_se_units, std::abs(fwd.dY.col(i).mean()) / se);
    }
    add("forward_engine", "noise increment columns mean-zero", worst_se_units <= 4.0,
        worst_se_units, "worst column mean at " + fmt(worst_se_units) + " SE, bound 4");

    add("forward_engine", "density starts at one",
        (fwd.rho.col(0).array() == 1.0).all(), 0.0, "rho(0) exactly 1 per particle");

    // Martingale property of the density, per node, in SE units.
    double worst_node = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double mu = fwd.rho.col(i).mean();
      const double sd = std::sqrt(
          (fwd.rho.col(i).array() - mu).square().sum() / std::max(1, N_p - 1));
      const double se_i = sd / std::sqrt(double(N_p));
      if (se_i > 0.0) worst_node = std::max(worst_node, std::abs(mu - 1.0) / se_i);
    }
    add("forward_engine", "density column means near one", worst_node <= 4.0, worst_node,
        "worst node at " + fmt(worst_node) + " SE, bound 4");

    double wsum_err = 0.0;
    for (int i = 0; i <= steps; ++i)
      wsum_err = std::max(wsum_err, std::abs(girsanov_weights(fwd, i).sum() - 1.0));
    add("forward_engine", "normalized weights sum to one", wsum_err <= 1e-12, wsum_err,
        "max |sum - 1| = " + fmt(wsum_err) + ", bound 1e-12");
  }

  BackwardEnsemble bwd = solve_backward_y(model, fwd, policy);
  if (in_scope("backward_engine")) {
    double term_err = 0.0;
    const Vec xTm = fwd.x_mean.row(steps).transpose();
    for (int j = 0; j < N_p; ++j)
      term_err = std::max(term_err,
                          (bwd.y[steps].row(j).transpose() -
                           model.phi(fwd.x[steps].row(j).transpose(), xTm))
                              .cwiseAbs()
                              .maxCoeff());
    add("backward_engine", "terminal value pinned to phi", term_err == 0.0, term_err,
        "max deviation " + fmt(term_err) + ", bound 0");

    double worst_orth = 0.0;
    for (const auto& d : bwd.node_diagnostics) worst_orth = std::max(worst_orth, d.orthogonality);
    add("backward_engine", "regression residual orthogonal to basis", worst_orth <= 1e-8,
        worst_orth, "worst relative orthogonality defect " + fmt(worst_orth) + ", bound 1e-8");
  }

  AdjointEnsemble adj = solve_adjoint(model, fwd, bwd, policy);
  if (in_scope("backward_engine")) {
    const double final_res = adj.picard_residuals.back();
    add("backward_engine", "adjoint fixed-point iteration stationary", final_res <= 1e-6,
        final_res, "final sweep residual " + fmt(final_res) + ", bound 1e-6");

    const Vec k0 = -model.gamma_y(bwd.y_mean.row(0).transpose());
    const double k0_dev = (adj.k[0].rowwise() - k0.transpose()).cwiseAbs().maxCoeff();
    add("backward_engine", "initial adjoint value deterministic", k0_dev == 0.0, k0_dev,
        "max particle deviation " + fmt(k0_dev) + ", bound 0");
  }

  if (in_scope("smp")) {
    const CostReport cr = evaluate_cost(model, fwd, bwd);
    const double gap = std::abs(cr.value - cr.alt_value);
    add("smp", "cost formulations agree", gap <= 1e-12, gap,
        "|pathwise - reweighted| = " + fmt(gap) + ", bound 1e-12");

    const GradientField gf = gradient(model, fwd, bwd, adj, policy);
    add("smp", "parameter gradient finite", gf.grad_theta.allFinite(), gf.grad_theta.norm(),
        "|grad| = " + fmt(gf.grad_theta.norm()));
  }

  if (in_scope("verify")) {
    const RiccatiSolution coarse = solve_riccati(0.0, 1.0, 0.0, 1.0, 1.0, TimeGrid(1.0, 25));
    const RiccatiSolution fine = solve_riccati(0.0, 1.0, 0.0, 1.0, 1.0, TimeGrid(1.0, 50));
    const double dP0 = std::abs(coarse.P(0) - fine.P(0));
    add("verify", "Riccati integration grid-converged", dP0 < 1e-8, dP0,
        "|P(0) change on refinement| = " + fmt(dP0) + ", bound 1e-8");
  }

  return rep;
}

}  // namespace mfsmp
