#include "mfsmp/backward.hpp"

#include <cmath>

namespace mfsmp {

Mat conditional_expectation(const PolyBasis& basis, const ForwardEnsemble& fwd, int node,
                            const Mat& targets, RegressionDiagnostics* diag) {
  const int N_p = fwd.particles;
  if (node == 0) {
    if (diag) *diag = RegressionDiagnostics{};
    return targets.colwise().mean().replicate(N_p, 1);
  }
  const Mat A = basis.design(fwd.x[node], fwd.Y.col(node));
  return lsq_predict(A, targets, diag);
}

BackwardEnsemble solve_backward_y(const CoefficientSet& model, const ForwardEnsemble& fwd,
                                  const Policy& policy, int basis_degree) {
  (void)policy;  // controls are already tabulated in the ensemble
  const int N_p = fwd.particles;
  const int nodes = fwd.nodes();
  const int steps = fwd.grid.steps;
  const int m = model.dims.m;
  const double dt = fwd.grid.dt();

  BackwardEnsemble out;
  out.basis = PolyBasis{model.dims.n, basis_degree};
  out.y.assign(nodes, Mat::Zero(N_p, m));
  out.z1.assign(nodes, Mat::Zero(N_p, m));
  out.z2.assign(nodes, Mat::Zero(N_p, m));
  out.node_diagnostics.assign(steps, RegressionDiagnostics{});

  const Vec xTm = fwd.x_mean.row(steps).transpose();
  for (int j = 0; j < N_p; ++j)
    out.y[steps].row(j) = model.phi(fwd.x[steps].row(j).transpose(), xTm).transpose();

  for (int i = steps - 1; i >= 0; --i) {
    const Mat& y_next = out.y[i + 1];
    const Mat t1 = y_next.array().colwise() * fwd.dW.col(i).array();
    const Mat t2 = y_next.array().colwise() * fwd.dY.col(i).array();
    out.z1[i] = conditional_expectation(out.basis, fwd, i, t1) / dt;
    out.z2[i] = conditional_expectation(out.basis, fwd, i, t2) / dt;
    const Mat cond = conditional_expectation(out.basis, fwd, i, y_next, &out.node_diagnostics[i]);

    DriverArgs a;
    a.t = fwd.grid.node(i);
    a.x_mean = fwd.x_mean.row(i).transpose();
    a.u_mean = fwd.u_mean.row(i).transpose();
    a.y_mean = cond.colwise().mean().transpose();
    a.z1_mean = out.z1[i].colwise().mean().transpose();
    a.z2_mean = out.z2[i].colwise().mean().transpose();

    StateArgs s;
    s.t = a.t;
    s.x_mean = a.x_mean;
    s.u_mean = a.u_mean;

    for (int j = 0; j < N_p; ++j) {
      a.x = fwd.x[i].row(j).transpose();
      a.u = fwd.u[i].row(j).transpose();
      a.y = cond.row(j).transpose();
      a.z1 = out.z1[i].row(j).transpose();
      a.z2 = out.z2[i].row(j).transpose();
      s.x = a.x;
      s.u = a.u;
      const double hv = model.h(s);
      out.y[i].row(j) =
          (cond.row(j).transpose() - (model.f(a) - a.z2 * hv) * dt).transpose();
    }
    if (!out.y[i].allFinite())
      throw SimulationError("solve_backward_y: non-finite values at node " + std::to_string(i));
  }

  out.y_mean = Mat(nodes, m);
  out.z1_mean = Mat(nodes, m);
  out.z2_mean = Mat(nodes, m);
  for (int i = 0; i < nodes; ++i) {
    out.y_mean.row(i) = out.y[i].colwise().mean();
    out.z1_mean.row(i) = out.z1[i].colwise().mean();
    out.z2_mean.row(i) = out.z2[i].colwise().mean();
  }
  return out;
}

}  // namespace mfsmp
