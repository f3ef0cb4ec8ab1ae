#include "mfsmp/verify.hpp"

#include <cmath>
#include <vector>

#include "mfsmp/cost.hpp"
#include "mfsmp/regression.hpp"
#include "mfsmp/smp.hpp"

namespace mfsmp {

RiccatiSolution solve_riccati(double a, double c, double q, double r, double g,
                              const TimeGrid& grid) {
  if (!(r != 0.0)) throw ConfigError("solve_riccati: r must be nonzero");
  RiccatiSolution sol;
  sol.grid = grid;
  sol.P = Vec(grid.nodes());
  sol.gain = Vec(grid.nodes());
  sol.P(grid.steps) = g;

  const int sub = std::max(1, 20000 / grid.steps);
  const double h = grid.dt() / sub;
  auto rhs = [&](double P) { return 2.0 * a * P + q - c * c * P * P / r; };
  double P = g;
  for (int i = grid.steps - 1; i >= 0; --i) {
    for (int s = 0; s < sub; ++s) {
      // Backward integration: dP/ds = rhs with s = T - t.
      const double k1 = rhs(P);
      const double k2 = rhs(P + 0.5 * h * k1);
      const double k3 = rhs(P + 0.5 * h * k2);
      const double k4 = rhs(P + h * k3);
      P += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    sol.P(i) = P;
  }
  for (int i = 0; i < grid.nodes(); ++i) sol.gain(i) = -(c / r) * sol.P(i);
  if (!sol.P.allFinite()) throw SimulationError("solve_riccati: blow-up on the horizon");
  return sol;
}

LqReference lq_reference(double a, double c, double sigma, double q, double r, double g,
                         double x0, const TimeGrid& grid) {
  LqReference ref;
  ref.riccati = solve_riccati(a, c, q, r, g, grid);

  // Deterministic mean path under the Riccati feedback, resolved on fine
  // substeps with linearly interpolated gain.
  const int sub = std::max(1, 20000 / grid.steps);
  const double h = grid.dt() / sub;
  auto gain_at = [&](double t) {
    const double s = std::min(std::max(t / grid.dt(), 0.0), double(grid.steps));
    const int i = std::min(int(s), grid.steps - 1);
    const double w = s - i;
    return (1.0 - w) * ref.riccati.gain(i) + w * ref.riccati.gain(i + 1);
  };
  ref.x_mean = Vec(grid.nodes());
  ref.u_star = Vec(grid.nodes());
  double x = x0;
  ref.x_mean(0) = x;
  for (int i = 0; i < grid.steps; ++i) {
    const double t0 = grid.node(i);
    for (int s = 0; s < sub; ++s) {
      const double t = t0 + s * h;
      auto rhs = [&](double xv, double tv) { return (a + c * gain_at(tv)) * xv; };
      const double k1 = rhs(x, t);
      const double k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h);
      const double k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h);
      const double k4 = rhs(x + h * k3, t + h);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    ref.x_mean(i + 1) = x;
  }
  for (int i = 0; i < grid.nodes(); ++i) ref.u_star(i) = ref.riccati.gain(i) * ref.x_mean(i);

  ref.mean_cost = ref.riccati.P(0) * x0 * x0;
  // Fluctuation around the mean is an uncontrolled OU-type response:
  // v' = 2 a v + sigma^2, v(0) = 0.
  const double T = grid.T;
  double vT, integral_v;
  if (std::abs(a) > 1e-12) {
    vT = sigma * sigma * (std::exp(2.0 * a * T) - 1.0) / (2.0 * a);
    integral_v = sigma * sigma / (2.0 * a) * ((std::exp(2.0 * a * T) - 1.0) / (2.0 * a) - T);
  } else {
    vT = sigma * sigma * T;
    integral_v = 0.5 * sigma * sigma * T * T;
  }
  ref.noise_cost = q * integral_v + g * vT;
  return ref;
}

Vec fd_gradient(const CoefficientSet& model, const LinearFeaturePolicy& policy,
                const TimeGrid& grid, int particles, std::uint64_t seed, double step,
                int basis_degree, int workers) {
  Mat dW, dY;
  fill_noise(seed, grid, particles, dW, dY, workers);
  const Vec theta0 = policy.theta_vec();
  Vec g(theta0.size());
  for (int idx = 0; idx < theta0.size(); ++idx) {
    Vec tp = theta0, tm = theta0;
    tp[idx] += step;
    tm[idx] -= step;
    const double Jp =
        cost_of_policy(model, policy.with_theta_vec(tp), grid, dW, dY, basis_degree, workers);
    const double Jm =
        cost_of_policy(model, policy.with_theta_vec(tm), grid, dW, dY, basis_degree, workers);
    g[idx] = (Jp - Jm) / (2.0 * step);
  }
  return g;
}

// The observation-free pipeline below repeats the forward/backward/adjoint
// loops without any density process or measure change. It is deliberately
// not calling into the main solvers.

ReferenceRun reference_run_no_observation(const CoefficientSet& model,
                                          const LinearFeaturePolicy& policy, const TimeGrid& grid,
                                          int particles, std::uint64_t seed,
                                          const PicardOptions& opts, int basis_degree) {
  const int N_p = particles;
  const int steps = grid.steps;
  const int nodes = grid.nodes();
  const int n = model.dims.n;
  const int m = model.dims.m;
  const int k_u = model.dims.k_u;
  const double dt = grid.dt();

  Mat dW, dY;
  fill_noise(seed, grid, particles, dW, dY);

  // Forward Euler: both noises drive the state, no drift correction.
  std::vector<Mat> x(nodes, Mat(N_p, n)), u(nodes, Mat(N_p, k_u));
  std::vector<Mat> psi(nodes, Mat(N_p, policy.features().dim()));
  Mat Y = Mat::Zero(N_p, nodes);
  Mat x_mean(nodes, n), u_mean(nodes, k_u);
  x[0] = model.x0.transpose().replicate(N_p, 1);
  Vec y_sum = Vec::Zero(N_p), y_max = Vec::Zero(N_p);
  for (int i = 0; i < nodes; ++i) {
    const double t = grid.node(i);
    for (int j = 0; j < N_p; ++j) {
      psi[i].row(j) =
          policy.features().eval(t, Y(j, i), y_sum[j] / (i + 1), y_max[j]).transpose();
      u[i].row(j) = policy.value(i, psi[i].row(j).transpose()).transpose();
    }
    x_mean.row(i) = x[i].colwise().mean();
    u_mean.row(i) = u[i].colwise().mean();
    if (i == steps) break;
    StateArgs s;
    s.t = t;
    s.x_mean = x_mean.row(i).transpose();
    s.u_mean = u_mean.row(i).transpose();
    for (int j = 0; j < N_p; ++j) {
      s.x = x[i].row(j).transpose();
      s.u = u[i].row(j).transpose();
      const Vec xn = s.x + model.b(s) * dt + model.sigma1(s) * dW(j, i) +
                     model.sigma2(s) * dY(j, i);
      x[i + 1].row(j) = xn.transpose();
      Y(j, i + 1) = Y(j, i) + dY(j, i);
    }
    for (int j = 0; j < N_p; ++j) {
      y_sum[j] += Y(j, i + 1);
      y_max[j] = std::max(y_max[j], Y(j, i + 1));
    }
  }

  const PolyBasis basis{n, basis_degree};
  auto cond = [&](int node, const Mat& targets) {
    if (node == 0) return Mat(targets.colwise().mean().replicate(N_p, 1));
    return lsq_predict(basis.design(x[node], Y.col(node)), targets);
  };

  // Backward value solve.
  std::vector<Mat> y(nodes, Mat::Zero(N_p, m)), z1(nodes, Mat::Zero(N_p, m)),
      z2(nodes, Mat::Zero(N_p, m));
  const Vec xTm = x_mean.row(steps).transpose();
  for (int j = 0; j < N_p; ++j)
    y[steps].row(j) = model.phi(x[steps].row(j).transpose(), xTm).transpose();
  Mat y_mean(nodes, m), z1_mean(nodes, m), z2_mean(nodes, m);
  y_mean.row(steps) = y[steps].colwise().mean();
  z1_mean.row(steps).setZero();
  z2_mean.row(steps).setZero();
  for (int i = steps - 1; i >= 0; --i) {
    z1[i] = cond(i, Mat(y[i + 1].array().colwise() * dW.col(i).array())) / dt;
    z2[i] = cond(i, Mat(y[i + 1].array().colwise() * dY.col(i).array())) / dt;
    const Mat cy = cond(i, y[i + 1]);
    DriverArgs a;
    a.t = grid.node(i);
    a.x_mean = x_mean.row(i).transpose();
    a.u_mean = u_mean.row(i).transpose();
    a.y_mean = cy.colwise().mean().transpose();
    a.z1_mean = z1[i].colwise().mean().transpose();
    a.z2_mean = z2[i].colwise().mean().transpose();
    for (int j = 0; j < N_p; ++j) {
      a.x = x[i].row(j).transpose();
      a.u = u[i].row(j).transpose();
      a.y = cy.row(j).transpose();
      a.z1 = z1[i].row(j).transpose();
      a.z2 = z2[i].row(j).transpose();
      y[i].row(j) = (cy.row(j).transpose() - model.f(a) * dt).transpose();
    }
    y_mean.row(i) = y[i].colwise().mean();
    z1_mean.row(i) = z1[i].colwise().mean();
    z2_mean.row(i) = z2[i].colwise().mean();
  }

  auto args_at = [&](int i, int j) {
    DriverArgs a;
    a.t = grid.node(i);
    a.x = x[i].row(j).transpose();
    a.y = y[i].row(j).transpose();
    a.z1 = z1[i].row(j).transpose();
    a.z2 = z2[i].row(j).transpose();
    a.u = u[i].row(j).transpose();
    a.x_mean = x_mean.row(i).transpose();
    a.y_mean = y_mean.row(i).transpose();
    a.z1_mean = z1_mean.row(i).transpose();
    a.z2_mean = z2_mean.row(i).transpose();
    a.u_mean = u_mean.row(i).transpose();
    return a;
  };

  // Cost-adjoint pair (r, R2) still exists without an observation drift but
  // never feeds the partials below; skip it entirely and keep R2 = 0.

  // Picard on (p, k), plain means in every mean-field term.
  const Vec k0 = -model.gamma_y(y_mean.row(0).transpose());
  std::vector<Mat> k_cur(nodes, k0.transpose().replicate(N_p, 1));
  std::vector<Mat> p_cur(nodes, Mat::Zero(N_p, n));
  std::vector<Mat> p_cand, q1_cand, q2_cand, k_cand, p_prev, k_prev;

  auto path_change = [&](const std::vector<Mat>& pa, const std::vector<Mat>& pb) {
    double worst = 0.0;
    for (size_t i = 0; i < pa.size(); ++i)
      worst = std::max(worst, (pa[i] - pb[i]).norm() / std::sqrt(double(N_p)));
    return worst;
  };

  bool converged = false;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    p_cand.assign(nodes, Mat::Zero(N_p, n));
    q1_cand.assign(nodes, Mat::Zero(N_p, n));
    q2_cand.assign(nodes, Mat::Zero(N_p, n));
    for (int j = 0; j < N_p; ++j) {
      const Vec xj = x[steps].row(j).transpose();
      const Vec pT = model.Phi_x(xj, xTm) -
                     model.phi_x(xj, xTm).transpose() * k_cur[steps].row(j).transpose();
      p_cand[steps].row(j) = pT.transpose();
    }
    for (int i = steps - 1; i >= 0; --i) {
      q1_cand[i] = cond(i, Mat(p_cand[i + 1].array().colwise() * dW.col(i).array())) / dt;
      q2_cand[i] = cond(i, Mat(p_cand[i + 1].array().colwise() * dY.col(i).array())) / dt;
      const Mat cp = cond(i, p_cand[i + 1]);
      p_cand[i] = cp;
      Mat Hx(N_p, n);
      for (int j = 0; j < N_p; ++j) {
        const DriverArgs a = args_at(i, j);
        DualVars d;
        d.p = cp.row(j).transpose();
        d.q1 = q1_cand[i].row(j).transpose();
        d.q2 = q2_cand[i].row(j).transpose();
        d.k = k_cur[i].row(j).transpose();
        d.R2 = 0.0;
        Hx.row(j) = modified_partial(model, a, d, Slot::X).transpose();
      }
      for (int j = 0; j < N_p; ++j)
        p_cand[i].row(j) = cp.row(j) + Hx.row(j) * dt;
    }

    k_cand.assign(nodes, Mat::Zero(N_p, m));
    k_cand[0] = k0.transpose().replicate(N_p, 1);
    for (int i = 0; i < steps; ++i) {
      for (int j = 0; j < N_p; ++j) {
        const DriverArgs a = args_at(i, j);
        DualVars d;
        d.p = p_cand[i].row(j).transpose();
        d.q1 = q1_cand[i].row(j).transpose();
        d.q2 = q2_cand[i].row(j).transpose();
        d.k = k_cand[i].row(j).transpose();
        d.R2 = 0.0;
        const Vec A = modified_partial(model, a, d, Slot::Y);
        const Vec B = modified_partial(model, a, d, Slot::Z1);
        const Vec C = modified_partial(model, a, d, Slot::Z2);
        k_cand[i + 1].row(j) = k_cand[i].row(j) - A.transpose() * dt -
                               B.transpose() * dW(j, i) - C.transpose() * dY(j, i);
      }
    }

    const double residual = sweep == 1 ? std::max(path_change(p_cand, p_cur),
                                                  path_change(k_cand, k_cur))
                                       : std::max(path_change(p_cand, p_prev),
                                                  path_change(k_cand, k_prev));
    if (residual <= opts.tol) {
      converged = true;
      break;
    }
    p_prev = p_cand;
    k_prev = k_cand;
    const double al = opts.damping;
    for (int i2 = 0; i2 < nodes; ++i2) {
      p_cur[i2] = (1.0 - al) * p_cur[i2] + al * p_cand[i2];
      k_cur[i2] = (1.0 - al) * k_cur[i2] + al * k_cand[i2];
    }
  }
  if (!converged)
    throw PicardError("reference_gradient: Picard iteration did not converge");

  // Same predictable projection of p the main gradient uses.
  std::vector<Mat> p_pred(nodes);
  p_pred[steps] = p_cand[steps];
  for (int i = steps - 1; i >= 0; --i) p_pred[i] = cond(i, p_cand[i + 1]);

  Vec grad = Vec::Zero(policy.param_count());
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j < N_p; ++j) {
      const DriverArgs a = args_at(i, j);
      DualVars d;
      d.p = p_pred[i].row(j).transpose();
      d.q1 = q1_cand[i].row(j).transpose();
      d.q2 = q2_cand[i].row(j).transpose();
      d.k = k_cand[i].row(j).transpose();
      d.R2 = 0.0;
      const Vec Hu = modified_partial(model, a, d, Slot::U);
      Vec u_val;
      Mat du_dtheta;
      policy.value_and_jacobian(psi[i].row(j).transpose(), u_val, du_dtheta);
      grad += du_dtheta.transpose() * Hu * (dt / N_p);
    }
  }

  ReferenceRun out;
  out.x = std::move(x);
  out.y = std::move(y);
  out.p = std::move(p_cand);
  out.k = std::move(k_cand);
  out.grad = std::move(grad);
  return out;
}

}  // namespace mfsmp
