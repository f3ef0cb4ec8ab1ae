#include <cmath>

#include "mfsmp/backward.hpp"
#include "mfsmp/smp.hpp"

namespace mfsmp {

namespace {

constexpr double kRhoFloor = 1e-12;

double inv_rho(double rho) { return 1.0 / std::max(rho, kRhoFloor); }

// Sup over nodes of the RMS particle change between two paths.
double path_change(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, (a[i] - b[i]).norm() / std::sqrt(static_cast<double>(a[i].rows())));
  return worst;
}

}  // namespace

AdjointEnsemble solve_adjoint(const CoefficientSet& model, const ForwardEnsemble& fwd,
                              const BackwardEnsemble& bwd, const Policy& policy,
                              const PicardOptions& opts, int basis_degree) {
  (void)policy;
  const int N_p = fwd.particles;
  const int nodes = fwd.nodes();
  const int steps = fwd.grid.steps;
  const int n = model.dims.n;
  const int m = model.dims.m;
  const double dt = fwd.grid.dt();

  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw ConfigError("solve_adjoint: damping must lie in (0, 1]");
  if (opts.max_sweeps < 1 || !(opts.tol > 0.0))
    throw ConfigError("solve_adjoint: need max_sweeps >= 1 and tol > 0");

  AdjointEnsemble out;
  out.basis = PolyBasis{n, basis_degree};

  std::vector<Vec> w(nodes);  // self-normalized density weights per node
  for (int i = 0; i < nodes; ++i) w[i] = girsanov_weights(fwd, i);

  // (r, R1, R2) first: its driver does not involve (p, q, k).
  out.r = Mat::Zero(N_p, nodes);
  out.R1 = Mat::Zero(N_p, nodes);
  out.R2 = Mat::Zero(N_p, nodes);
  const Vec xTm = fwd.x_mean.row(steps).transpose();
  for (int j = 0; j < N_p; ++j)
    out.r(j, steps) = model.Phi(fwd.x[steps].row(j).transpose(), xTm);
  for (int i = steps - 1; i >= 0; --i) {
    const Mat r_next = out.r.col(i + 1);
    out.R1.col(i) =
        conditional_expectation(out.basis, fwd, i,
                                Mat(r_next.array().colwise() * fwd.dW.col(i).array())) /
        dt;
    out.R2.col(i) =
        conditional_expectation(out.basis, fwd, i,
                                Mat(r_next.array().colwise() * fwd.dY.col(i).array())) /
        dt;
    const Mat cond_r = conditional_expectation(out.basis, fwd, i, r_next);
    for (int j = 0; j < N_p; ++j) {
      const DriverArgs a = driver_args(fwd, bwd, i, j);
      StateArgs s{a.t, a.x, a.u, a.x_mean, a.u_mean};
      out.r(j, i) = cond_r(j, 0) + (model.l(a) + out.R2(j, i) * model.h(s)) * dt;
    }
  }
  if (!out.r.allFinite() || !out.R1.allFinite() || !out.R2.allFinite())
    throw SimulationError("solve_adjoint: non-finite (r, R1, R2) solution");

  // Damped Picard on (p, k). The current paths feed each sweep; candidates
  // are compared sweep-to-sweep and become the solution once stationary.
  const Vec k0 = -model.gamma_y(bwd.y_mean.row(0).transpose());
  std::vector<Mat> k_cur(nodes, k0.transpose().replicate(N_p, 1));
  std::vector<Mat> p_cur(nodes, Mat::Zero(N_p, n));
  std::vector<Mat> q1_cur(nodes, Mat::Zero(N_p, n)), q2_cur(nodes, Mat::Zero(N_p, n));
  std::vector<Mat> p_cand, q1_cand, q2_cand, k_cand;
  std::vector<Mat> p_prev, k_prev;

  auto duals_at = [&](int i, int j, const std::vector<Mat>& p, const std::vector<Mat>& q1,
                      const std::vector<Mat>& q2, const std::vector<Mat>& k) {
    DualVars d;
    d.p = p[i].row(j).transpose();
    d.q1 = q1[i].row(j).transpose();
    d.q2 = q2[i].row(j).transpose();
    d.k = k[i].row(j).transpose();
    d.R2 = out.R2(j, i);
    return d;
  };

  bool converged = false;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    // p-BSDE backward, with the current k path in the terminal condition and
    // the mean-field drift terms.
    p_cand.assign(nodes, Mat::Zero(N_p, n));
    q1_cand.assign(nodes, Mat::Zero(N_p, n));
    q2_cand.assign(nodes, Mat::Zero(N_p, n));

    {
      Vec mPhi_xp = Vec::Zero(n);
      Vec mphik = Vec::Zero(n);
      for (int l = 0; l < N_p; ++l) {
        const Vec xl = fwd.x[steps].row(l).transpose();
        mPhi_xp += w[steps][l] * model.Phi_xp(xl, xTm);
        mphik += w[steps][l] *
                 (model.phi_xp(xl, xTm).transpose() * k_cur[steps].row(l).transpose());
      }
      for (int j = 0; j < N_p; ++j) {
        const Vec xj = fwd.x[steps].row(j).transpose();
        const double ir = inv_rho(fwd.rho(j, steps));
        const Vec pT = model.Phi_x(xj, xTm) + ir * mPhi_xp -
                       model.phi_x(xj, xTm).transpose() * k_cur[steps].row(j).transpose() -
                       ir * mphik;
        p_cand[steps].row(j) = pT.transpose();
      }
    }

    for (int i = steps - 1; i >= 0; --i) {
      const Mat& p_next = p_cand[i + 1];
      q1_cand[i] = conditional_expectation(out.basis, fwd, i,
                                           Mat(p_next.array().colwise() * fwd.dW.col(i).array())) /
                   dt;
      q2_cand[i] = conditional_expectation(out.basis, fwd, i,
                                           Mat(p_next.array().colwise() * fwd.dY.col(i).array())) /
                   dt;
      const Mat cond_p = conditional_expectation(out.basis, fwd, i, p_next);
      p_cand[i] = cond_p;  // provisional p for evaluating the drift

      Mat Hx(N_p, n), Hxp(N_p, n);
      Vec hv(N_p);
      for (int j = 0; j < N_p; ++j) {
        const DriverArgs a = driver_args(fwd, bwd, i, j);
        const DualVars d = duals_at(i, j, p_cand, q1_cand, q2_cand, k_cur);
        Hx.row(j) = modified_partial(model, a, d, Slot::X).transpose();
        Hxp.row(j) = modified_partial(model, a, d, Slot::Xp).transpose();
        StateArgs s{a.t, a.x, a.u, a.x_mean, a.u_mean};
        hv[j] = model.h(s);
      }
      const Vec mHxp = Hxp.transpose() * w[i];
      for (int j = 0; j < N_p; ++j) {
        const Vec drift = Hx.row(j).transpose() + inv_rho(fwd.rho(j, i)) * mHxp +
                          q2_cand[i].row(j).transpose() * hv[j];
        p_cand[i].row(j) = cond_p.row(j) + drift.transpose() * dt;
      }
    }

    // k-SDE forward from the deterministic k(0).
    k_cand.assign(nodes, Mat::Zero(N_p, m));
    k_cand[0] = k0.transpose().replicate(N_p, 1);
    for (int i = 0; i < steps; ++i) {
      Mat A(N_p, m), B(N_p, m), C(N_p, m);
      Mat Ap(N_p, m), Bp(N_p, m), Cp(N_p, m);
      Vec hv(N_p);
      for (int j = 0; j < N_p; ++j) {
        const DriverArgs a = driver_args(fwd, bwd, i, j);
        const DualVars d = duals_at(i, j, p_cand, q1_cand, q2_cand, k_cand);
        A.row(j) = modified_partial(model, a, d, Slot::Y).transpose();
        B.row(j) = modified_partial(model, a, d, Slot::Z1).transpose();
        C.row(j) = modified_partial(model, a, d, Slot::Z2).transpose();
        Ap.row(j) = modified_partial(model, a, d, Slot::Yp).transpose();
        Bp.row(j) = modified_partial(model, a, d, Slot::Z1p).transpose();
        Cp.row(j) = modified_partial(model, a, d, Slot::Z2p).transpose();
        StateArgs s{a.t, a.x, a.u, a.x_mean, a.u_mean};
        hv[j] = model.h(s);
      }
      const Vec mAp = Ap.transpose() * w[i];
      const Vec mBp = Bp.transpose() * w[i];
      const Vec mCp = Cp.transpose() * w[i];
      for (int j = 0; j < N_p; ++j) {
        const double ir = inv_rho(fwd.rho(j, i));
        const Vec drift = A.row(j).transpose() + ir * mAp;
        const Vec diff1 = B.row(j).transpose() + ir * mBp;
        const Vec diff2 = C.row(j).transpose() + ir * mCp;
        k_cand[i + 1].row(j) =
            k_cand[i].row(j) - drift.transpose() * dt - diff1.transpose() * fwd.dW(j, i) -
            diff2.transpose() * (fwd.dY(j, i) - hv[j] * dt);
      }
    }

    double residual;
    if (sweep == 1) {
      residual = std::max(path_change(p_cand, p_cur), path_change(k_cand, k_cur));
    } else {
      residual = std::max(path_change(p_cand, p_prev), path_change(k_cand, k_prev));
    }
    out.picard_residuals.push_back(residual);
    if (!std::isfinite(residual))
      throw PicardError("solve_adjoint: Picard iteration diverged (non-finite residual)");
    // Sweep 1 measures distance to the initial guess, so a pass here means
    // the guess already was the fixed point.
    if (residual <= opts.tol) {
      converged = true;
      break;
    }

    p_prev = p_cand;
    k_prev = k_cand;
    const double al = opts.damping;
    for (int i = 0; i < nodes; ++i) {
      p_cur[i] = (1.0 - al) * p_cur[i] + al * p_cand[i];
      q1_cur[i] = (1.0 - al) * q1_cur[i] + al * q1_cand[i];
      q2_cur[i] = (1.0 - al) * q2_cur[i] + al * q2_cand[i];
      k_cur[i] = (1.0 - al) * k_cur[i] + al * k_cand[i];
    }
  }
  if (!converged)
    throw PicardError("solve_adjoint: Picard iteration did not converge in " +
                      std::to_string(opts.max_sweeps) + " sweeps (last residual " +
                      std::to_string(out.picard_residuals.back()) + ")");

  out.p = std::move(p_cand);
  out.q1 = std::move(q1_cand);
  out.q2 = std::move(q2_cand);
  out.k = std::move(k_cand);
  // Predictable projection of p, the dual that pairs with step-node controls
  // in the gradient (the drift correction of p(t_i) is of higher order there).
  out.p_pred.assign(nodes, Mat::Zero(N_p, n));
  out.p_pred[steps] = out.p[steps];
  for (int i = steps - 1; i >= 0; --i)
    out.p_pred[i] = conditional_expectation(out.basis, fwd, i, out.p[i + 1]);
  // Drift increment at node s is p(s) - E[p(s+1) | basis], so the raw chain
  // is a simple backward accumulation.
  out.p_raw.assign(nodes, Mat::Zero(N_p, n));
  out.p_raw[steps] = out.p[steps];
  for (int i = steps - 1; i >= 0; --i)
    out.p_raw[i] = out.p_raw[i + 1] + (out.p[i] - out.p_pred[i]);
  for (int i = 0; i < nodes; ++i)
    if (!out.p[i].allFinite() || !out.k[i].allFinite())
      throw SimulationError("solve_adjoint: non-finite adjoint values at node " +
                            std::to_string(i));
  return out;
}

}  // namespace mfsmp
