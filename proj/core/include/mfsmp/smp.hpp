#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfsmp/backward.hpp"
#include "mfsmp/forward.hpp"

namespace mfsmp {

/// Adjoint variables entering the Hamiltonian at one (particle, node).
struct DualVars {
  Vec p, q1, q2;  // R^n
  Vec k;          // R^m
  double R2 = 0.0;
};

/// Assembles the driver arguments at (node, particle) from the simulated
/// ensembles, with empirical mean-field terms.
DriverArgs driver_args(const ForwardEnsemble& fwd, const BackwardEnsemble& bwd, int node,
                       int particle);

/// H = l + <b, p> + <sigma1, q1> + <sigma2, q2> + <f, k> + R2 h.
double hamiltonian(const CoefficientSet& model, const DriverArgs& a, const DualVars& d);

/// The substituted observation coefficient R2 - <sigma2, p> - <z2, k>.
double modified_r2(const CoefficientSet& model, const DriverArgs& a, const DualVars& d);

/// Partial of H in the given slot with d.R2 treated as a constant argument.
Vec hamiltonian_partial(const CoefficientSet& model, const DriverArgs& a, const DualVars& d,
                        Slot slot);

/// Same partial after substituting modified_r2 for the R2 argument. The
/// substitution is an argument replacement: it is not differentiated through.
Vec modified_partial(const CoefficientSet& model, const DriverArgs& a, const DualVars& d,
                     Slot slot);

/// The cost gradient field G(t_i) and its chain-rule contraction onto the
/// policy parameters: per particle
///   G_j(t_i) = rho_j(t_i) Hu_j(t_i) + weighted-mean_l[Hu'_l(t_i)]
/// and grad_theta = mean_j sum_i <G_j(t_i), du/dtheta (j, t_i)> dt.
struct GradientField {
  Mat node_G;               // nodes x k_u, ensemble mean of G
  Mat node_se;              // nodes x k_u, standard error of that mean
  std::vector<Mat> G;       // per node: particles x k_u
  Vec grad_theta;           // d/dvec(theta) of the cost
};

GradientField gradient(const CoefficientSet& model, const ForwardEnsemble& fwd,
                       const BackwardEnsemble& bwd, const AdjointEnsemble& adj,
                       const LinearFeaturePolicy& policy);

/// Pointwise first-order optimality of the candidate control. At each step
/// node: residual_i = min_{v in U} <G_i, v - u_i> / (|G_i| diam U), clipped
/// to 0 when |G_i| is statistically indistinguishable from 0 (within 3
/// standard errors of the ensemble mean).
struct NecessaryReport {
  Vec residual;      // per step node, in [-1, 0]
  Vec g_norm;        // |mean G_i|
  Vec g_se;          // aggregate standard error at node i
  double worst = 0.0;  // most negative residual
};

NecessaryReport necessary_residual(const CoefficientSet& model, const ForwardEnsemble& fwd,
                                   const BackwardEnsemble& bwd, const AdjointEnsemble& adj,
                                   const LinearFeaturePolicy& policy);

/// Same check from an already computed gradient field.
NecessaryReport necessary_residual(const CoefficientSet& model, const ForwardEnsemble& fwd,
                                   const GradientField& gf);

/// Checks the hypotheses of the sufficiency theorem on simulated data:
/// structural gates (h free of state and control, linear backward terminal),
/// sampled convexity of the Hamiltonian in (x, y, z1, z2, u) jointly with the
/// mean-field slots, convexity of the terminal and initial costs, and
/// conditional minimization of the Hamiltonian over U under the auxiliary
/// measure. Each gate reports pass/fail plus the worst margin seen.
struct SufficientGate {
  std::string name;
  bool applicable = true;
  bool passed = false;
  double margin = 0.0;  // most negative convexity/minimization gap observed
};

struct SufficientReport {
  std::vector<SufficientGate> gates;
  bool conclusive() const {
    for (const auto& g : gates)
      if (g.applicable && !g.passed) return false;
    return true;
  }
};

SufficientReport sufficient_check(const CoefficientSet& model, const ForwardEnsemble& fwd,
                                  const BackwardEnsemble& bwd, const AdjointEnsemble& adj,
                                  const LinearFeaturePolicy& policy, int probes,
                                  std::uint64_t seed);

}  // namespace mfsmp
