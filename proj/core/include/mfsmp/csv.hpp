#pragma once

#include <string>

#include "mfsmp/backward.hpp"
#include "mfsmp/invariants.hpp"
#include "mfsmp/optimizer.hpp"
#include "mfsmp/smp.hpp"

namespace mfsmp {

/// CSV writers. Numbers are printed with round-trip precision ("%.17g"), so
/// identical doubles always produce identical bytes.

/// Columns: particle, node, t, x0.., rho, u0.., W, Y.
void write_forward_csv(const std::string& path, const ForwardEnsemble& fwd);

/// Columns: particle, node, t, y0.., z1_0.., z2_0...
void write_backward_csv(const std::string& path, const ForwardEnsemble& fwd,
                        const BackwardEnsemble& bwd);

/// Columns: particle, node, t, p0.., q1_0.., q2_0.., k0.., r, R1, R2.
void write_adjoint_csv(const std::string& path, const ForwardEnsemble& fwd,
                       const AdjointEnsemble& adj);

/// Columns: sweep, residual.
void write_picard_csv(const std::string& path, const AdjointEnsemble& adj);

/// Columns: node, t, G0.., residual.
void write_gradient_csv(const std::string& path, const ForwardEnsemble& fwd,
                        const GradientField& gf, const NecessaryReport& rep);

/// Columns: iter, J, se, grad_norm, step, residual, seconds.
void write_trace_csv(const std::string& path, const RunTrace& trace);

/// Columns: module, name, passed, margin.
void write_invariant_csv(const std::string& path, const InvariantReport& rep);

std::string format_double(double v);

}  // namespace mfsmp
