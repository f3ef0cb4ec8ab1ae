#include "mfsmp/csv.hpp"

#include <cstdio>
#include <fstream>

namespace mfsmp {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // fixed newlines on every platform
  if (!out) throw ConfigError("cannot open for writing: " + path);
  return out;
}

void put(std::ofstream& out, double v) { out << ',' << format_double(v); }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_forward_csv(const std::string& path, const ForwardEnsemble& fwd) {
  auto out = open_out(path);
  const int n = static_cast<int>(fwd.x[0].cols());
  const int k = static_cast<int>(fwd.u[0].cols());
  out << "particle,node,t";
  for (int c = 0; c < n; ++c) out << ",x" << c;
  out << ",rho";
  for (int c = 0; c < k; ++c) out << ",u" << c;
  out << ",W,Y\n";
  for (int j = 0; j < fwd.particles; ++j)
    for (int i = 0; i < fwd.nodes(); ++i) {
      out << j << ',' << i;
      put(out, fwd.grid.node(i));
      for (int c = 0; c < n; ++c) put(out, fwd.x[i](j, c));
      put(out, fwd.rho(j, i));
      for (int c = 0; c < k; ++c) put(out, fwd.u[i](j, c));
      put(out, fwd.W(j, i));
      put(out, fwd.Y(j, i));
      out << '\n';
    }
}

void write_backward_csv(const std::string& path, const ForwardEnsemble& fwd,
                        const BackwardEnsemble& bwd) {
  auto out = open_out(path);
  const int m = static_cast<int>(bwd.y[0].cols());
  out << "particle,node,t";
  for (int c = 0; c < m; ++c) out << ",y" << c;
  for (int c = 0; c < m; ++c) out << ",z1_" << c;
  for (int c = 0; c < m; ++c) out << ",z2_" << c;
  out << '\n';
  for (int j = 0; j < fwd.particles; ++j)
    for (int i = 0; i < fwd.nodes(); ++i) {
      out << j << ',' << i;
      put(out, fwd.grid.node(i));
      for (int c = 0; c < m; ++c) put(out, bwd.y[i](j, c));
      for (int c = 0; c < m; ++c) put(out, bwd.z1[i](j, c));
      for (int c = 0; c < m; ++c) put(out, bwd.z2[i](j, c));
      out << '\n';
    }
}

void write_adjoint_csv(const std::string& path, const ForwardEnsemble& fwd,
                       const AdjointEnsemble& adj) {
  auto out = open_out(path);
  const int n = static_cast<int>(adj.p[0].cols());
  const int m = static_cast<int>(adj.k[0].cols());
  out << "particle,node,t";
  for (int c = 0; c < n; ++c) out << ",p" << c;
  for (int c = 0; c < n; ++c) out << ",q1_" << c;
  for (int c = 0; c < n; ++c) out << ",q2_" << c;
  for (int c = 0; c < m; ++c) out << ",k" << c;
  out << ",r,R1,R2\n";
  for (int j = 0; j < fwd.particles; ++j)
    for (int i = 0; i < fwd.nodes(); ++i) {
      out << j << ',' << i;
      put(out, fwd.grid.node(i));
      for (int c = 0; c < n; ++c) put(out, adj.p[i](j, c));
      for (int c = 0; c < n; ++c) put(out, adj.q1[i](j, c));
      for (int c = 0; c < n; ++c) put(out, adj.q2[i](j, c));
      for (int c = 0; c < m; ++c) put(out, adj.k[i](j, c));
      put(out, adj.r(j, i));
      put(out, adj.R1(j, i));
      put(out, adj.R2(j, i));
      out << '\n';
    }
}

void write_picard_csv(const std::string& path, const AdjointEnsemble& adj) {
  auto out = open_out(path);
  out << "sweep,residual\n";
  for (size_t s = 0; s < adj.picard_residuals.size(); ++s)
    out << (s + 1) << ',' << format_double(adj.picard_residuals[s]) << '\n';
}

void write_gradient_csv(const std::string& path, const ForwardEnsemble& fwd,
                        const GradientField& gf, const NecessaryReport& rep) {
  auto out = open_out(path);
  const int k = static_cast<int>(gf.node_G.cols());
  out << "node,t";
  for (int c = 0; c < k; ++c) out << ",G" << c;
  out << ",residual\n";
  for (int i = 0; i < fwd.grid.steps; ++i) {
    out << i;
    put(out, fwd.grid.node(i));
    for (int c = 0; c < k; ++c) put(out, gf.node_G(i, c));
    put(out, rep.residual[i]);
    out << '\n';
  }
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  auto out = open_out(path);
  out << "iter,J,se,grad_norm,step,residual,seconds\n";
  for (const auto& r : trace.iters) {
    out << r.iter;
    put(out, r.cost);
    put(out, r.cost_se);
    put(out, r.grad_norm);
    put(out, r.step);
    put(out, r.residual);
    put(out, r.seconds);
    out << '\n';
  }
}

void write_invariant_csv(const std::string& path, const InvariantReport& rep) {
  auto out = open_out(path);
  out << "module,name,passed,margin\n";
  for (const auto& c : rep.checks)
    out << c.module << ',' << '"' << c.name << '"' << ',' << (c.passed ? 1 : 0) << ','
        << format_double(c.margin) << '\n';
}

}  // namespace mfsmp
