#include "mfsmp/regression.hpp"

#include <Eigen/Dense>

#include <functional>

namespace mfsmp {

std::vector<std::vector<int>> PolyBasis::monomials() const {
  const int vars = state_dim + 1;
  std::vector<std::vector<int>> out;
  std::vector<int> expo(vars, 0);
  // Enumerate exponent tuples with total degree <= degree, graded order.
  std::function<void(int, int)> rec = [&](int var, int remaining) {
    if (var == vars) {
      out.push_back(expo);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      expo[var] = e;
      rec(var + 1, remaining - e);
    }
    expo[var] = 0;
  };
  rec(0, degree);
  return out;
}

int PolyBasis::size() const {
  // C(state_dim + 1 + degree, degree)
  int vars = state_dim + 1;
  long long num = 1, den = 1;
  for (int i = 1; i <= degree; ++i) {
    num *= vars + i;
    den *= i;
  }
  return static_cast<int>(num / den);
}

Vec PolyBasis::eval(const Vec& x, double y) const {
  const auto mono = monomials();
  Vec row(static_cast<int>(mono.size()));
  for (size_t c = 0; c < mono.size(); ++c) {
    double v = 1.0;
    for (int i = 0; i < state_dim; ++i)
      for (int e = 0; e < mono[c][i]; ++e) v *= x[i];
    for (int e = 0; e < mono[c][state_dim]; ++e) v *= y;
    row[static_cast<int>(c)] = v;
  }
  return row;
}

Mat PolyBasis::design(const Mat& x_node, const Vec& y_node) const {
  const auto mono = monomials();
  const int rows = static_cast<int>(x_node.rows());
  Mat A(rows, static_cast<int>(mono.size()));
  for (size_t c = 0; c < mono.size(); ++c) {
    Vec col = Vec::Ones(rows);
    for (int i = 0; i < state_dim; ++i)
      for (int e = 0; e < mono[c][i]; ++e) col.array() *= x_node.col(i).array();
    for (int e = 0; e < mono[c][state_dim]; ++e) col.array() *= y_node.array();
    A.col(static_cast<int>(c)) = col;
  }
  return A;
}

Mat lsq_fit(const Mat& A, const Mat& B, RegressionDiagnostics* diag) {
  if (!all_finite(A) || !all_finite(B)) throw RegressionError("regression: non-finite inputs");
  const Mat G = A.transpose() * A;
  const Mat Atb = A.transpose() * B;

  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  if (es.info() != Eigen::Success) throw RegressionError("regression: eigen decomposition failed");
  const double max_ev = es.eigenvalues().cwiseAbs().maxCoeff();
  const double min_ev = es.eigenvalues().minCoeff();
  bool ridged = false;
  Mat Gr = G;
  if (!(min_ev > 1e-12 * std::max(1.0, max_ev))) {
    // Near-singular normal equations: ridge fallback.
    const double lambda = 1e-8 * std::max(1.0, G.trace() / G.rows());
    Gr += lambda * Mat::Identity(G.rows(), G.cols());
    ridged = true;
  }
  const Mat C = Gr.ldlt().solve(Atb);
  if (!all_finite(C)) throw RegressionError("regression: solve produced non-finite coefficients");
  if (diag) {
    const Mat resid = A * C - B;
    diag->residual_norm = resid.norm();
    const double scale = std::max(1.0, Atb.norm());
    diag->orthogonality = (A.transpose() * resid).norm() / scale;
    diag->ridged = ridged;
  }
  return C;
}

Mat lsq_predict(const Mat& A, const Mat& B, RegressionDiagnostics* diag) {
  return A * lsq_fit(A, B, diag);
}

}  // namespace mfsmp
