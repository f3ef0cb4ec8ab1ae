#pragma once

#include <vector>

#include "mfsmp/types.hpp"

namespace mfsmp {

/// Polynomial regression basis of bounded total degree over (x coordinates, Y).
/// Conditional expectations along simulated paths are least-squares
/// projections onto this basis (LSMC).
struct PolyBasis {
  int state_dim = 1;
  int degree = 2;

  int size() const;
  /// Design row for one sample.
  Vec eval(const Vec& x, double y) const;
  /// Design matrix for a node: samples x basis.
  Mat design(const Mat& x_node, const Vec& y_node) const;

  /// Exponent tuples (over state coords then Y) in evaluation order.
  std::vector<std::vector<int>> monomials() const;
};

struct RegressionDiagnostics {
  double residual_norm = 0.0;
  double orthogonality = 0.0;  // |A^T (A c - b)| relative to scale
  bool ridged = false;
};

/// Solves min_c |A c - B| column-wise via normal equations, with a
/// condition-number guard that falls back to ridge (lambda = 1e-8 scaled).
Mat lsq_fit(const Mat& A, const Mat& B, RegressionDiagnostics* diag = nullptr);

/// Fitted values A c for targets B (conditional-expectation estimate).
Mat lsq_predict(const Mat& A, const Mat& B, RegressionDiagnostics* diag = nullptr);

}  // namespace mfsmp
