#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace mfsmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base for all errors raised by the toolkit.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ModelError : Error {
  using Error::Error;
};
struct SimulationError : Error {
  using Error::Error;
};
struct RegressionError : Error {
  using Error::Error;
};
struct PicardError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Uniform time grid on [0, T].
struct TimeGrid {
  double T = 1.0;
  int steps = 1;

  TimeGrid() = default;
  TimeGrid(double horizon, int n) : T(horizon), steps(n) {
    if (!(horizon > 0.0) || n < 1) throw ConfigError("TimeGrid: need T > 0 and steps >= 1");
  }

  double dt() const { return T / steps; }
  double node(int i) const { return T * static_cast<double>(i) / steps; }
  int nodes() const { return steps + 1; }
};

}  // namespace mfsmp
