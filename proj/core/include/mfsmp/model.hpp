#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mfsmp/constraint.hpp"
#include "mfsmp/types.hpp"

namespace mfsmp {

/// Problem dimensions. Both driving noises are scalar.
struct Dimensions {
  int n = 1;    // state x
  int m = 1;    // backward y, z1, z2
  int k_u = 1;  // control u

  void check() const {
    if (n < 1 || m < 1 || k_u < 1) throw ModelError("Dimensions: all dimensions must be >= 1");
  }
};

/// Arguments of the state-equation coefficients b, sigma1, sigma2, h.
struct StateArgs {
  double t;
  Vec x, u;
  Vec x_mean, u_mean;  // mean-field arguments (x', u')
};

/// Arguments of the backward driver f and running cost l.
struct DriverArgs {
  double t;
  Vec x, y, z1, z2, u;
  Vec x_mean, y_mean, z1_mean, z2_mean, u_mean;
};

/// Argument slots a coefficient can be differentiated against.
enum class Slot { X, Y, Z1, Z2, U, Xp, Yp, Z1p, Z2p, Up };

const char* slot_name(Slot s);

/// The problem definition: all coefficient and cost maps with their first
/// derivatives, plus dimensions and the control constraint set.
///
/// Jacobian layout: value rows x argument columns, so e.g. b_x is n x n and
/// f_y is m x m. Scalar-valued maps (h, l, Phi, gamma) provide gradients as
/// column vectors.
struct CoefficientSet {
  std::string name;
  Dimensions dims;
  Vec x0;
  ControlConstraintSet constraint = ControlConstraintSet::free(1);

  using StateMap = std::function<Vec(const StateArgs&)>;
  using StateScalar = std::function<double(const StateArgs&)>;
  using StateJac = std::function<Mat(const StateArgs&)>;
  using StateGrad = std::function<Vec(const StateArgs&)>;
  using DriverMap = std::function<Vec(const DriverArgs&)>;
  using DriverScalar = std::function<double(const DriverArgs&)>;
  using DriverJac = std::function<Mat(const DriverArgs&)>;
  using DriverGrad = std::function<Vec(const DriverArgs&)>;
  using TerminalMap = std::function<Vec(const Vec&, const Vec&)>;
  using TerminalScalar = std::function<double(const Vec&, const Vec&)>;
  using TerminalJac = std::function<Mat(const Vec&, const Vec&)>;
  using TerminalGrad = std::function<Vec(const Vec&, const Vec&)>;

  StateMap b, sigma1, sigma2;
  StateScalar h;
  DriverMap f;
  TerminalMap phi;  // backward terminal, R^m
  DriverScalar l;
  TerminalScalar Phi;  // terminal cost
  std::function<double(const Vec&)> gamma;  // initial cost of y(0)

  // Derivatives of b, sigma1, sigma2 w.r.t. x, u, x', u'  (n x {n,k,n,k}).
  StateJac b_x, b_u, b_xp, b_up;
  StateJac sigma1_x, sigma1_u, sigma1_xp, sigma1_up;
  StateJac sigma2_x, sigma2_u, sigma2_xp, sigma2_up;
  // Gradients of h (column vectors of the slot dimension).
  StateGrad h_x, h_u, h_xp, h_up;
  // Derivatives of f (m x slot-dim) and l (gradient of slot-dim).
  DriverJac f_x, f_y, f_z1, f_z2, f_u, f_xp, f_yp, f_z1p, f_z2p, f_up;
  DriverGrad l_x, l_y, l_z1, l_z2, l_u, l_xp, l_yp, l_z1p, l_z2p, l_up;
  // Terminal derivatives.
  TerminalGrad Phi_x, Phi_xp;            // R^n
  TerminalJac phi_x, phi_xp;             // m x n
  std::function<Vec(const Vec&)> gamma_y;  // R^m

  /// Probes every map once at a generic point and rejects dimension
  /// mismatches or non-finite outputs, naming the offending map.
  void check_shapes() const;

  /// True when h evaluates independently of (x, u, x', u') at probe points.
  bool h_is_state_free(int probes = 32, std::uint64_t seed = 7) const;
};

struct ValidationEntry {
  std::string map;   // e.g. "b"
  std::string slot;  // e.g. "x"
  double max_rel_err = 0.0;
  bool flagged = false;
};

struct BoundViolation {
  std::string map;
  std::string slot;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  std::vector<BoundViolation> bound_violations;
  int probes = 0;

  bool ok() const {
    if (!bound_violations.empty()) return false;
    for (const auto& e : entries)
      if (e.flagged) return false;
    return true;
  }
  double max_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_err);
    return m;
  }
};

/// Checks every supplied derivative map against central finite differences at
/// random probe points and spot-checks the boundedness/growth assumptions.
/// Discrepancies above 1e-4 are flagged.
ValidationReport validate_assumptions(const CoefficientSet& model, int probes,
                                      std::uint64_t seed);

/// Built-in model families, selected by name with a parameter table.
/// Unknown parameter keys are rejected.
CoefficientSet make_model(const std::string& name,
                          const std::map<std::string, double>& params = {});

std::vector<std::string> builtin_model_names();

}  // namespace mfsmp
