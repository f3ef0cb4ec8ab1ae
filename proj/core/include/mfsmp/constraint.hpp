#pragma once

#include <cstdint>
#include <vector>

#include "mfsmp/types.hpp"

namespace mfsmp {

/// Convex control constraint set U with Euclidean projection.
/// Built-in families: coordinate box [lo, hi] and centered ball of given radius.
class ControlConstraintSet {
 public:
  enum class Family { Box, Ball };

  static ControlConstraintSet box(const Vec& lower, const Vec& upper);
  static ControlConstraintSet ball(int dim, double radius);
  /// Unbounded box, used when the constraint is inactive by construction.
  static ControlConstraintSet free(int dim, double half_width = 1e6);

  Family family() const { return family_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  bool contains(const Vec& u, double tol = 1e-12) const;
  Vec project(const Vec& w) const;
  /// Jacobian of the projection at w (subgradient selection on the boundary).
  Mat projection_jacobian(const Vec& w) const;

  double diameter() const;
  /// argmin over U of the linear form <g, v>.
  Vec argmin_linear(const Vec& g) const;
  /// Uniform sample from U, keyed by a counter-based stream.
  Vec sample(std::uint64_t seed, std::uint64_t index) const;
  /// Extreme/boundary probe points (box corners, ball axis points).
  std::vector<Vec> extreme_points() const;

 private:
  ControlConstraintSet() = default;
  Family family_ = Family::Box;
  int dim_ = 1;
  Vec lower_, upper_;
  double radius_ = 0.0;
};

}  // namespace mfsmp
