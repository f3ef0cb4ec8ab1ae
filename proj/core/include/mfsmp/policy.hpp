#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mfsmp/constraint.hpp"
#include "mfsmp/types.hpp"

namespace mfsmp {

/// Observation-path features a policy may depend on. Restricting to these
/// makes adaptedness structural: everything is computable from Y samples at
/// times <= t.
enum class Feature { Const, Time, Y, YAvg, YMax };

Feature feature_from_string(const std::string& s);
std::string feature_to_string(Feature f);

struct FeatureSet {
  std::vector<Feature> kinds;

  int dim() const { return static_cast<int>(kinds.size()); }
  /// y_avg and y_max are the running average/max of Y over nodes 0..i.
  Vec eval(double t, double y, double y_avg, double y_max) const;

  static FeatureSet from_names(const std::vector<std::string>& names);
  std::vector<std::string> names() const;
};

/// An observation-adapted control: u(t_i) as a function of the policy
/// features at node i. Values always lie in U.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int control_dim() const = 0;
  virtual const FeatureSet& features() const = 0;
  virtual Vec value(int node, const Vec& psi) const = 0;
};

/// u(t_i) = Pi_U(theta * psi), piecewise constant on grid cells.
class LinearFeaturePolicy : public Policy {
 public:
  LinearFeaturePolicy(FeatureSet features, Mat theta, ControlConstraintSet constraint);

  int control_dim() const override { return static_cast<int>(theta_.rows()); }
  const FeatureSet& features() const override { return features_; }
  Vec value(int node, const Vec& psi) const override;

  /// Control value and Jacobian w.r.t. vec(theta) (column-major flattening),
  /// chained through the projection.
  void value_and_jacobian(const Vec& psi, Vec& u, Mat& du_dtheta) const;

  const Mat& theta() const { return theta_; }
  const ControlConstraintSet& constraint() const { return constraint_; }
  int param_count() const { return static_cast<int>(theta_.size()); }

  LinearFeaturePolicy with_theta(const Mat& theta) const {
    return LinearFeaturePolicy(features_, theta, constraint_);
  }
  LinearFeaturePolicy with_theta_vec(const Vec& theta_vec) const;
  Vec theta_vec() const;

 private:
  FeatureSet features_;
  Mat theta_;  // k_u x d_f
  ControlConstraintSet constraint_;
};

/// Per-node constant control values, shared by all particles. Used to inject
/// oracle control paths (e.g. the Riccati-optimal open-loop control).
class TabulatedPolicy : public Policy {
 public:
  TabulatedPolicy(FeatureSet features, Mat values, ControlConstraintSet constraint);

  int control_dim() const override { return static_cast<int>(values_.cols()); }
  const FeatureSet& features() const override { return features_; }
  Vec value(int node, const Vec& psi) const override;

 private:
  FeatureSet features_;
  Mat values_;  // (nodes) x k_u
  ControlConstraintSet constraint_;
};

/// u_eps = base + eps * (other - base). Convexity of U keeps the blend
/// admissible without re-projection.
class BlendPolicy : public Policy {
 public:
  BlendPolicy(const Policy& base, const Policy& other, double eps);

  int control_dim() const override { return base_.control_dim(); }
  const FeatureSet& features() const override { return base_.features(); }
  Vec value(int node, const Vec& psi) const override;

 private:
  const Policy& base_;
  const Policy& other_;
  double eps_;
};

}  // namespace mfsmp
