#include "mfsmp/policy.hpp"

namespace mfsmp {

Feature feature_from_string(const std::string& s) {
  if (s == "const") return Feature::Const;
  if (s == "t") return Feature::Time;
  if (s == "y") return Feature::Y;
  if (s == "yavg") return Feature::YAvg;
  if (s == "ymax") return Feature::YMax;
  throw ConfigError("unknown policy feature '" + s + "'");
}

std::string feature_to_string(Feature f) {
  switch (f) {
    case Feature::Const: return "const";
    case Feature::Time: return "t";
    case Feature::Y: return "y";
    case Feature::YAvg: return "yavg";
    case Feature::YMax: return "ymax";
  }
  return "?";
}

Vec FeatureSet::eval(double t, double y, double y_avg, double y_max) const {
  Vec psi(dim());
  for (int i = 0; i < dim(); ++i) {
    switch (kinds[i]) {
      case Feature::Const: psi[i] = 1.0; break;
      case Feature::Time: psi[i] = t; break;
      case Feature::Y: psi[i] = y; break;
      case Feature::YAvg: psi[i] = y_avg; break;
      case Feature::YMax: psi[i] = y_max; break;
    }
  }
  return psi;
}

FeatureSet FeatureSet::from_names(const std::vector<std::string>& names) {
  if (names.empty()) throw ConfigError("policy: empty feature list");
  FeatureSet fs;
  for (const auto& n : names) fs.kinds.push_back(feature_from_string(n));
  return fs;
}

std::vector<std::string> FeatureSet::names() const {
  std::vector<std::string> out;
  for (auto k : kinds) out.push_back(feature_to_string(k));
  return out;
}

LinearFeaturePolicy::LinearFeaturePolicy(FeatureSet features, Mat theta,
                                         ControlConstraintSet constraint)
    : features_(std::move(features)), theta_(std::move(theta)), constraint_(std::move(constraint)) {
  if (theta_.cols() != features_.dim())
    throw ConfigError("policy: theta columns != feature count");
  if (theta_.rows() != constraint_.dim())
    throw ConfigError("policy: theta rows != control dimension");
  if (!all_finite(theta_)) throw ConfigError("policy: non-finite theta");
}

Vec LinearFeaturePolicy::value(int, const Vec& psi) const {
  return constraint_.project(theta_ * psi);
}

void LinearFeaturePolicy::value_and_jacobian(const Vec& psi, Vec& u, Mat& du_dtheta) const {
  const Vec w = theta_ * psi;
  u = constraint_.project(w);
  const Mat Jp = constraint_.projection_jacobian(w);  // k x k
  const int k = static_cast<int>(theta_.rows());
  const int d = static_cast<int>(theta_.cols());
  du_dtheta.resize(k, k * d);
  // vec(theta) is column-major: parameter (a, b) sits at index a + k*b.
  for (int b = 0; b < d; ++b)
    for (int a = 0; a < k; ++a) du_dtheta.col(a + k * b) = Jp.col(a) * psi[b];
}

LinearFeaturePolicy LinearFeaturePolicy::with_theta_vec(const Vec& theta_vec) const {
  if (theta_vec.size() != theta_.size())
    throw ConfigError("policy: theta vector has wrong length");
  Mat th = theta_;
  Eigen::Map<Vec>(th.data(), th.size()) = theta_vec;
  return with_theta(th);
}

Vec LinearFeaturePolicy::theta_vec() const {
  return Eigen::Map<const Vec>(theta_.data(), theta_.size());
}

TabulatedPolicy::TabulatedPolicy(FeatureSet features, Mat values, ControlConstraintSet constraint)
    : features_(std::move(features)), values_(std::move(values)), constraint_(std::move(constraint)) {
  if (values_.cols() != constraint_.dim())
    throw ConfigError("tabulated policy: value columns != control dimension");
  if (!all_finite(values_)) throw ConfigError("tabulated policy: non-finite values");
}

Vec TabulatedPolicy::value(int node, const Vec&) const {
  const int i = std::min<int>(node, static_cast<int>(values_.rows()) - 1);
  if (i < 0) throw ConfigError("tabulated policy: empty value table");
  return constraint_.project(values_.row(i).transpose());
}

BlendPolicy::BlendPolicy(const Policy& base, const Policy& other, double eps)
    : base_(base), other_(other), eps_(eps) {
  if (base.control_dim() != other.control_dim())
    throw ConfigError("blend policy: control dimension mismatch");
  if (base.features().names() != other.features().names())
    throw ConfigError("blend policy: feature sets differ");
}

Vec BlendPolicy::value(int node, const Vec& psi) const {
  const Vec a = base_.value(node, psi);
  return a + eps_ * (other_.value(node, psi) - a);
}

}  // namespace mfsmp
