#include "mfsmp/constraint.hpp"

#include <cmath>

#include "mfsmp/rng.hpp"

namespace mfsmp {

ControlConstraintSet ControlConstraintSet::box(const Vec& lower, const Vec& upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw ConfigError("constraint box: lower/upper size mismatch");
  if (((upper - lower).array() < 0).any())
    throw ConfigError("constraint box: upper < lower");
  ControlConstraintSet s;
  s.family_ = Family::Box;
  s.dim_ = static_cast<int>(lower.size());
  s.lower_ = lower;
  s.upper_ = upper;
  return s;
}

ControlConstraintSet ControlConstraintSet::ball(int dim, double radius) {
  if (dim < 1 || !(radius > 0)) throw ConfigError("constraint ball: need dim >= 1, radius > 0");
  ControlConstraintSet s;
  s.family_ = Family::Ball;
  s.dim_ = dim;
  s.radius_ = radius;
  return s;
}

ControlConstraintSet ControlConstraintSet::free(int dim, double half_width) {
  return box(Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width));
}

bool ControlConstraintSet::contains(const Vec& u, double tol) const {
  if (u.size() != dim_) return false;
  if (family_ == Family::Box)
    return (u.array() >= lower_.array() - tol).all() && (u.array() <= upper_.array() + tol).all();
  return u.norm() <= radius_ + tol;
}

Vec ControlConstraintSet::project(const Vec& w) const {
  if (!all_finite(w)) throw ModelError("project_control: non-finite input");
  if (w.size() != dim_) throw ModelError("project_control: dimension mismatch");
  if (family_ == Family::Box) return w.cwiseMax(lower_).cwiseMin(upper_);
  const double nrm = w.norm();
  if (nrm <= radius_) return w;
  return w * (radius_ / nrm);
}

Mat ControlConstraintSet::projection_jacobian(const Vec& w) const {
  if (!all_finite(w)) throw ModelError("projection_jacobian: non-finite input");
  if (family_ == Family::Box) {
    Mat J = Mat::Zero(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      if (w[i] > lower_[i] && w[i] < upper_[i]) J(i, i) = 1.0;
    return J;
  }
  const double nrm = w.norm();
  if (nrm <= radius_) return Mat::Identity(dim_, dim_);
  const Vec d = w / nrm;
  return (radius_ / nrm) * (Mat::Identity(dim_, dim_) - d * d.transpose());
}

double ControlConstraintSet::diameter() const {
  if (family_ == Family::Box) return (upper_ - lower_).norm();
  return 2.0 * radius_;
}

Vec ControlConstraintSet::argmin_linear(const Vec& g) const {
  if (g.size() != dim_) throw ModelError("argmin_linear: dimension mismatch");
  if (family_ == Family::Box) {
    Vec v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = g[i] >= 0.0 ? lower_[i] : upper_[i];
    return v;
  }
  const double nrm = g.norm();
  if (nrm == 0.0) return Vec::Zero(dim_);
  return -g * (radius_ / nrm);
}

Vec ControlConstraintSet::sample(std::uint64_t seed, std::uint64_t index) const {
  Vec u(dim_);
  if (family_ == Family::Box) {
    for (int i = 0; i < dim_; ++i) {
      const double v = rng::uniform(seed, 0xC0'5E7ULL, index, static_cast<std::uint64_t>(i));
      u[i] = lower_[i] + v * (upper_[i] - lower_[i]);
    }
    return u;
  }
  // Rejection-free: gaussian direction, radius with correct density.
  for (int i = 0; i < dim_; ++i)
    u[i] = rng::normal(seed, 0xBA'11ULL, index, static_cast<std::uint64_t>(i));
  const double nrm = u.norm();
  if (nrm == 0.0) return Vec::Zero(dim_);
  const double v = rng::uniform(seed, 0xBA'12ULL, index, 0);
  return u * (radius_ * std::pow(v, 1.0 / dim_) / nrm);
}

std::vector<Vec> ControlConstraintSet::extreme_points() const {
  std::vector<Vec> pts;
  if (family_ == Family::Box) {
    if (dim_ <= 4) {
      const int corners = 1 << dim_;
      for (int c = 0; c < corners; ++c) {
        Vec p(dim_);
        for (int i = 0; i < dim_; ++i) p[i] = (c >> i) & 1 ? upper_[i] : lower_[i];
        pts.push_back(p);
      }
    } else {
      pts.push_back(lower_);
      pts.push_back(upper_);
    }
  } else {
    for (int i = 0; i < dim_; ++i) {
      Vec p = Vec::Zero(dim_);
      p[i] = radius_;
      pts.push_back(p);
      p[i] = -radius_;
      pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace mfsmp
