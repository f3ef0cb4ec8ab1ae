#include "mfsmp/model.hpp"

#include <cmath>

#include "mfsmp/rng.hpp"

namespace mfsmp {

const char* slot_name(Slot s) {
  switch (s) {
    case Slot::X: return "x";
    case Slot::Y: return "y";
    case Slot::Z1: return "z1";
    case Slot::Z2: return "z2";
    case Slot::U: return "u";
    case Slot::Xp: return "x'";
    case Slot::Yp: return "y'";
    case Slot::Z1p: return "z1'";
    case Slot::Z2p: return "z2'";
    case Slot::Up: return "u'";
  }
  return "?";
}

namespace {

Vec gaussian_vec(int dim, std::uint64_t seed, std::uint64_t stream, std::uint64_t probe) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i)
    v[i] = rng::normal(seed, stream, probe, static_cast<std::uint64_t>(i));
  return v;
}

StateArgs probe_state_args(const Dimensions& d, std::uint64_t seed, std::uint64_t probe) {
  StateArgs a;
  a.t = rng::uniform(seed, 0, probe, 99);
  a.x = gaussian_vec(d.n, seed, 1, probe);
  a.u = gaussian_vec(d.k_u, seed, 2, probe);
  a.x_mean = gaussian_vec(d.n, seed, 3, probe);
  a.u_mean = gaussian_vec(d.k_u, seed, 4, probe);
  return a;
}

DriverArgs probe_driver_args(const Dimensions& d, std::uint64_t seed, std::uint64_t probe) {
  DriverArgs a;
  a.t = rng::uniform(seed, 0, probe, 98);
  a.x = gaussian_vec(d.n, seed, 10, probe);
  a.y = gaussian_vec(d.m, seed, 11, probe);
  a.z1 = gaussian_vec(d.m, seed, 12, probe);
  a.z2 = gaussian_vec(d.m, seed, 13, probe);
  a.u = gaussian_vec(d.k_u, seed, 14, probe);
  a.x_mean = gaussian_vec(d.n, seed, 15, probe);
  a.y_mean = gaussian_vec(d.m, seed, 16, probe);
  a.z1_mean = gaussian_vec(d.m, seed, 17, probe);
  a.z2_mean = gaussian_vec(d.m, seed, 18, probe);
  a.u_mean = gaussian_vec(d.k_u, seed, 19, probe);
  return a;
}

Vec* state_slot(StateArgs& a, Slot s) {
  switch (s) {
    case Slot::X: return &a.x;
    case Slot::U: return &a.u;
    case Slot::Xp: return &a.x_mean;
    case Slot::Up: return &a.u_mean;
    default: return nullptr;
  }
}

Vec* driver_slot(DriverArgs& a, Slot s) {
  switch (s) {
    case Slot::X: return &a.x;
    case Slot::Y: return &a.y;
    case Slot::Z1: return &a.z1;
    case Slot::Z2: return &a.z2;
    case Slot::U: return &a.u;
    case Slot::Xp: return &a.x_mean;
    case Slot::Yp: return &a.y_mean;
    case Slot::Z1p: return &a.z1_mean;
    case Slot::Z2p: return &a.z2_mean;
    case Slot::Up: return &a.u_mean;
  }
  return nullptr;
}

constexpr double kFdStep = 1e-5;
constexpr double kFlagTol = 1e-4;
constexpr double kBoundCap = 1e4;  // "uniformly bounded" spot-check cap

// Central finite difference of a vector-valued function of one slot.
// `slot` must point into `args`.
template <typename Args, typename Fn>
Mat fd_jacobian(const Fn& fn, Args& args, Vec* slot, int out_dim) {
  const int q = static_cast<int>(slot->size());
  Mat J(out_dim, q);
  for (int j = 0; j < q; ++j) {
    const double step = kFdStep * std::max(1.0, std::abs((*slot)[j]));
    const double saved = (*slot)[j];
    (*slot)[j] = saved + step;
    const Vec up = fn(args);
    (*slot)[j] = saved - step;
    const Vec dn = fn(args);
    (*slot)[j] = saved;
    J.col(j) = (up - dn) / (2.0 * step);
  }
  return J;
}

double rel_err(const Mat& a, const Mat& b) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

struct Validator {
  const CoefficientSet& model;
  int probes;
  std::uint64_t seed;
  ValidationReport report;

  void note(const std::string& map, Slot s, double err) {
    for (auto& e : report.entries)
      if (e.map == map && e.slot == slot_name(s)) {
        e.max_rel_err = std::max(e.max_rel_err, err);
        e.flagged = e.max_rel_err > kFlagTol;
        return;
      }
    report.entries.push_back({map, slot_name(s), err, err > kFlagTol});
  }

  void bound(const std::string& map, Slot s, double mag, double cap) {
    if (mag > cap) report.bound_violations.push_back({map, slot_name(s), mag});
  }

  template <typename Fn, typename Dn>
  void check_state(const std::string& name, const Fn& value, const Dn& deriv, Slot s,
                   bool bounded) {
    for (int p = 0; p < probes; ++p) {
      StateArgs a = probe_state_args(model.dims, seed, static_cast<std::uint64_t>(p));
      Vec* slot = state_slot(a, s);
      const Mat an = deriv(a);
      const Vec probe_val = value(a);
      if (!all_finite(probe_val) || !all_finite(an))
        throw ModelError("validate_assumptions: non-finite output of " + name);
      const Mat fd =
          fd_jacobian([&](const StateArgs& q) { return value(q); }, a, slot, (int)probe_val.size());
      if (an.rows() != fd.rows() || an.cols() != fd.cols())
        throw ModelError("validate_assumptions: dimension mismatch in " + name + " slot " +
                         slot_name(s));
      note(name, s, rel_err(an, fd));
      if (bounded) bound(name, s, an.cwiseAbs().maxCoeff(), kBoundCap);
    }
  }

  template <typename Fn, typename Dn>
  void check_driver(const std::string& name, const Fn& value, const Dn& deriv, Slot s) {
    for (int p = 0; p < probes; ++p) {
      DriverArgs a = probe_driver_args(model.dims, seed, static_cast<std::uint64_t>(p));
      Vec* slot = driver_slot(a, s);
      const Mat an = deriv(a);
      const Vec probe_val = value(a);
      if (!all_finite(probe_val) || !all_finite(an))
        throw ModelError("validate_assumptions: non-finite output of " + name);
      const Mat fd =
          fd_jacobian([&](const DriverArgs& q) { return value(q); }, a, slot, (int)probe_val.size());
      if (an.rows() != fd.rows() || an.cols() != fd.cols())
        throw ModelError("validate_assumptions: dimension mismatch in " + name + " slot " +
                         slot_name(s));
      note(name, s, rel_err(an, fd));
      // Linear-growth envelope spot check (Assumption on f/l derivatives).
      double env = 1.0 + a.x.norm() + a.y.norm() + a.z1.norm() + a.z2.norm() + a.u.norm() +
                   a.x_mean.norm() + a.y_mean.norm() + a.z1_mean.norm() + a.z2_mean.norm() +
                   a.u_mean.norm();
      bound(name, s, an.cwiseAbs().maxCoeff() / env, kBoundCap);
    }
  }

  template <typename Fn, typename Dn>
  void check_terminal(const std::string& name, const Fn& value, const Dn& deriv, Slot s,
                      int out_dim) {
    for (int p = 0; p < probes; ++p) {
      Vec x = gaussian_vec(model.dims.n, seed, 40, static_cast<std::uint64_t>(p));
      Vec xp = gaussian_vec(model.dims.n, seed, 41, static_cast<std::uint64_t>(p));
      const Mat an = deriv(x, xp);
      Vec* slot = (s == Slot::X) ? &x : &xp;
      const int q = static_cast<int>(slot->size());
      Mat fd(out_dim, q);
      for (int j = 0; j < q; ++j) {
        const double step = kFdStep * std::max(1.0, std::abs((*slot)[j]));
        const double saved = (*slot)[j];
        (*slot)[j] = saved + step;
        const Vec up = value(x, xp);
        (*slot)[j] = saved - step;
        const Vec dn = value(x, xp);
        (*slot)[j] = saved;
        fd.col(j) = (up - dn) / (2.0 * step);
      }
      if (an.rows() != fd.rows() || an.cols() != fd.cols())
        throw ModelError("validate_assumptions: dimension mismatch in " + name);
      if (!all_finite(an)) throw ModelError("validate_assumptions: non-finite output of " + name);
      note(name, s, rel_err(an, fd));
    }
  }
};

}  // namespace

void CoefficientSet::check_shapes() const {
  dims.check();
  if (x0.size() != dims.n) throw ModelError("model: x0 has wrong dimension");
  if (constraint.dim() != dims.k_u) throw ModelError("model: constraint dimension != k_u");
  const StateArgs sa = probe_state_args(dims, 1234, 0);
  const DriverArgs da = probe_driver_args(dims, 1234, 0);

  auto expect = [](const std::string& name, const Vec& v, int want) {
    if (!all_finite(v)) throw ModelError("model: non-finite output of " + name);
    if (v.size() != want)
      throw ModelError("model: " + name + " returned dimension " + std::to_string(v.size()) +
                       ", declared " + std::to_string(want));
  };
  if (!b || !sigma1 || !sigma2 || !h || !f || !phi || !l || !Phi || !gamma)
    throw ModelError("model: a coefficient or cost map is missing");
  expect("b", b(sa), dims.n);
  expect("sigma1", sigma1(sa), dims.n);
  expect("sigma2", sigma2(sa), dims.n);
  if (!std::isfinite(h(sa))) throw ModelError("model: non-finite output of h");
  expect("f", f(da), dims.m);
  expect("phi", phi(da.x, da.x_mean), dims.m);
  if (!std::isfinite(l(da))) throw ModelError("model: non-finite output of l");
  if (!std::isfinite(Phi(da.x, da.x_mean))) throw ModelError("model: non-finite output of Phi");
  if (!std::isfinite(gamma(da.y))) throw ModelError("model: non-finite output of gamma");
  if (gamma_y) expect("gamma_y", gamma_y(da.y), dims.m);
}

bool CoefficientSet::h_is_state_free(int probes, std::uint64_t seed) const {
  for (int p = 0; p < probes; ++p) {
    StateArgs a = probe_state_args(dims, seed, static_cast<std::uint64_t>(p));
    StateArgs b2 = probe_state_args(dims, seed + 1, static_cast<std::uint64_t>(p));
    b2.t = a.t;
    if (std::abs(h(a) - h(b2)) > 1e-12 * std::max(1.0, std::abs(h(a)))) return false;
  }
  return true;
}

ValidationReport validate_assumptions(const CoefficientSet& model, int probes,
                                      std::uint64_t seed) {
  model.check_shapes();
  auto require = [](const char* name, const auto& fn) {
    if (!fn) throw ModelError(std::string("validate_assumptions: missing derivative ") + name);
  };
  require("b_x", model.b_x); require("b_u", model.b_u);
  require("b_xp", model.b_xp); require("b_up", model.b_up);
  require("sigma1_x", model.sigma1_x); require("sigma1_u", model.sigma1_u);
  require("sigma1_xp", model.sigma1_xp); require("sigma1_up", model.sigma1_up);
  require("sigma2_x", model.sigma2_x); require("sigma2_u", model.sigma2_u);
  require("sigma2_xp", model.sigma2_xp); require("sigma2_up", model.sigma2_up);
  require("h_x", model.h_x); require("h_u", model.h_u);
  require("h_xp", model.h_xp); require("h_up", model.h_up);
  require("f_x", model.f_x); require("f_y", model.f_y); require("f_z1", model.f_z1);
  require("f_z2", model.f_z2); require("f_u", model.f_u); require("f_xp", model.f_xp);
  require("f_yp", model.f_yp); require("f_z1p", model.f_z1p); require("f_z2p", model.f_z2p);
  require("f_up", model.f_up);
  require("l_x", model.l_x); require("l_y", model.l_y); require("l_z1", model.l_z1);
  require("l_z2", model.l_z2); require("l_u", model.l_u); require("l_xp", model.l_xp);
  require("l_yp", model.l_yp); require("l_z1p", model.l_z1p); require("l_z2p", model.l_z2p);
  require("l_up", model.l_up);
  require("Phi_x", model.Phi_x); require("Phi_xp", model.Phi_xp);
  require("phi_x", model.phi_x); require("phi_xp", model.phi_xp);
  Validator v{model, probes, seed, {}};
  v.report.probes = probes;

  const Slot state_slots[] = {Slot::X, Slot::U, Slot::Xp, Slot::Up};
  const CoefficientSet::StateJac* bders[] = {&model.b_x, &model.b_u, &model.b_xp, &model.b_up};
  const CoefficientSet::StateJac* s1ders[] = {&model.sigma1_x, &model.sigma1_u, &model.sigma1_xp,
                                              &model.sigma1_up};
  const CoefficientSet::StateJac* s2ders[] = {&model.sigma2_x, &model.sigma2_u, &model.sigma2_xp,
                                              &model.sigma2_up};
  const CoefficientSet::StateGrad* hders[] = {&model.h_x, &model.h_u, &model.h_xp, &model.h_up};
  for (int i = 0; i < 4; ++i) {
    v.check_state("b", model.b, *bders[i], state_slots[i], true);
    v.check_state("sigma1", model.sigma1, *s1ders[i], state_slots[i], true);
    v.check_state("sigma2", model.sigma2, *s2ders[i], state_slots[i], true);
    // h is scalar; wrap as 1-vector so the same machinery applies.
    auto hv = [&](const StateArgs& a) { return Vec::Constant(1, model.h(a)); };
    auto hd = [&, i](const StateArgs& a) { return Mat((*hders[i])(a).transpose()); };
    v.check_state("h", hv, hd, state_slots[i], true);
  }

  const Slot driver_slots[] = {Slot::X,  Slot::Y,  Slot::Z1,  Slot::Z2,  Slot::U,
                               Slot::Xp, Slot::Yp, Slot::Z1p, Slot::Z2p, Slot::Up};
  const CoefficientSet::DriverJac* fders[] = {&model.f_x,  &model.f_y,  &model.f_z1, &model.f_z2,
                                              &model.f_u,  &model.f_xp, &model.f_yp, &model.f_z1p,
                                              &model.f_z2p, &model.f_up};
  const CoefficientSet::DriverGrad* lders[] = {&model.l_x,  &model.l_y,  &model.l_z1, &model.l_z2,
                                               &model.l_u,  &model.l_xp, &model.l_yp, &model.l_z1p,
                                               &model.l_z2p, &model.l_up};
  for (int i = 0; i < 10; ++i) {
    v.check_driver("f", model.f, *fders[i], driver_slots[i]);
    auto lv = [&](const DriverArgs& a) { return Vec::Constant(1, model.l(a)); };
    auto ld = [&, i](const DriverArgs& a) { return Mat((*lders[i])(a).transpose()); };
    v.check_driver("l", lv, ld, driver_slots[i]);
  }

  auto Phiv = [&](const Vec& x, const Vec& xp) { return Vec::Constant(1, model.Phi(x, xp)); };
  auto Phidx = [&](const Vec& x, const Vec& xp) { return Mat(model.Phi_x(x, xp).transpose()); };
  auto Phidxp = [&](const Vec& x, const Vec& xp) { return Mat(model.Phi_xp(x, xp).transpose()); };
  v.check_terminal("Phi", Phiv, Phidx, Slot::X, 1);
  v.check_terminal("Phi", Phiv, Phidxp, Slot::Xp, 1);
  v.check_terminal("phi", model.phi, model.phi_x, Slot::X, model.dims.m);
  v.check_terminal("phi", model.phi, model.phi_xp, Slot::Xp, model.dims.m);

  // gamma(y) against gamma_y.
  if (!model.gamma_y) throw ModelError("validate_assumptions: missing derivative gamma_y");
  for (int p = 0; p < probes; ++p) {
    Vec y = gaussian_vec(model.dims.m, seed, 50, static_cast<std::uint64_t>(p));
    const Vec an = model.gamma_y(y);
    Vec fd(model.dims.m);
    for (int j = 0; j < model.dims.m; ++j) {
      const double step = kFdStep * std::max(1.0, std::abs(y[j]));
      const double saved = y[j];
      y[j] = saved + step;
      const double up = model.gamma(y);
      y[j] = saved - step;
      const double dn = model.gamma(y);
      y[j] = saved;
      fd[j] = (up - dn) / (2.0 * step);
    }
    v.note("gamma", Slot::Y, rel_err(an, fd));
  }

  return v.report;
}

}  // namespace mfsmp
