#include <cmath>

#include "mfsmp/model.hpp"

// Built-in scalar model families (n = m = k_u = 1):
//   lq              fully observed linear-quadratic, h = 0, sigma2 = 0
//   meanfield_lq    lq with mean-field drift/cost terms in E[x]
//   nonconvex       smooth nonconvex running cost, bounded h(x, u)
//   lq_concave      lq with a planted -r u^2 concavity in the running cost
//   linear_girsanov linear dynamics with affine h, used for scaling studies

namespace mfsmp {

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }
Mat m11(double x) { return Mat::Constant(1, 1, x); }

using P = std::map<std::string, double>;

double resolve(const P& defaults, const P& user, const std::string& key) {
  return user.count(key) ? user.at(key) : defaults.at(key);
}

P merge(const std::string& name, const P& defaults, const P& user) {
  for (const auto& [k, v] : user)
    if (!defaults.count(k))
      throw ConfigError("model '" + name + "': unknown parameter '" + k + "'");
  P out = defaults;
  for (const auto& [k, v] : user) out[k] = v;
  return out;
}

void fill_zero_maps(CoefficientSet& c) {
  // Every map/derivative defaults to zero of the right shape; families then
  // override the nonzero ones.
  const int n = c.dims.n, m = c.dims.m, k = c.dims.k_u;
  auto zs = [n](const StateArgs&) { return Vec::Zero(n); };
  c.b = zs; c.sigma1 = zs; c.sigma2 = zs;
  c.h = [](const StateArgs&) { return 0.0; };
  c.f = [m](const DriverArgs&) { return Vec::Zero(m); };
  c.phi = [m](const Vec&, const Vec&) { return Vec::Zero(m); };
  c.l = [](const DriverArgs&) { return 0.0; };
  c.Phi = [](const Vec&, const Vec&) { return 0.0; };
  c.gamma = [](const Vec&) { return 0.0; };

  auto znn = [n](const StateArgs&) { return Mat::Zero(n, n); };
  auto znk = [n, k](const StateArgs&) { return Mat::Zero(n, k); };
  c.b_x = znn; c.b_xp = znn; c.b_u = znk; c.b_up = znk;
  c.sigma1_x = znn; c.sigma1_xp = znn; c.sigma1_u = znk; c.sigma1_up = znk;
  c.sigma2_x = znn; c.sigma2_xp = znn; c.sigma2_u = znk; c.sigma2_up = znk;
  auto zgn = [n](const StateArgs&) { return Vec::Zero(n); };
  auto zgk = [k](const StateArgs&) { return Vec::Zero(k); };
  c.h_x = zgn; c.h_xp = zgn; c.h_u = zgk; c.h_up = zgk;

  auto zmn = [m, n](const DriverArgs&) { return Mat::Zero(m, n); };
  auto zmm = [m](const DriverArgs&) { return Mat::Zero(m, m); };
  auto zmk = [m, k](const DriverArgs&) { return Mat::Zero(m, k); };
  c.f_x = zmn; c.f_xp = zmn;
  c.f_y = zmm; c.f_z1 = zmm; c.f_z2 = zmm; c.f_yp = zmm; c.f_z1p = zmm; c.f_z2p = zmm;
  c.f_u = zmk; c.f_up = zmk;
  auto zln = [n](const DriverArgs&) { return Vec::Zero(n); };
  auto zlm = [m](const DriverArgs&) { return Vec::Zero(m); };
  auto zlk = [k](const DriverArgs&) { return Vec::Zero(k); };
  c.l_x = zln; c.l_xp = zln;
  c.l_y = zlm; c.l_z1 = zlm; c.l_z2 = zlm; c.l_yp = zlm; c.l_z1p = zlm; c.l_z2p = zlm;
  c.l_u = zlk; c.l_up = zlk;

  c.Phi_x = [n](const Vec&, const Vec&) { return Vec::Zero(n); };
  c.Phi_xp = [n](const Vec&, const Vec&) { return Vec::Zero(n); };
  c.phi_x = [m, n](const Vec&, const Vec&) { return Mat::Zero(m, n); };
  c.phi_xp = [m, n](const Vec&, const Vec&) { return Mat::Zero(m, n); };
  c.gamma_y = [m](const Vec&) { return Vec::Zero(m); };
}

CoefficientSet scalar_base(const std::string& name, double x0, double u_max) {
  CoefficientSet c;
  c.name = name;
  c.dims = Dimensions{1, 1, 1};
  c.x0 = v1(x0);
  c.constraint = ControlConstraintSet::box(v1(-u_max), v1(u_max));
  fill_zero_maps(c);
  return c;
}

CoefficientSet make_lq(const P& user, bool mean_field, bool concave_u) {
  P defaults{{"a", 0.0},  {"c", 1.0},    {"sigma", 0.2}, {"q", 1.0},  {"r", 1.0},
             {"g", 0.5},  {"x0", 1.0},   {"u_max", 4.0}};
  if (mean_field) {
    defaults["abar"] = -0.3;
    defaults["qbar"] = 0.5;
  }
  const P p = merge(mean_field ? "meanfield_lq" : "lq", defaults, user);
  const double a = p.at("a"), cc = p.at("c"), sig = p.at("sigma");
  const double q = p.at("q"), r = concave_u ? -p.at("r") : p.at("r"), g = p.at("g");
  const double abar = mean_field ? p.at("abar") : 0.0;
  const double qbar = mean_field ? p.at("qbar") : 0.0;

  CoefficientSet c = scalar_base(
      concave_u ? "lq_concave" : (mean_field ? "meanfield_lq" : "lq"), p.at("x0"), p.at("u_max"));
  c.b = [=](const StateArgs& s) { return v1(a * s.x[0] + abar * s.x_mean[0] + cc * s.u[0]); };
  c.b_x = [=](const StateArgs&) { return m11(a); };
  c.b_xp = [=](const StateArgs&) { return m11(abar); };
  c.b_u = [=](const StateArgs&) { return m11(cc); };
  c.sigma1 = [=](const StateArgs&) { return v1(sig); };
  c.l = [=](const DriverArgs& d) {
    return q * d.x[0] * d.x[0] + r * d.u[0] * d.u[0] + qbar * d.x_mean[0] * d.x_mean[0];
  };
  c.l_x = [=](const DriverArgs& d) { return v1(2.0 * q * d.x[0]); };
  c.l_u = [=](const DriverArgs& d) { return v1(2.0 * r * d.u[0]); };
  c.l_xp = [=](const DriverArgs& d) { return v1(2.0 * qbar * d.x_mean[0]); };
  c.Phi = [=](const Vec& x, const Vec&) { return g * x[0] * x[0]; };
  c.Phi_x = [=](const Vec& x, const Vec&) { return v1(2.0 * g * x[0]); };
  return c;
}

CoefficientSet make_nonconvex(const P& user) {
  P defaults{{"a", -0.5},  {"c", 1.0},  {"sigma1", 0.3}, {"sigma2", 0.2}, {"h0", 0.5},
             {"hx", 1.0},  {"h1", 0.3}, {"hu", 1.0},     {"fy", -0.5},    {"fz", 0.2},
             {"fm", 0.3},  {"pa", 0.5}, {"pb", 0.2},     {"g0", 0.3},     {"g1", 0.2},
             {"q", 0.5},   {"r", 0.5},  {"w", 0.4},      {"s", 0.2},      {"g", 0.3},
             {"x0", 1.0},  {"u_max", 4.0}};
  const P p = merge("nonconvex", defaults, user);
  const double a = p.at("a"), cc = p.at("c"), s1 = p.at("sigma1"), s2 = p.at("sigma2");
  const double h0 = p.at("h0"), hx = p.at("hx"), h1 = p.at("h1"), hu = p.at("hu");
  const double fy = p.at("fy"), fz = p.at("fz"), fm = p.at("fm");
  const double pa = p.at("pa"), pb = p.at("pb"), g0 = p.at("g0"), g1 = p.at("g1");
  const double q = p.at("q"), r = p.at("r"), w = p.at("w"), s = p.at("s"), g = p.at("g");

  CoefficientSet c = scalar_base("nonconvex", p.at("x0"), p.at("u_max"));
  c.b = [=](const StateArgs& sa) { return v1(a * sa.x[0] + cc * sa.u[0]); };
  c.b_x = [=](const StateArgs&) { return m11(a); };
  c.b_u = [=](const StateArgs&) { return m11(cc); };
  c.sigma1 = [=](const StateArgs&) { return v1(s1); };
  c.sigma2 = [=](const StateArgs&) { return v1(s2); };
  auto sech2 = [](double z) { double ch = std::cosh(z); return 1.0 / (ch * ch); };
  c.h = [=](const StateArgs& sa) {
    return h0 * std::tanh(hx * sa.x[0]) + h1 * std::tanh(hu * sa.u[0]);
  };
  c.h_x = [=](const StateArgs& sa) { return v1(h0 * hx * sech2(hx * sa.x[0])); };
  c.h_u = [=](const StateArgs& sa) { return v1(h1 * hu * sech2(hu * sa.u[0])); };
  c.f = [=](const DriverArgs& d) {
    return v1(fy * d.y[0] + fz * d.z1[0] + fm * d.y_mean[0]);
  };
  c.f_y = [=](const DriverArgs&) { return m11(fy); };
  c.f_z1 = [=](const DriverArgs&) { return m11(fz); };
  c.f_yp = [=](const DriverArgs&) { return m11(fm); };
  c.phi = [=](const Vec& x, const Vec& xp) { return v1(pa * x[0] + pb * xp[0]); };
  c.phi_x = [=](const Vec&, const Vec&) { return m11(pa); };
  c.phi_xp = [=](const Vec&, const Vec&) { return m11(pb); };
  c.gamma = [=](const Vec& y) { return g0 * y[0] + g1 * y[0] * y[0]; };
  c.gamma_y = [=](const Vec& y) { return v1(g0 + 2.0 * g1 * y[0]); };
  c.l = [=](const DriverArgs& d) {
    return q * d.x[0] * d.x[0] + r * d.u[0] * d.u[0] + w * std::cos(d.x[0]) + s * d.x[0] * d.u[0];
  };
  c.l_x = [=](const DriverArgs& d) {
    return v1(2.0 * q * d.x[0] - w * std::sin(d.x[0]) + s * d.u[0]);
  };
  c.l_u = [=](const DriverArgs& d) { return v1(2.0 * r * d.u[0] + s * d.x[0]); };
  c.Phi = [=](const Vec& x, const Vec&) { return g * x[0] * x[0]; };
  c.Phi_x = [=](const Vec& x, const Vec&) { return v1(2.0 * g * x[0]); };
  return c;
}

CoefficientSet make_linear_girsanov(const P& user) {
  P defaults{{"a", -0.5}, {"c", 1.0},  {"sigma1", 0.3}, {"sigma2", 0.2}, {"h0", 0.2},
             {"h1", 0.4}, {"h2", 0.3}, {"q", 1.0},      {"r", 1.0},      {"x0", 1.0},
             {"u_max", 4.0}};
  const P p = merge("linear_girsanov", defaults, user);
  const double a = p.at("a"), cc = p.at("c"), s1 = p.at("sigma1"), s2 = p.at("sigma2");
  const double h0 = p.at("h0"), h1 = p.at("h1"), h2 = p.at("h2");
  const double q = p.at("q"), r = p.at("r");

  CoefficientSet c = scalar_base("linear_girsanov", p.at("x0"), p.at("u_max"));
  c.b = [=](const StateArgs& sa) { return v1(a * sa.x[0] + cc * sa.u[0]); };
  c.b_x = [=](const StateArgs&) { return m11(a); };
  c.b_u = [=](const StateArgs&) { return m11(cc); };
  c.sigma1 = [=](const StateArgs&) { return v1(s1); };
  c.sigma2 = [=](const StateArgs&) { return v1(s2); };
  c.h = [=](const StateArgs& sa) { return h0 + h1 * sa.x[0] + h2 * sa.u[0]; };
  c.h_x = [=](const StateArgs&) { return v1(h1); };
  c.h_u = [=](const StateArgs&) { return v1(h2); };
  c.l = [=](const DriverArgs& d) { return q * d.x[0] * d.x[0] + r * d.u[0] * d.u[0]; };
  c.l_x = [=](const DriverArgs& d) { return v1(2.0 * q * d.x[0]); };
  c.l_u = [=](const DriverArgs& d) { return v1(2.0 * r * d.u[0]); };
  return c;
}

}  // namespace

CoefficientSet make_model(const std::string& name, const std::map<std::string, double>& params) {
  CoefficientSet c;
  if (name == "lq")
    c = make_lq(params, false, false);
  else if (name == "meanfield_lq")
    c = make_lq(params, true, false);
  else if (name == "lq_concave")
    c = make_lq(params, false, true);
  else if (name == "nonconvex")
    c = make_nonconvex(params);
  else if (name == "linear_girsanov")
    c = make_linear_girsanov(params);
  else
    throw ConfigError("unknown model '" + name + "'");
  c.check_shapes();
  return c;
}

std::vector<std::string> builtin_model_names() {
  return {"lq", "meanfield_lq", "lq_concave", "nonconvex", "linear_girsanov"};
}

}  // namespace mfsmp
