#include <doctest.h>

#include <cmath>

#include "mfsmp/backward.hpp"

using namespace mfsmp;

namespace {

LinearFeaturePolicy const_policy(const CoefficientSet& model, double value) {
  const auto fs = FeatureSet::from_names({"const"});
  return LinearFeaturePolicy(fs, Mat::Constant(model.dims.k_u, 1, value), model.constraint);
}

}  // namespace

TEST_CASE("linear driver reproduces y(t) = e^(1 - t)") {
  // dy = -y dt, y(1) = 1: solution e^(1-t). Backward Euler evaluates the
  // driver at the regressed current value, so the node error is O(dt).
  auto model = make_model("lq");
  model.f = [](const DriverArgs& a) { return Vec(-a.y); };
  model.f_y = [](const DriverArgs&) { return Mat::Constant(1, 1, -1.0); };
  model.phi = [](const Vec&, const Vec&) { return Vec::Ones(1); };
  model.phi_x = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };

  const TimeGrid grid(1.0, 50);
  const auto pol = const_policy(model, 0.0);
  const auto fwd = simulate_forward(model, pol, grid, 1000, 7);
  const auto bwd = solve_backward_y(model, fwd, pol);
  double worst = 0.0;
  for (int i = 0; i <= grid.steps; ++i)
    worst = std::max(worst, std::abs(bwd.y_mean(i, 0) - std::exp(1.0 - grid.node(i))));
  CHECK(worst <= 2.0 * grid.dt());
}

TEST_CASE("martingale representation of Brownian motion gives z1 = 1") {
  // x = W (zero drift, unit diffusion), terminal y(T) = x(T): then
  // y(t) = W(t) and the representation integrand z1 is identically 1.
  auto model =
      make_model("lq", {{"a", 0.0}, {"c", 0.0}, {"sigma", 1.0}, {"x0", 0.0}});
  model.phi = [](const Vec& x, const Vec&) { return x; };
  model.phi_x = [](const Vec&, const Vec&) { return Mat::Identity(1, 1); };

  const TimeGrid grid(1.0, 20);
  const auto pol = const_policy(model, 0.0);
  const auto fwd = simulate_forward(model, pol, grid, 20000, 23);
  const auto bwd = solve_backward_y(model, fwd, pol);
  double num = 0.0;
  for (int i = 0; i < grid.steps; ++i) {
    num += std::pow(bwd.z1_mean(i, 0) - 1.0, 2);
    CHECK(std::abs(bwd.z2_mean(i, 0)) < 0.1);  // y carries no dY component
  }
  CHECK(std::sqrt(num / grid.steps) <= 0.05);
  // And y tracks x at every node.
  for (int i = 0; i <= grid.steps; ++i)
    CHECK(std::abs(bwd.y_mean(i, 0) - fwd.x_mean(i, 0)) < 0.05);
}

TEST_CASE("terminal values are pinned to phi exactly") {
  const auto model = make_model("nonconvex");
  const TimeGrid grid(1.0, 15);
  const auto pol = const_policy(model, 0.3);
  const auto fwd = simulate_forward(model, pol, grid, 300, 31);
  const auto bwd = solve_backward_y(model, fwd, pol);
  const Vec xTm = fwd.x_mean.row(grid.steps).transpose();
  for (int j = 0; j < fwd.particles; ++j) {
    const Vec want = model.phi(fwd.x[grid.steps].row(j).transpose(), xTm);
    CHECK(bwd.y[grid.steps](j, 0) == want[0]);
  }
}

TEST_CASE("node zero conditions on the trivial sigma-field") {
  const auto model = make_model("nonconvex");
  const TimeGrid grid(1.0, 10);
  const auto pol = const_policy(model, 0.1);
  const auto fwd = simulate_forward(model, pol, grid, 250, 41);
  PolyBasis basis{model.dims.n, 2};
  Mat targets = fwd.x[5];  // any per-particle column works
  const Mat cond = conditional_expectation(basis, fwd, 0, targets);
  for (int j = 0; j < fwd.particles; ++j)
    CHECK(cond(j, 0) == doctest::Approx(targets.col(0).mean()).epsilon(1e-14));
}

TEST_CASE("regression normal equations are satisfied") {
  const auto model = make_model("nonconvex");
  const TimeGrid grid(1.0, 20);
  const auto pol = const_policy(model, 0.2);
  const auto fwd = simulate_forward(model, pol, grid, 2000, 51);
  const auto bwd = solve_backward_y(model, fwd, pol);
  REQUIRE(!bwd.node_diagnostics.empty());
  for (const auto& d : bwd.node_diagnostics) CHECK(d.orthogonality < 1e-8);
}
