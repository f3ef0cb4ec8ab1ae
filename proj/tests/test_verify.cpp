#include <doctest.h>

#include <cmath>

#include "mfsmp/invariants.hpp"
#include "mfsmp/verify.hpp"

using namespace mfsmp;

TEST_CASE("riccati solution against closed forms") {
  const TimeGrid grid(1.0, 50);
  // a = 0, c = 1, q = 0, r = 1: P(t) = g / (1 + g (T - t)).
  const auto sol = solve_riccati(0.0, 1.0, 0.0, 1.0, 1.0, grid);
  REQUIRE(sol.P.size() == grid.nodes());
  for (int i = 0; i <= grid.steps; ++i) {
    const double t = grid.node(i);
    CHECK(sol.P[i] == doctest::Approx(1.0 / (2.0 - t)).epsilon(1e-9));
    CHECK(sol.gain[i] == doctest::Approx(-sol.P[i]).epsilon(1e-12));
  }
  CHECK(sol.P[0] == doctest::Approx(0.5).epsilon(1e-9));

  // No running or terminal weight: P vanishes identically.
  const auto zero = solve_riccati(0.3, 1.0, 0.0, 1.0, 0.0, grid);
  CHECK(zero.P.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(solve_riccati(0.0, 1.0, 1.0, 0.0, 1.0, grid), ConfigError);
}

TEST_CASE("open-loop reference has a constant control when q = 0") {
  const TimeGrid grid(1.0, 50);
  // a = 0, c = 1, q = 0, r = 1, g = 0.5: P(t) = 1 / (3 - t) on [0, 1] and
  // the optimal open-loop control is identically -x0 / 3.
  const auto ref = lq_reference(0.0, 1.0, 0.0, 0.0, 1.0, 0.5, 1.0, grid);
  for (int i = 0; i <= grid.steps; ++i) {
    CHECK(ref.u_star[i] == doctest::Approx(-1.0 / 3.0).epsilon(1e-4));
    CHECK(ref.x_mean[i] == doctest::Approx((3.0 - grid.node(i)) / 3.0).epsilon(1e-4));
  }
  CHECK(ref.noise_cost == 0.0);
  CHECK(ref.mean_cost == doctest::Approx(1.0 / 3.0).epsilon(1e-4));

  // With noise the cost gains the uncontrollable offset only.
  const auto noisy = lq_reference(0.0, 1.0, 0.3, 0.0, 1.0, 0.5, 1.0, grid);
  CHECK(noisy.mean_cost == doctest::Approx(ref.mean_cost).epsilon(1e-12));
  CHECK(noisy.noise_cost > 0.0);
}

TEST_CASE("finite-difference oracle recovers an analytic gradient") {
  // x0 = 0, sigma = 0, q = g = 0, r = 1: J(theta) = theta^2 for the constant
  // control u = theta, independent of the grid. dJ/dtheta = 2 theta.
  const auto model = make_model(
      "lq", {{"x0", 0.0}, {"sigma", 0.0}, {"q", 0.0}, {"g", 0.0}, {"r", 1.0}});
  const auto fs = FeatureSet::from_names({"const"});
  const LinearFeaturePolicy pol(fs, Mat::Constant(1, 1, 0.7), model.constraint);
  const Vec fd = fd_gradient(model, pol, TimeGrid(1.0, 20), 50, 5);
  REQUIRE(fd.size() == 1);
  CHECK(fd[0] == doctest::Approx(1.4).epsilon(1e-6));
}

TEST_CASE("observation-free reference matches the full pipeline bitwise") {
  // h vanishes and no coefficient reads its mean-field slot, so the density
  // machinery must be exactly inert.
  const auto model = make_model("lq");
  const auto fs = FeatureSet::from_names({"const", "t"});
  Mat theta(1, 2);
  theta << 0.4, -0.1;
  const LinearFeaturePolicy pol(fs, theta, model.constraint);
  const TimeGrid grid(1.0, 20);
  const int N = 500;
  const std::uint64_t seed = 77;

  const auto fwd = simulate_forward(model, pol, grid, N, seed);
  const auto bwd = solve_backward_y(model, fwd, pol);
  const auto adj = solve_adjoint(model, fwd, bwd, pol);
  const auto gf = gradient(model, fwd, bwd, adj, pol);
  const auto ref = reference_run_no_observation(model, pol, grid, N, seed);

  double worst = 0.0;
  for (int i = 0; i <= grid.steps; ++i) {
    worst = std::max(worst, (fwd.x[i] - ref.x[i]).cwiseAbs().maxCoeff());
    worst = std::max(worst, (bwd.y[i] - ref.y[i]).cwiseAbs().maxCoeff());
    worst = std::max(worst, (adj.p[i] - ref.p[i]).cwiseAbs().maxCoeff());
    worst = std::max(worst, (adj.k[i] - ref.k[i]).cwiseAbs().maxCoeff());
  }
  worst = std::max(worst, (gf.grad_theta - ref.grad).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-10);
}

TEST_CASE("invariant suite holds on a builtin model") {
  const auto model = make_model("nonconvex");
  const auto fs = FeatureSet::from_names({"const"});
  const LinearFeaturePolicy pol(fs, Mat::Constant(1, 1, 0.2), model.constraint);
  const auto rep = run_invariant_suite(model, pol, TimeGrid(1.0, 20), 800, 31);
  REQUIRE(!rep.checks.empty());
  for (const auto& c : rep.checks) {
    INFO(c.module, "/", c.name, ": ", c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("invariant suite honors the module scope filter") {
  const auto model = make_model("lq");
  const auto fs = FeatureSet::from_names({"const"});
  const LinearFeaturePolicy pol(fs, Mat::Zero(1, 1), model.constraint);
  const auto rep =
      run_invariant_suite(model, pol, TimeGrid(1.0, 10), 200, 31, {"forward_engine"});
  REQUIRE(!rep.checks.empty());
  for (const auto& c : rep.checks) CHECK(c.module == "forward_engine");
}
