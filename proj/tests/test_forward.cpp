#include <doctest.h>

#include <cmath>

#include "mfsmp/forward.hpp"

using namespace mfsmp;

namespace {

LinearFeaturePolicy const_policy(const CoefficientSet& model, double value) {
  const auto fs = FeatureSet::from_names({"const"});
  return LinearFeaturePolicy(fs, Mat::Constant(model.dims.k_u, 1, value), model.constraint);
}

}  // namespace

TEST_CASE("noiseless unit drift integrates to x(t) = t") {
  // dx = u dt with u = 1, sigma = 0, x0 = 0.
  const auto model = make_model("lq", {{"a", 0.0}, {"c", 1.0}, {"sigma", 0.0}, {"x0", 0.0}});
  const auto pol = const_policy(model, 1.0);
  const TimeGrid grid(1.0, 40);
  const auto fwd = simulate_forward(model, pol, grid, 16, 3);
  for (int i = 0; i <= grid.steps; ++i) {
    CHECK(fwd.x_mean(i, 0) == doctest::Approx(grid.node(i)).epsilon(1e-13));
    for (int j = 0; j < fwd.particles; ++j)
      CHECK(fwd.x[i](j, 0) == doctest::Approx(grid.node(i)).epsilon(1e-13));
  }
}

TEST_CASE("pure mean-field drift reproduces the exponential") {
  // dx = E[x] dt, all particles identical, so x(T) -> x0 e^T as dt -> 0.
  const auto model = make_model(
      "meanfield_lq", {{"a", 0.0}, {"abar", 1.0}, {"c", 0.0}, {"sigma", 0.0}, {"x0", 1.0}});
  const auto pol = const_policy(model, 0.0);
  const TimeGrid grid(1.0, 400);
  const auto fwd = simulate_forward(model, pol, grid, 8, 5);
  CHECK(fwd.x_mean(grid.steps, 0) == doctest::Approx(std::exp(1.0)).epsilon(0.01));
}

TEST_CASE("constant observation drift gives the exact lognormal density") {
  // h constant: the log-Euler density step is exact, so
  // log rho(T) = h Y(T) - h^2 T / 2 holds to rounding.
  const double h0 = 0.2;
  const auto model =
      make_model("linear_girsanov", {{"h0", h0}, {"h1", 0.0}, {"h2", 0.0}});
  const auto pol = const_policy(model, 0.3);
  const TimeGrid grid(1.0, 30);
  const auto fwd = simulate_forward(model, pol, grid, 200, 17);
  for (int j = 0; j < fwd.particles; ++j) {
    const double expected = h0 * fwd.Y(j, grid.steps) - 0.5 * h0 * h0 * grid.T;
    CHECK(std::log(fwd.rho(j, grid.steps)) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("density starts at one and weights normalize") {
  const auto model = make_model("nonconvex");
  const auto pol = const_policy(model, 0.2);
  const TimeGrid grid(1.0, 25);
  const auto fwd = simulate_forward(model, pol, grid, 500, 11);
  for (int j = 0; j < fwd.particles; ++j) CHECK(fwd.rho(j, 0) == 1.0);
  for (int i = 0; i <= grid.steps; ++i) {
    const Vec w = girsanov_weights(fwd, i);
    CHECK(w.minCoeff() > 0.0);
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
  }
  // rho(t) is a martingale under P: its mean stays near 1.
  for (int i = 0; i <= grid.steps; ++i) {
    const double mean = fwd.rho.col(i).mean();
    const double sd = std::sqrt((fwd.rho.col(i).array() - mean).square().mean());
    const double se = sd / std::sqrt(double(fwd.particles));
    CHECK(std::abs(mean - 1.0) <= std::max(4.0 * se, 1e-12));
  }
}

TEST_CASE("simulation is bitwise independent of worker count") {
  const auto model = make_model("nonconvex");
  const auto pol = const_policy(model, 0.4);
  const TimeGrid grid(1.0, 20);
  const auto f1 = simulate_forward(model, pol, grid, 400, 21, 1);
  const auto f4 = simulate_forward(model, pol, grid, 400, 21, 4);
  for (int i = 0; i <= grid.steps; ++i)
    CHECK((f1.x[i] - f4.x[i]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.rho - f4.rho).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.Y - f4.Y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturbation scaling detects identical policies") {
  const auto model = make_model("linear_girsanov");
  const auto pol = const_policy(model, 0.5);
  const auto ps =
      perturbation_scaling(model, pol, pol, {0.2, 0.1, 0.05}, TimeGrid(1.0, 20), 200, 9);
  CHECK(ps.degenerate);
  for (double m : ps.x_moment) CHECK(m == 0.0);
  for (double m : ps.rho_moment) CHECK(m == 0.0);
}

TEST_CASE("perturbation moments scale at the predicted orders") {
  const auto model = make_model("linear_girsanov");
  const auto base = const_policy(model, 0.2);
  const auto other = const_policy(model, 1.2);
  const auto ps = perturbation_scaling(model, other, base, {0.2, 0.1, 0.05},
                                       TimeGrid(1.0, 40), 4000, 13);
  INFO("x slope ", ps.x_slope, " rho slope ", ps.rho_slope);
  CHECK(ps.x_slope > 3.4);
  CHECK(ps.x_slope < 4.6);
  CHECK(ps.rho_slope > 1.5);
  CHECK(ps.rho_slope < 2.5);
}
