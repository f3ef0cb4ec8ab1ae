#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mfsmp/model.hpp"
#include "mfsmp/policy.hpp"

using namespace mfsmp;

TEST_CASE("builtin model registry") {
  const auto names = builtin_model_names();
  for (const char* n : {"lq", "meanfield_lq", "lq_concave", "nonconvex", "linear_girsanov"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  for (const auto& n : names) CHECK_NOTHROW(make_model(n));
  CHECK_THROWS_AS(make_model("no_such_model"), ConfigError);
  CHECK_THROWS_AS(make_model("lq", {{"bogus", 1.0}}), ConfigError);
}

TEST_CASE("derivative validation passes on every builtin model") {
  for (const auto& n : builtin_model_names()) {
    const auto model = make_model(n);
    const auto rep = validate_assumptions(model, 16, 99);
    INFO(n, " max rel err ", rep.max_error());
    CHECK(rep.ok());
    CHECK(rep.max_error() < 1e-4);
  }
}

TEST_CASE("validation flags exactly a planted derivative defect") {
  auto model = make_model("lq", {{"a", 0.5}});
  // Deliberately wrong b_x: off by 0.05 from the true constant Jacobian.
  model.b_x = [](const StateArgs&) { return Mat::Constant(1, 1, 0.55); };
  const auto rep = validate_assumptions(model, 16, 99);
  CHECK_FALSE(rep.ok());
  for (const auto& e : rep.entries) {
    if (e.map == "b" && e.slot == "x")
      CHECK(e.flagged);
    else
      CHECK_FALSE(e.flagged);
  }
}

TEST_CASE("shape check names the offending map") {
  auto model = make_model("lq");
  model.sigma1 = [](const StateArgs&) { return Vec::Zero(3); };  // wrong dimension
  CHECK_THROWS_WITH_AS(model.check_shapes(), doctest::Contains("sigma1"), ModelError);
}

TEST_CASE("h state-freedom probe") {
  CHECK(make_model("lq").h_is_state_free());
  CHECK_FALSE(make_model("nonconvex").h_is_state_free());
  CHECK_FALSE(make_model("linear_girsanov").h_is_state_free());
}

TEST_CASE("ball projection and linear argmin") {
  const auto ball = ControlConstraintSet::ball(2, 2.0);
  Vec w(2);
  w << 3.0, 4.0;
  const Vec p = ball.project(w);
  CHECK(p[0] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(ball.contains(p, 1e-9));
  CHECK(ball.diameter() == doctest::Approx(4.0));

  Vec g(2);
  g << 0.0, 5.0;
  const Vec v = ball.argmin_linear(g);
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(-2.0));
}

TEST_CASE("box projection, argmin and sampling") {
  Vec lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 2.0;
  const auto box = ControlConstraintSet::box(lo, hi);
  Vec w(2);
  w << 5.0, -3.0;
  const Vec p = box.project(w);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);

  Vec g(2);
  g << -1.0, 2.0;
  const Vec v = box.argmin_linear(g);
  CHECK(v[0] == 1.0);  // minimize <g, v>: go up where g < 0
  CHECK(v[1] == 0.0);
  CHECK(box.diameter() == doctest::Approx(std::sqrt(8.0)));

  for (int i = 0; i < 50; ++i) CHECK(box.contains(box.sample(11, i)));
  CHECK(box.extreme_points().size() == 4);
}

TEST_CASE("feature evaluation order") {
  const auto fs = FeatureSet::from_names({"const", "t", "y", "yavg", "ymax"});
  const Vec psi = fs.eval(0.3, 2.0, 0.5, 2.5);
  CHECK(psi[0] == 1.0);
  CHECK(psi[1] == 0.3);
  CHECK(psi[2] == 2.0);
  CHECK(psi[3] == 0.5);
  CHECK(psi[4] == 2.5);
  CHECK_THROWS_AS(FeatureSet::from_names({"wavelet"}), ConfigError);
}

TEST_CASE("linear feature policy projects and differentiates through the clamp") {
  const auto fs = FeatureSet::from_names({"const", "t"});
  Mat theta(1, 2);
  theta << 3.0, 2.0;
  Vec lo(1), hi(1);
  lo << -4.0, hi << 4.0;
  const LinearFeaturePolicy pol(fs, theta, ControlConstraintSet::box(lo, hi));

  Vec psi = fs.eval(0.25, 0.0, 0.0, 0.0);
  CHECK(pol.value(0, psi)[0] == doctest::Approx(3.5));
  psi = fs.eval(1.0, 0.0, 0.0, 0.0);
  CHECK(pol.value(0, psi)[0] == 4.0);  // clamped at the upper bound

  // Jacobian against finite differences at an interior point.
  psi = fs.eval(0.25, 0.0, 0.0, 0.0);
  Vec u;
  Mat J;
  pol.value_and_jacobian(psi, u, J);
  const double eps = 1e-6;
  Vec tv = pol.theta_vec();
  for (int i = 0; i < tv.size(); ++i) {
    Vec tp = tv, tm = tv;
    tp[i] += eps;
    tm[i] -= eps;
    const double fd =
        (pol.with_theta_vec(tp).value(0, psi)[0] - pol.with_theta_vec(tm).value(0, psi)[0]) /
        (2 * eps);
    CHECK(J(0, i) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("blend policy interpolates controls") {
  const auto fs = FeatureSet::from_names({"const"});
  const auto box = ControlConstraintSet::free(1);
  const LinearFeaturePolicy a(fs, Mat::Constant(1, 1, 1.0), box);
  const LinearFeaturePolicy b(fs, Mat::Constant(1, 1, 3.0), box);
  const BlendPolicy mid(a, b, 0.5);
  const Vec psi = Vec::Ones(1);
  CHECK(mid.value(0, psi)[0] == doctest::Approx(2.0));
}
