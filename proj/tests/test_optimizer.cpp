#include <doctest.h>

#include "mfsmp/optimizer.hpp"

using namespace mfsmp;

namespace {

LinearFeaturePolicy zero_policy(const CoefficientSet& model,
                                const std::vector<std::string>& features) {
  const auto fs = FeatureSet::from_names(features);
  return LinearFeaturePolicy(fs, Mat::Zero(model.dims.k_u, fs.dim()), model.constraint);
}

OptimizerConfig small_config() {
  OptimizerConfig cfg;
  cfg.grid = TimeGrid(1.0, 25);
  cfg.particles = 1000;
  cfg.seed = 11;
  cfg.max_iters = 5;
  return cfg;
}

}  // namespace

TEST_CASE("configuration validation") {
  const auto model = make_model("lq");
  const auto pol = zero_policy(model, {"const"});
  OptimizerConfig cfg = small_config();

  cfg.backtrack = 1.5;
  CHECK_THROWS_AS(optimize(model, pol, cfg), ConfigError);
  cfg = small_config();
  cfg.armijo_c1 = 0.0;
  CHECK_THROWS_AS(optimize(model, pol, cfg), ConfigError);
  cfg = small_config();
  cfg.step0 = -1.0;
  CHECK_THROWS_AS(optimize(model, pol, cfg), ConfigError);
  cfg = small_config();
  cfg.particles = 1;
  CHECK_THROWS_AS(optimize(model, pol, cfg), ConfigError);
  cfg = small_config();
  cfg.picard.damping = 0.0;
  CHECK_THROWS_AS(optimize(model, pol, cfg), ConfigError);
}

TEST_CASE("descent on the quadratic model reduces the cost") {
  const auto model = make_model("lq");
  const auto pol = zero_policy(model, {"const", "t"});
  OptimizerConfig cfg = small_config();
  RunTrace trace;
  const auto out = optimize(model, pol, cfg, &trace);

  REQUIRE(!trace.iters.empty());
  CHECK(trace.iters.front().accepted);
  CHECK(trace.final_cost < trace.iters.front().cost);
  CHECK_FALSE(trace.stop_reason.empty());
  CHECK(out.theta_vec().size() == 2);
  for (const auto& it : trace.iters) {
    CHECK(it.cost_se > 0.0);
    CHECK(it.residual <= 0.0);
    CHECK(it.residual >= -1.0);
  }
}

TEST_CASE("repeated runs and worker counts give bitwise identical results") {
  const auto model = make_model("nonconvex");
  const auto pol = zero_policy(model, {"const", "t"});
  OptimizerConfig cfg = small_config();
  cfg.particles = 600;
  cfg.max_iters = 3;

  RunTrace t1, t2, t3;
  const auto p1 = optimize(model, pol, cfg, &t1);
  const auto p2 = optimize(model, pol, cfg, &t2);
  cfg.workers = 3;
  const auto p3 = optimize(model, pol, cfg, &t3);

  CHECK((p1.theta_vec() - p2.theta_vec()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p1.theta_vec() - p3.theta_vec()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(t1.iters.size() == t3.iters.size());
  for (size_t i = 0; i < t1.iters.size(); ++i) {
    CHECK(t1.iters[i].cost == t3.iters[i].cost);
    CHECK(t1.iters[i].grad_norm == t3.iters[i].grad_norm);
    CHECK(t1.iters[i].step == t3.iters[i].step);
  }
}
