#include <doctest.h>

#include <cmath>

#include "mfsmp/forward.hpp"
#include "mfsmp/rng.hpp"

using namespace mfsmp;

TEST_CASE("counter draws are pure functions of the key tuple") {
  CHECK(rng::normal(7, 3, 11, 0) == rng::normal(7, 3, 11, 0));
  CHECK(rng::uniform(7, 3, 11, 0) == rng::uniform(7, 3, 11, 0));
  CHECK(rng::normal(7, 3, 11, 0) != rng::normal(7, 3, 11, 1));
  CHECK(rng::normal(7, 3, 11, 0) != rng::normal(8, 3, 11, 0));
  CHECK(rng::derive(1, 0) != rng::derive(1, 1));
}

TEST_CASE("uniform stays strictly inside (0, 1)") {
  for (int i = 0; i < 20000; ++i) {
    const double u = rng::uniform(42, 0, i, 0);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have unit-normal moments") {
  const int N = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double z = rng::normal(5, 1, i, 0);
    s += z;
    s2 += z * z;
  }
  const double mean = s / N;
  const double var = s2 / N - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(N)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("noise fill does not depend on worker count") {
  TimeGrid grid(1.0, 20);
  Mat dW1, dY1, dW4, dY4;
  fill_noise(123, grid, 300, dW1, dY1, 1);
  fill_noise(123, grid, 300, dW4, dY4, 4);
  CHECK((dW1 - dW4).cwiseAbs().maxCoeff() == 0.0);
  CHECK((dY1 - dY4).cwiseAbs().maxCoeff() == 0.0);

  // Increments should carry variance dt.
  const double v = dW1.array().square().mean();
  CHECK(v == doctest::Approx(grid.dt()).epsilon(0.1));
}
