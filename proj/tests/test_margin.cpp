#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rnngen/errors.hpp"
#include "rnngen/margin.hpp"

using namespace rnngen;

TEST_CASE("margin") {
  CHECK(margin(Vector{2, 0, -1}, 1) == 2.0);
  CHECK(margin(Vector{1, 1}, 1) == 0.0);
  CHECK(margin(Vector{0, 3}, 1) == -3.0);
  CHECK_THROWS_AS(margin(Vector{0, 3}, 3), InvalidInput);
  CHECK_THROWS_AS(margin(Vector{0, 3}, 0), InvalidInput);
  CHECK_THROWS_AS(margin(Vector{1}, 1), InvalidInput);
}

TEST_CASE("ramp loss branches") {
  CHECK(ramp_loss(0.5, 1) == 1.0);
  CHECK(ramp_loss(-0.5, 1) == 0.5);
  CHECK(ramp_loss(-2, 1) == 0.0);
  CHECK(ramp_loss(0.0, 1) == 1.0);
  CHECK(ramp_loss(-1.0, 1) == 0.0);
  CHECK_THROWS_AS(ramp_loss(0.1, 0.0), InvalidInput);
  CHECK_THROWS_AS(ramp_loss(0.1, -1.0), InvalidInput);
}

TEST_CASE("empirical risks") {
  const std::vector<LabeledOutput> mixed{{{1, 0}, 1}, {{0, 1}, 1}};
  CHECK(empirical_ramp_risk(mixed, 1.0) == 0.5);
  CHECK(zero_one_error(mixed) == 0.5);
  const std::vector<LabeledOutput> good{{{3, 0}, 1}, {{0, 2}, 2}};
  CHECK(empirical_ramp_risk(good, 1.0) == 0.0);
  CHECK(zero_one_error(good) == 0.0);
  const std::vector<LabeledOutput> bad{{{0, 3}, 1}, {{2, 0}, 2}};
  CHECK(empirical_ramp_risk(bad, 1.0) == 1.0);
  CHECK(zero_one_error(bad) == 1.0);
  const std::vector<LabeledOutput> tie{{{1, 1}, 1}};
  CHECK(zero_one_error(tie) == 1.0);
  CHECK_THROWS_AS(empirical_ramp_risk({}, 1.0), InvalidInput);
  CHECK_THROWS_AS(zero_one_error({}), InvalidInput);
}

TEST_CASE("ramp loss is 1/gamma Lipschitz and sandwiched by indicators") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 5000; ++i) {
    const double g = 0.05 + std::abs(u(rng));
    const double a = u(rng), b = u(rng);
    CHECK(std::abs(ramp_loss(a, g) - ramp_loss(b, g)) <= std::abs(a - b) / g * (1 + 1e-12));
    // a = −margin
    const double lo = a > 0 ? 1.0 : 0.0, hi = -a <= g ? 1.0 : 0.0;
    CHECK(lo <= ramp_loss(a, g));
    CHECK(ramp_loss(a, g) <= hi);
  }
}

TEST_CASE("margin sensitivity is at most twice the output distance") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n;
  for (int i = 0; i < 5000; ++i) {
    const std::size_t K = 2 + rng() % 4;
    Vector y(K), z(K);
    for (auto& v : y) v = n(rng);
    for (auto& v : z) v = n(rng);
    Vector d(K);
    for (std::size_t k = 0; k < K; ++k) d[k] = y[k] - z[k];
    const int label = 1 + static_cast<int>(rng() % K);
    CHECK(std::abs(margin(y, label) - margin(z, label)) <= 2 * norm2(d) * (1 + 1e-12));
  }
}
