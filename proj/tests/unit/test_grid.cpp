#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "sobloop/grid.hpp"

using namespace sobloop;
using Catch::Matchers::WithinAbs;

TEST_CASE("grid rejects odd and tiny sizes") {
  CHECK_THROWS_AS(Grid(7), std::invalid_argument);
  CHECK_THROWS_AS(Grid(6), std::invalid_argument);
  CHECK_THROWS_AS(Grid(0), std::invalid_argument);
  CHECK_NOTHROW(Grid(8));
}

TEST_CASE("grid nodes are uniform on [0, 2 pi)") {
  const Grid g(16);
  CHECK(g.size() == 16);
  CHECK(g.nyquist() == 8);
  CHECK_THAT(g.spacing(), WithinAbs(two_pi / 16.0, 1e-15));
  const auto t = g.nodes();
  REQUIRE(t.size() == 16);
  CHECK(t.front() == 0.0);
  CHECK_THAT(t.back(), WithinAbs(two_pi * 15.0 / 16.0, 1e-15));
}

TEST_CASE("loop sample storage is component-major") {
  const Grid g(8);
  const LoopSample u = LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = t;
    o[1] = -t;
  });
  CHECK(u.data()[1] == g.node(1));
  CHECK(u.data()[8 + 1] == -g.node(1));
  std::vector<double> p(2);
  u.point(3, p);
  CHECK(p[0] == g.node(3));
  CHECK(p[1] == -g.node(3));
}

TEST_CASE("loop sample rejects mismatched or non-finite values") {
  const Grid g(8);
  CHECK_THROWS_AS(LoopSample(g, 2, std::vector<double>(15, 0.0)), std::invalid_argument);
  std::vector<double> bad(8, 0.0);
  bad[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(LoopSample(g, 1, bad), std::invalid_argument);
  CHECK_THROWS_AS(LoopSample(g, 0), std::invalid_argument);
  CHECK_THROWS_AS(LoopSample::from_scalar(g, [](double) { return std::numeric_limits<double>::infinity(); }),
                  std::invalid_argument);
}

TEST_CASE("arithmetic requires matching shapes") {
  const Grid g(8);
  const LoopSample a(g, 1);
  const LoopSample b(g, 2);
  const LoopSample c(Grid(16), 1);
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(a - c, std::invalid_argument);
}

TEST_CASE("linear combinations act nodewise") {
  const Grid g(8);
  const LoopSample a = LoopSample::from_scalar(g, [](double t) { return std::sin(t); });
  const LoopSample b = LoopSample::from_scalar(g, [](double t) { return std::cos(t); });
  const LoopSample r = 2.0 * a - b * 3.0 + (-a);
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK_THAT(r(j, 0), WithinAbs(std::sin(g.node(j)) - 3.0 * std::cos(g.node(j)), 1e-15));
  }
}

TEST_CASE("pointwise product broadcasts a scalar loop") {
  const Grid g(8);
  const LoopSample s = LoopSample::from_scalar(g, [](double t) { return 1.0 + t; });
  const LoopSample v = LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = t;
    o[1] = 2.0;
  });
  const LoopSample p = pointwise_product(s, v);
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK(p(j, 0) == (1.0 + g.node(j)) * g.node(j));
    CHECK(p(j, 1) == (1.0 + g.node(j)) * 2.0);
  }
  CHECK_THROWS_AS(pointwise_product(v, LoopSample(g, 3)), std::invalid_argument);
}

TEST_CASE("mean, max_abs and component extraction") {
  const Grid g(32);
  const LoopSample u = LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = 0.25 + std::cos(3 * t);
    o[1] = -2.0 * std::sin(t);
  });
  const auto m = mean(u);
  CHECK_THAT(m[0], WithinAbs(0.25, 1e-15));
  CHECK_THAT(m[1], WithinAbs(0.0, 1e-15));
  CHECK_THAT(max_abs(u), WithinAbs(2.0, 1e-15));
  const LoopSample c1 = component_loop(u, 1);
  CHECK(c1.components() == 1);
  CHECK(c1(5, 0) == u(5, 1));
  CHECK(max_abs_difference(u, u) == 0.0);
}

TEST_CASE("constant loops and regularity tags") {
  const Grid g(8);
  const std::vector<double> v{1.5, -2.0};
  LoopSample c = LoopSample::constant(g, v);
  CHECK(c(7, 0) == 1.5);
  CHECK(c(0, 1) == -2.0);
  CHECK_FALSE(c.regularity().has_value());
  c.set_regularity(0.5);
  REQUIRE(c.regularity().has_value());
  CHECK(*c.regularity() == 0.5);
}
