#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "sobloop/poisson.hpp"

using namespace sobloop;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// F = int (x1^2 x2 + sin x1) dt with its gradient and Hessian.
Functional cubic() {
  return Functional::from_density(
      "cubic", 2, [](std::span<const double> x) { return x[0] * x[0] * x[1] + std::sin(x[0]); },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = 2 * x[0] * x[1] + std::cos(x[0]);
        g[1] = x[0] * x[0];
      },
      [](std::span<const double> x, std::span<double> h) {
        h[0] = 2 * x[1] - std::sin(x[0]);
        h[1] = 2 * x[0];
        h[2] = 2 * x[0];
        h[3] = 0.0;
      });
}

Functional square_of(std::size_t c) {
  return Functional::from_density(
      "x" + std::to_string(c + 1) + "^2", 2, [c](std::span<const double> x) { return x[c] * x[c]; },
      [c](std::span<const double> x, std::span<double> g) {
        g[0] = g[1] = 0.0;
        g[c] = 2 * x[c];
      },
      [c](std::span<const double>, std::span<double> h) {
        std::fill(h.begin(), h.end(), 0.0);
        h[c * 2 + c] = 2.0;
      });
}

// Scalar density a u^3 + b cos(u) with analytic derivatives.
Functional scalar_density(double a, double b, std::string name) {
  return Functional::from_density(
      std::move(name), 1, [a, b](std::span<const double> x) { return a * x[0] * x[0] * x[0] + b * std::cos(x[0]); },
      [a, b](std::span<const double> x, std::span<double> g) { g[0] = 3 * a * x[0] * x[0] - b * std::sin(x[0]); },
      [a, b](std::span<const double> x, std::span<double> h) { h[0] = 6 * a * x[0] - b * std::cos(x[0]); });
}

PoissonOperator d_dt() {
  return PoissonOperator::explicit_op(
      1, "d/dt", [](const LoopSample&, const LoopSample& xi) { return derivative(xi); }, true,
      [](const LoopSample&, const LoopSample& eta) { return -derivative(eta); });
}

LoopSample circle(const Grid& g) {
  return LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = std::cos(t);
    o[1] = std::sin(t);
  });
}

}  // namespace

TEST_CASE("pointwise gradient agrees with the hand formula and with finite differences") {
  const Grid g(32);
  const LoopSample gamma = sample_loop(1.0, 2, 1, g);
  const Functional F = cubic();
  const LoopSample grad = variational_derivative(F, gamma);
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK_THAT(grad(j, 0), WithinAbs(2 * gamma(j, 0) * gamma(j, 1) + std::cos(gamma(j, 0)), 1e-14));
    CHECK_THAT(grad(j, 1), WithinAbs(gamma(j, 0) * gamma(j, 0), 1e-14));
  }
  const Functional blind = Functional::general("cubic_eval", 2, F.eval);
  CHECK_THROWS_AS(variational_derivative(blind, gamma), std::invalid_argument);
  VariationalOptions opt;
  opt.fd_fallback = true;
  CHECK(max_abs_difference(variational_derivative(blind, gamma, opt), grad) < 1e-7);
  CHECK(gradient_check(F, gamma, sample_loop(1.0, 2, 2, g)) < 1e-8);
}

TEST_CASE("differential density: Euler-Lagrange operator") {
  const Grid g(64);
  // f = 1/2 x_t^2 + 1/2 x^2 gives delta F = x - x_tt
  DifferentialDensity dens{
      [](std::span<const double> x, std::span<const double> xt, std::span<const double>) {
        return 0.5 * xt[0] * xt[0] + 0.5 * x[0] * x[0];
      },
      [](std::span<const double> x, std::span<const double> xt, std::span<const double>, std::span<double> fx,
         std::span<double> fxt, std::span<double> fxtt) {
        fx[0] = x[0];
        fxt[0] = xt[0];
        fxtt[0] = 0.0;
      }};
  const Functional F = Functional::differential("energy", 1, dens);
  const LoopSample u = LoopSample::from_scalar(g, [](double t) { return std::cos(3 * t); });
  const LoopSample grad = variational_derivative(F, u);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK_THAT(grad(j, 0), WithinAbs(10 * std::cos(3 * g.node(j)), 1e-11));
  // int (9 sin^2 3t + cos^2 3t) / 2 = 5 pi
  CHECK_THAT(F.eval(u), WithinRel(5 * pi, 1e-13));
  CHECK(gradient_check(F, sample_loop(2.0, 1, 3, g), sample_loop(2.0, 1, 4, g)) < 1e-7);
}

TEST_CASE("cylindrical functional of the first Fourier coefficient") {
  const Grid g(32);
  // z = (Re u_0, Re u_1, Im u_1); F = (Re u_1)^2
  const Functional F = Functional::cylindrical(
      "re_u1_sq", 1, 1, [](std::span<const double> z) { return z[1] * z[1]; },
      [](std::span<const double> z, std::span<double> d) {
        d[0] = 0.0;
        d[1] = 2 * z[1];
        d[2] = 0.0;
      });
  const LoopSample u = LoopSample::from_scalar(g, [](double t) { return std::cos(t) + 0.3; });
  CHECK_THAT(F.eval(u), WithinRel(0.25, 1e-14));
  // d Re u_1 / d u_j = cos(t_j) / N, divided by the weight 2 pi / N
  const LoopSample grad = variational_derivative(F, u);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK_THAT(grad(j, 0), WithinAbs(std::cos(g.node(j)) / (2 * pi), 1e-14));
  CHECK_THROWS_AS(Functional::cylindrical("bad", 1, 16, [](std::span<const double>) { return 0.0; },
                                          [](std::span<const double>, std::span<double>) {})
                      .eval(u),
                  std::invalid_argument);
}

TEST_CASE("canonical bracket of the coordinate squares on the circle") {
  const Grid g(64);
  const PoissonOperator P = PoissonOperator::local(TwoFormField::canonical());
  // <J d/dt (0, 2 sin), (2 cos, 0)> = -4 <cos, cos>
  CHECK_THAT(bracket(square_of(0), square_of(1), P, circle(g)), WithinRel(-4 * pi, 1e-13));
  CHECK_THAT(bracket(square_of(0), square_of(0), P, circle(g)), WithinAbs(0.0, 1e-13));
}

TEST_CASE("J d/dt with a constant antisymmetric J is symmetric, not skew") {
  const Grid g(32);
  const PoissonOperator P = PoissonOperator::local(TwoFormField::canonical());
  const LoopSample gamma = circle(g);
  const LoopSample xi = LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = std::cos(t);
    o[1] = 0.0;
  });
  const LoopSample eta = LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = 0.0;
    o[1] = std::sin(t);
  });
  // J (-sin, 0) = (0, -sin) against eta; J (0, cos) = (-cos, 0) against xi
  CHECK_THAT(duality_pair(P.apply(gamma, xi), eta), WithinRel(-pi, 1e-14));
  CHECK_THAT(duality_pair(P.apply(gamma, eta), xi), WithinRel(-pi, 1e-14));
  CHECK_THAT(operator_skew_residual(P, gamma, xi, eta), WithinRel(2 * pi, 1e-14));
}

TEST_CASE("adjoint satisfies <P xi, eta> = <xi, P* eta>") {
  const Grid g(64);
  LipschitzMap a{[](std::span<const double> x, std::span<double> out) {
                   out[0] = std::cos(x[0]);
                   out[1] = std::sin(x[1]);
                 },
                 2, 2, 1.0, std::sqrt(2.0)};
  LipschitzMap b = LipschitzMap::constant(2, {1.0, -0.5});
  LipschitzMap field{[](std::span<const double> x, std::span<double> out) {
                       const double f = 1.0 + 0.5 * std::sin(x[0]);
                       out[0] = 0.0;
                       out[1] = -f;
                       out[2] = f;
                       out[3] = 0.0;
                     },
                     2, 4, 0.5, 1.5};
  const PoissonOperator P =
      PoissonOperator::weakly_nonlocal(TwoFormField::variable(2, field), {NonlocalTerm{a, b, 1, false}});
  const LoopSample gamma = sample_loop(1.5, 2, 5, g);
  const LoopSample xi = sample_loop(1.5, 2, 6, g);
  const LoopSample eta = sample_loop(1.5, 2, 7, g);
  CHECK_THAT(duality_pair(P.apply(gamma, xi), eta), WithinAbs(duality_pair(xi, P.apply_adjoint(gamma, eta)), 1e-12));
  CHECK_FALSE(P.paired());
  CHECK_FALSE(P.state_independent());
}

TEST_CASE("state gradient matches a directional difference of the pairing") {
  const Grid g(32);
  LipschitzMap field{[](std::span<const double> x, std::span<double> out) {
                       const double f = 1.0 + 0.5 * std::sin(x[0]) * std::cos(x[1]);
                       out[0] = 0.0;
                       out[1] = -f;
                       out[2] = f;
                       out[3] = 0.0;
                     },
                     2, 4, 1.0, 1.5};
  const PoissonOperator P = PoissonOperator::local(TwoFormField::variable(2, field));
  const LoopSample gamma = sample_loop(1.5, 2, 1, g);
  const LoopSample xi = sample_loop(1.5, 2, 2, g);
  const LoopSample eta = sample_loop(1.5, 2, 3, g);
  const LoopSample v = sample_loop(1.5, 2, 4, g);
  const double e = 1e-5;
  const double fd = (duality_pair(P.apply(gamma + e * v, xi), eta) - duality_pair(P.apply(gamma - e * v, xi), eta)) / (2 * e);
  CHECK_THAT(duality_pair(P.state_gradient(gamma, xi, eta), v), WithinAbs(fd, 1e-7));
}

TEST_CASE("scalar d/dt bracket is skew and satisfies Jacobi") {
  const Grid g(32);
  const PoissonOperator P = d_dt();
  const LoopSample u = sample_loop(1.5, 1, 11, g);
  const Functional F = scalar_density(1.0, 0.5, "F");
  const Functional G = scalar_density(-0.3, 1.2, "G");
  const Functional H = scalar_density(0.7, -0.4, "H");
  CHECK_THAT(bracket(F, G, P, u) + bracket(G, F, P, u), WithinAbs(0.0, 1e-13));
  const JacobiReport rep = jacobi_residual(F, G, H, P, u);
  CHECK(rep.scale > 0.0);
  CHECK(rep.relative_residual < 1e-10);
  const LoopSample an = bracket_gradient(G, H, P, u, JacobiMethod::analytic, 1e-5);
  const LoopSample fd = bracket_gradient(G, H, P, u, JacobiMethod::finite_difference, 1e-5);
  CHECK(max_abs_difference(an, fd) < 1e-6 * std::max(1.0, max_abs(an)));
}

TEST_CASE("Hessian of a smooth functional is symmetric") {
  const Grid g(16);
  const LoopSample gamma = sample_loop(1.0, 2, 9, g);
  const HessianSymmetry hs = hessian_symmetry(cubic(), gamma);
  CHECK(hs.max_entry > 0.1);
  CHECK(hs.asymmetry < 1e-9 * hs.max_entry);
  // diagonal entry (2 pi/N) d(2 x1 x2 + cos x1)/dx1 = h (2 x2 - sin x1)
  const LoopSample v = LoopSample::from_function(g, 2, [](double, std::span<double> o) {
    o[0] = 1.0;
    o[1] = 0.0;
  });
  const LoopSample hv = hessian_apply(cubic(), gamma, v);
  CHECK_THAT(hv(3, 0), WithinAbs(2 * gamma(3, 1) - std::sin(gamma(3, 0)), 1e-14));
  CHECK_THAT(hv(3, 1), WithinAbs(2 * gamma(3, 0), 1e-14));
}

TEST_CASE("total derivatives integrate to zero") {
  const Grid g(64);
  const LoopSample u = sample_loop(1.0, 1, 4, g);
  const LoopSample dens = LoopSample::from_scalar(g, [](double t) { return std::exp(std::sin(t)) + std::cos(2 * t); });
  CHECK(dh_exactness_check(u) < 1e-14);
  CHECK(dh_exactness_check(dens) < 1e-14);
  CHECK_THROWS_AS(dh_exactness_check(sample_loop(1.0, 2, 1, g)), std::invalid_argument);
}
