#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "sobloop/transgression.hpp"

using namespace sobloop;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

LoopSample pair_loop(const Grid& g, double (*f0)(double), double (*f1)(double)) {
  return LoopSample::from_function(g, 2, [&](double t, std::span<double> o) {
    o[0] = f0(t);
    o[1] = f1(t);
  });
}

// Real trigonometric basis of R^m-valued loops without the Nyquist mode.
std::vector<LoopSample> trig_basis(const Grid& g, std::size_t m) {
  std::vector<LoopSample> basis;
  for (std::size_t c = 0; c < m; ++c) {
    for (int k = 0; k < g.nyquist(); ++k) {
      for (int kind = 0; kind < (k == 0 ? 1 : 2); ++kind) {
        basis.push_back(LoopSample::from_function(g, m, [&](double t, std::span<double> o) {
          std::fill(o.begin(), o.end(), 0.0);
          o[c] = kind == 0 ? std::cos(k * t) : std::sin(k * t);
        }));
      }
    }
  }
  return basis;
}

// Direct double loop over all node pairs for a constant matrix.
double naive_kernel(const LoopSample& g, const LoopSample& h, const std::vector<double>& j,
                    double expo) {
  const std::size_t n = g.size();
  const std::size_t m = g.components();
  const double step = 2 * pi / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      double v = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
          v += (g(a, r) - g(b, r)) * j[r * m + c] * (h(a, c) - h(b, c));
        }
      }
      const double chord = std::abs(2 * std::sin(0.5 * step * (static_cast<double>(a) - static_cast<double>(b))));
      acc += v / std::pow(chord, expo);
    }
  }
  return step * step * acc;
}

}  // namespace

TEST_CASE("constant forms must be antisymmetric") {
  CHECK_THROWS_AS(TwoFormField::constant(2, {0.0, 1.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(TwoFormField::constant(2, {0.0, 1.0, -1.0}), std::invalid_argument);
  CHECK_NOTHROW(TwoFormField::constant(3, {0, 1, 2, -1, 0, 3, -2, -3, 0}));
}

TEST_CASE("presymplectic kernel dimension matches the rank of the Gram matrix") {
  const Grid g(16);
  for (std::size_t m : {1u, 2u, 3u}) {
    const auto basis = trig_basis(g, m);
    const auto nb = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd gram(nb, nb);
    for (Eigen::Index a = 0; a < nb; ++a) {
      for (Eigen::Index b = 0; b < nb; ++b) {
        gram(a, b) = presymplectic(basis[static_cast<std::size_t>(a)], basis[static_cast<std::size_t>(b)]);
      }
    }
    CHECK((gram + gram.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    lu.setThreshold(1e-10);
    CHECK(static_cast<std::size_t>(nb - lu.rank()) == m);
    CHECK(presymplectic_kernel_dimension(g, m) == m);
  }
}

TEST_CASE("presymplectic form on cos t and sin t") {
  const Grid g(32);
  const LoopSample c = LoopSample::from_scalar(g, [](double t) { return std::cos(t); });
  const LoopSample s = LoopSample::from_scalar(g, [](double t) { return std::sin(t); });
  // <-sin, sin> - <cos, cos>
  CHECK_THAT(presymplectic(c, s), WithinRel(-2 * pi, 1e-14));
  CHECK_THAT(presymplectic_one_term(c, s), WithinRel(-2 * pi, 1e-14));
  CHECK_THAT(presymplectic(s, c), WithinRel(2 * pi, 1e-14));
}

TEST_CASE("theta on the unit circle with the canonical form") {
  const Grid g(64);
  const LoopSample circle = pair_loop(g, [](double t) { return std::cos(t); }, [](double t) { return std::sin(t); });
  // J gamma' = -gamma
  CHECK_THAT(theta_duality(circle, circle, TwoFormField::canonical(), SobolevParams(0.5, 2.0)),
             WithinRel(-2 * pi, 1e-14));
}

TEST_CASE("theta multiplier and duality on a single mode") {
  const Grid g(64);
  const LoopSample gamma = pair_loop(g, [](double t) { return std::cos(2 * t); }, [](double) { return 0.0; });
  const LoopSample h = pair_loop(g, [](double) { return 0.0; }, [](double t) { return std::sin(2 * t); });
  const TwoFormField j = TwoFormField::canonical();
  for (double s : {0.25, 0.5}) {
    const SobolevParams sp(s, 2.0);
    // 2^s cos 2t against J (0, -2^{1-s} cos 2t) = (2^{1-s} cos 2t, 0)
    CHECK_THAT(theta_multiplier(gamma, h, j, sp), WithinRel(2 * pi, 1e-13));
    // J (-2 sin 2t, 0) = (0, -2 sin 2t)
    CHECK_THAT(theta_duality(gamma, h, j, sp), WithinRel(-2 * pi, 1e-13));
  }
}

TEST_CASE("multiplier form rejects a variable field") {
  const Grid g(32);
  const LoopSample gamma = sample_loop(1.0, 2, 1, g);
  LipschitzMap b{[](std::span<const double> x, std::span<double> out) {
                   const double f = 1.0 + 0.5 * std::sin(x[0]);
                   out[0] = 0.0;
                   out[1] = -f;
                   out[2] = f;
                   out[3] = 0.0;
                 },
                 2, 4, 0.5, 1.5};
  const TwoFormField var = TwoFormField::variable(2, b);
  CHECK_THROWS_AS(theta_multiplier(gamma, gamma, var, SobolevParams(0.5, 2.0)), std::invalid_argument);
  CHECK_THROWS_AS(theta_lambda(gamma, gamma, var), std::invalid_argument);
  CHECK(std::isnan(evaluate_theta(gamma, gamma, var, SobolevParams(0.5, 2.0)).multiplier_value));
}

TEST_CASE("kernel form matches a direct double loop") {
  const Grid g(32);
  const LoopSample a = sample_loop(1.0, 3, 4, g);
  const LoopSample b = sample_loop(1.0, 3, 5, g);
  const std::vector<double> j{0, 1, 2, -1, 0, 3, -2, -3, 0};
  const TwoFormField form = TwoFormField::constant(3, j);
  for (double s : {0.25, 0.5}) {
    for (double p : {1.5, 2.0}) {
      const SobolevParams sp(s, p);
      CHECK_THAT(theta_kernel(a, b, form, sp), WithinRel(naive_kernel(a, b, j, 1.0 + s * p), 1e-11));
    }
  }
}

TEST_CASE("kernel form is antisymmetric and bounded by Hoelder") {
  const Grid g(64);
  const TwoFormField j = TwoFormField::canonical();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LoopSample a = sample_loop(1.0, 2, 2 * seed, g);
    const LoopSample b = sample_loop(1.0, 2, 2 * seed + 1, g);
    const SobolevParams sp(seed % 2 == 0 ? 0.5 : 0.25, seed % 3 == 0 ? 3.0 : 2.0);
    const double ab = theta_kernel(a, b, j, sp);
    CHECK_THAT(ab + theta_kernel(b, a, j, sp), WithinAbs(0.0, 1e-12 * (1.0 + std::abs(ab))));
    CHECK(std::abs(ab) <= theta_kernel_holder_bound(a, b, j, sp) * (1.0 + 1e-12));
  }
}

TEST_CASE("exterior derivative of the transgressed primitive") {
  const Grid g(64);
  const TwoFormField j = TwoFormField::canonical();
  const LoopSample gamma = sample_loop(1.5, 2, 7, g);
  const LoopSample h = sample_loop(1.0, 2, 8, g);
  const LoopSample k = sample_loop(1.0, 2, 9, g);
  auto alpha = [&](const LoopSample& x, const LoopSample& v) { return theta_lambda(x, v, j); };
  // d(1/2 <J x, v>)(h, k) = 1/2 <J h, k> - 1/2 <J k, h> = <J h, k>
  const double expected = duality_pair(apply_field(j, h, h), k);
  CHECK_THAT(exterior_derivative_fd(alpha, gamma, h, k, 1e-3), WithinAbs(expected, 1e-10));
  CHECK_THAT(transgressed_two_form(h, k, j), WithinAbs(expected, 1e-14));
}
