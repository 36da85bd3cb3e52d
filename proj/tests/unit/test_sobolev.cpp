#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "sobloop/sobolev.hpp"

using namespace sobloop;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

LoopSample mode(const Grid& g, int k) {
  return LoopSample::from_scalar(g, [k](double t) { return std::cos(k * t); });
}

}  // namespace

TEST_CASE("Sobolev parameters are range checked") {
  CHECK_THROWS_AS(SobolevParams(0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SobolevParams(0.6, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(SobolevParams(0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SobolevParams(0.5, std::numeric_limits<double>::infinity()), std::invalid_argument);
  const SobolevParams sp(0.25, 3.0);
  CHECK_THAT(sp.p_conj(), WithinAbs(1.5, 1e-15));
  CHECK_THAT(sp.conjugate().p(), WithinAbs(1.5, 1e-15));
}

TEST_CASE("grid L^p norms of simple loops") {
  const Grid g(64);
  const std::vector<double> one{1.0};
  for (double p : {1.5, 2.0, 3.0}) {
    CHECK_THAT(lp_norm(LoopSample::constant(g, one), p), WithinRel(std::pow(2 * pi, 1.0 / p), 1e-14));
  }
  // int cos^2 = pi
  CHECK_THAT(lp_norm(mode(g, 3), 2.0), WithinRel(std::sqrt(pi), 1e-14));
  // Euclidean across components: |(cos, sin)| = 1
  const LoopSample circ = LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = std::cos(t);
    o[1] = std::sin(t);
  });
  CHECK_THAT(lp_norm(circ, 3.0), WithinRel(std::pow(2 * pi, 1.0 / 3.0), 1e-14));
}

TEST_CASE("gagliardo sum matches the naive double loop") {
  const Grid g(32);
  const LoopSample u = sample_loop(0.9, 2, 4, g);
  for (double s : {0.25, 0.5}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const double expo = 1.0 + s * p;
      CHECK_THAT(gagliardo_power(u, SobolevParams(s, p)), WithinRel(oracle::naive_gagliardo(u, p, expo), 1e-12));
    }
  }
}

TEST_CASE("gagliardo seminorm of cos t at s = 1/2, p = 2 in closed form") {
  // |cos t - cos tau|^2 / |2 sin((t - tau)/2)|^2 = sin^2((t + tau)/2); the
  // trapezoid sum over all pairs is 2 pi^2 and the omitted diagonal is h pi.
  for (std::size_t n : {64u, 256u}) {
    const Grid g(n);
    const double expected = 2 * pi * pi - g.spacing() * pi;
    CHECK_THAT(gagliardo_power(mode(g, 1), SobolevParams(0.5, 2.0)), WithinRel(expected, 1e-12));
  }
}

TEST_CASE("gagliardo seminorm vanishes on constants and ignores shifts") {
  const Grid g(64);
  const std::vector<double> c{3.0, -1.0};
  CHECK(gagliardo_seminorm(LoopSample::constant(g, c), SobolevParams(0.5, 2.0)) == 0.0);
  const LoopSample u = sample_loop(1.0, 2, 8, g);
  const SobolevParams sp(0.25, 3.0);
  CHECK_THAT(gagliardo_seminorm(u + LoopSample::constant(g, c), sp), WithinRel(gagliardo_seminorm(u, sp), 1e-12));
  CHECK_THROWS_AS(gagliardo_seminorm(LoopSample(Grid(8), 1), sp), std::invalid_argument);
}

TEST_CASE("homogeneous spectral norm of Fourier modes") {
  const Grid g(64);
  // cos kt has coefficients 1/2 at +-k: sum |k|^{2s} |u_k|^2 = k^{2s} / 2
  for (int k : {1, 3, 7}) {
    const double v = spectral_norm(mode(g, k), 0.5, 2.0, NormKind::homogeneous_Hs2);
    CHECK_THAT(v * v, WithinRel(0.5 * k, 1e-13));
  }
}

TEST_CASE("Bessel norms: order zero is L^p and the dual kind flips s") {
  const Grid g(64);
  const LoopSample u = sample_loop(1.2, 1, 2, g);
  CHECK_THAT(spectral_norm(u, 0.0, 3.0, NormKind::bessel_Hsp), WithinRel(lp_norm(u, 3.0), 1e-13));
  CHECK_THAT(spectral_norm(u, 0.3, 1.5, NormKind::sobolev_Wsp_dual),
             WithinRel(spectral_norm(u, -0.3, 1.5, NormKind::bessel_Hsp), 1e-14));
  // cos 2t: (1 + 4)^{s/2} times the L^2 norm sqrt(pi)
  CHECK_THAT(spectral_norm(mode(g, 2), 0.5, 2.0, NormKind::bessel_Hsp),
             WithinRel(std::pow(5.0, 0.25) * std::sqrt(pi), 1e-13));
}

TEST_CASE("Littlewood-Paley norm reproduces the p = 2 weights on a single block") {
  const Grid g(64);
  // cos 3t sits in block 2 (2 < k <= 4): norm = 2^{2s} ||cos 3t||_2
  const double v = spectral_norm(mode(g, 3), 0.5, 2.0, NormKind::littlewood_paley);
  CHECK_THAT(v, WithinRel(2.0 * std::sqrt(pi), 1e-13));
}

TEST_CASE("riesz seminorm and duality pairing") {
  const Grid g(64);
  CHECK_THAT(riesz_seminorm(mode(g, 4), 0.5, 2.0), WithinRel(2.0 * std::sqrt(pi), 1e-13));
  CHECK_THAT(duality_pair(mode(g, 2), mode(g, 2)), WithinRel(pi, 1e-14));
  CHECK_THAT(duality_pair(mode(g, 2), mode(g, 3)), WithinAbs(0.0, 1e-14));
  CHECK_THROWS_AS(duality_pair(mode(g, 2), LoopSample(g, 2)), std::invalid_argument);
}

TEST_CASE("equivalence constant for p = 2, s = 1/2 approaches 4 pi^2") {
  std::vector<LoopSample> fam;
  const Grid g(512);
  for (int k : {1, 2, 3}) fam.push_back(mode(g, k));
  fam.push_back(LoopSample::constant(g, std::vector<double>{1.0}));
  const auto rep = estimate_equivalence_constant(fam, SobolevParams(0.5, 2.0));
  CHECK(rep.per_sample_ratios.size() == 3);  // the constant is skipped
  CHECK_FALSE(rep.is_band);
  CHECK(rep.spread >= 1.0);
  CHECK(rep.spread < 1.01);
  CHECK_THAT(rep.estimated_constant, WithinRel(4 * pi * pi, 0.01));
}

TEST_CASE("cos t and cos 5t give the same ratio at N = 1024") {
  const Grid g(1024);
  const SobolevParams sp(0.5, 2.0);
  auto ratio = [&](int k) {
    const LoopSample u = mode(g, k);
    const double spec = spectral_norm(u, 0.5, 2.0, NormKind::homogeneous_Hs2);
    return gagliardo_power(u, sp) / (spec * spec);
  };
  CHECK_THAT(ratio(5) / ratio(1), WithinRel(1.0, 0.01));
}

TEST_CASE("equivalence estimate needs three non-constant samples and labels bands") {
  const Grid g(64);
  std::vector<LoopSample> two{mode(g, 1), mode(g, 2)};
  CHECK_THROWS_AS(estimate_equivalence_constant(two, SobolevParams(0.5, 2.0)), std::invalid_argument);
  std::vector<LoopSample> three{mode(g, 1), mode(g, 2), mode(g, 3)};
  const auto band = estimate_equivalence_constant(three, SobolevParams(0.5, 3.0));
  CHECK(band.is_band);
  CHECK(band.min_ratio <= band.max_ratio);
  const std::vector<LoopSample> same{mode(g, 2), 2.0 * mode(g, 2), -1.0 * mode(g, 2)};
  CHECK_THAT(estimate_equivalence_constant(same, SobolevParams(0.5, 2.0)).spread, WithinAbs(1.0, 1e-13));
}

TEST_CASE("sampler is deterministic, mean-zero and tagged") {
  const Grid g(128);
  const LoopSample a = sample_loop(0.7, 2, 99, g);
  const LoopSample b = sample_loop(0.7, 2, 99, g);
  const LoopSample c = sample_loop(0.7, 2, 100, g);
  CHECK(max_abs_difference(a, b) == 0.0);
  CHECK(max_abs_difference(a, c) > 0.0);
  CHECK_THAT(mean(a)[0], WithinAbs(0.0, 1e-15));
  CHECK(std::abs(dft(a).coeff(1, 64)) < 1e-15);
  REQUIRE(a.regularity().has_value());
  CHECK(*a.regularity() == 0.7);
  CHECK_THROWS_AS(sample_loop(0.0, 1, 1, g), std::invalid_argument);
}

TEST_CASE("rough samples have a growing H^{1/2} sum, smooth ones do not") {
  auto sum = [](double sigma, std::size_t n) {
    const double v = spectral_norm(sample_loop(sigma, 1, 5, Grid(n)), 0.5, 2.0, NormKind::homogeneous_Hs2);
    return v * v;
  };
  CHECK(sum(0.3, 512) > 1.3 * sum(0.3, 128));
  CHECK_THAT(sum(2.0, 512), WithinRel(sum(2.0, 128), 1e-3));
}

TEST_CASE("Nemytskii composition and Lipschitz checks") {
  const Grid g(64);
  const LoopSample u = sample_loop(1.0, 2, 3, g);
  const LipschitzMap sinmap = LipschitzMap::componentwise(2, [](double x) { return std::sin(x); }, 1.0, 1.0);
  const LoopSample v = nemytskii(u, sinmap);
  CHECK(v(7, 1) == std::sin(u(7, 1)));
  const SobolevParams sp(0.5, 2.0);
  CHECK(gagliardo_seminorm(v, sp) <= gagliardo_seminorm(u, sp));
  CHECK(max_abs_difference(nemytskii(u, LipschitzMap::identity(2)), u) == 0.0);
  CHECK_THROWS_AS(nemytskii(u, LipschitzMap::identity(3)), std::invalid_argument);

  std::vector<std::vector<double>> xs{{0.0, 0.0}, {1.0, 2.0}};
  std::vector<std::vector<double>> ys{{1e-3, 0.0}, {1.5, 2.5}};
  CHECK(lipschitz_violation(sinmap, xs, ys) <= 1.0);
  LipschitzMap wrong = LipschitzMap::componentwise(2, [](double x) { return 3.0 * x; }, 1.0);
  CHECK(lipschitz_violation(wrong, xs, ys) > 2.9);
}
