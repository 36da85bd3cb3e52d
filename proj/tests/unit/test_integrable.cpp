#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "sobloop/integrable.hpp"

using namespace sobloop;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

LoopSample scalar(const Grid& g, double (*f)(double)) { return LoopSample::from_scalar(g, f); }

// Band-limited to |k| <= 4 so cubic products stay alias-free on N = 64.
LoopSample smooth(const Grid& g, double shift) {
  return LoopSample::from_scalar(g, [shift](double t) {
    return 0.4 * std::cos(t + shift) - 0.3 * std::sin(2 * t) + 0.2 * std::cos(3 * t - shift) + 0.1 * std::sin(4 * t);
  });
}

}  // namespace

TEST_CASE("system names parse and print") {
  CHECK(parse_system_name("kdv") == SystemName::kdv);
  CHECK(parse_system_name("camassa_holm") == SystemName::camassa_holm);
  CHECK(std::string(to_string(SystemName::nls)) == "nls");
  CHECK_THROWS_AS(parse_system_name("burgers"), std::invalid_argument);
}

TEST_CASE("KdV right-hand side on a trigonometric polynomial") {
  const Grid g(64);
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);
  // u = sin t + 0.5 cos 2t, u_t = 6 u u_x - u_xxx
  const LoopSample u = scalar(g, [](double t) { return std::sin(t) + 0.5 * std::cos(2 * t); });
  const LoopSample r = rhs(kdv, {0, 1}, u);
  const LoopSample r1 = rhs(kdv, {1, 0}, u);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double t = g.node(j);
    const double v = std::sin(t) + 0.5 * std::cos(2 * t);
    const double vx = std::cos(t) - std::sin(2 * t);
    const double vxxx = -std::cos(t) + 4 * std::sin(2 * t);
    CHECK_THAT(r(j, 0), WithinAbs(6 * v * vx - vxxx, 1e-11));
    // the same flow from the second structure and H0 (bi-Hamiltonian pair)
    CHECK_THAT(r1(j, 0), WithinAbs(6 * v * vx - vxxx, 1e-11));
  }
}

TEST_CASE("NLS right-hand side under the canonical operator") {
  const Grid g(64);
  const SystemDescriptor nls = make_system(SystemName::nls, g);
  // psi = a e^{it}: H gradient (-r'' - 2|psi|^2 r, ...) with J0 gives
  // (r_t, q_t) = (-q'' - 2|psi|^2 q, r'' + 2|psi|^2 r)
  const double a = 0.3;
  const LoopSample psi = LoopSample::from_function(g, 2, [a](double t, std::span<double> o) {
    o[0] = a * std::cos(t);
    o[1] = a * std::sin(t);
  });
  const LoopSample r = rhs(nls, {0, 0}, psi);
  const double w = 1.0 - 2 * a * a;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double t = g.node(j);
    CHECK_THAT(r(j, 0), WithinAbs(w * a * std::sin(t), 1e-13));
    CHECK_THAT(r(j, 1), WithinAbs(-w * a * std::cos(t), 1e-13));
  }
}

TEST_CASE("second-order operators reject rough data") {
  const Grid g(64);
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);
  const LoopSample rough = sample_loop(0.8, 1, 1, g);
  CHECK_THROWS_AS(rhs(kdv, {1, 0}, rough), RegularityError);
  CHECK_NOTHROW(rhs(kdv, {0, 1}, rough));
  CHECK_THROWS_AS(evolve(make_system(SystemName::camassa_holm, g), {0, 1}, rough, 1e-3, 0.01),
                  RegularityError);
  CHECK_NOTHROW(rhs(kdv, {1, 0}, sample_loop(1.5, 1, 1, g)));
}

TEST_CASE("step guard rejects a step that resolves too few modes") {
  const Grid g(128);
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);
  const LoopSample u0 = scalar(g, [](double t) { return std::cos(t); });
  CHECK_THROWS_AS(evolve(kdv, {0, 1}, u0, 1e-2, 0.1), StepGuardError);
  const FlowState st = evolve(kdv, {0, 1}, u0, 1e-4, 1e-3);
  // (K^3 + 6K) 1e-4 <= 2.5 gives K = 29
  CHECK(st.galerkin_modes == 29);
  CHECK(st.steps == 10);
  CHECK_THROWS_AS(evolve(kdv, {0, 1}, u0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(evolve(kdv, {2, 0}, u0, 1e-4, 1.0), std::invalid_argument);
}

TEST_CASE("zero data stays zero and t_end = 0 logs one row") {
  const Grid g(64);
  for (SystemName name : {SystemName::kdv, SystemName::nls, SystemName::camassa_holm}) {
    const SystemDescriptor sys = make_system(name, g);
    const LoopSample zero(g, sys.components);
    const FlowState st = evolve(sys, {0, 0}, zero, 1e-3, 0.01);
    CHECK(max_abs(st.field) == 0.0);
    CHECK(st.stable);
    const FlowState none = evolve(sys, {0, 0}, zero, 1e-3, 0.0);
    CHECK(none.conserved_log.size() == 1);
    CHECK(none.steps == 0);
  }
}

TEST_CASE("KdV conserves its Casimir and Hamiltonians over a short run") {
  const Grid g(64);
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);
  const LoopSample u0 = scalar(g, [](double t) { return std::cos(t); });
  const FlowState st = evolve(kdv, {0, 1}, u0, 2e-4, 0.05);
  const auto& first = st.conserved_log.front();
  const auto& last = st.conserved_log.back();
  CHECK(st.conserved_log.size() == 251);
  // int cos t = 0, int cos^2 / 2 = pi / 2
  CHECK_THAT(first.casimirs[0], WithinAbs(0.0, 1e-14));
  CHECK_THAT(first.hamiltonians[0], WithinRel(pi / 2, 1e-14));
  CHECK_THAT(last.casimirs[0], WithinAbs(first.casimirs[0], 1e-12));
  CHECK_THAT(last.hamiltonians[0], WithinRel(first.hamiltonians[0], 1e-8));
  CHECK_THAT(last.hamiltonians[1], WithinRel(first.hamiltonians[1], 1e-8));
}

TEST_CASE("NLS plane wave keeps its modulus") {
  const Grid g(64);
  const SystemDescriptor nls = make_system(SystemName::nls, g);
  const double a = 0.3;
  const LoopSample psi = LoopSample::from_function(g, 2, [a](double t, std::span<double> o) {
    o[0] = a * std::cos(t);
    o[1] = a * std::sin(t);
  });
  const FlowState st = evolve(nls, {0, 0}, psi, 1e-3, 0.2);
  // psi(t) = a e^{i(x - w t)} with w = 1 - 2a^2 rotates the pair (cos, sin)
  const double w = 1.0 - 2 * a * a;
  for (std::size_t j = 0; j < g.size(); j += 7) {
    const double x = g.node(j);
    CHECK_THAT(st.field(j, 0), WithinAbs(a * std::cos(x - w * 0.2), 1e-9));
    CHECK_THAT(st.field(j, 1), WithinAbs(a * std::sin(x - w * 0.2), 1e-9));
  }
}

TEST_CASE("Magri chain for KdV and its positive-dispersion normalisation") {
  const Grid g(64);
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);
  const LoopSample u = smooth(g, 0.3);
  CHECK(magri_check(kdv, 0, u) < 1e-10);
  CHECK_THROWS_AS(magri_check(kdv, 1, u), std::invalid_argument);

  SystemParams plus;
  plus.kdv = KdvNormalization::positive_dispersion;
  SystemDescriptor alt = make_system(SystemName::kdv, g, plus);
  CHECK(magri_check(alt, 0, u) > 0.1);
  alt.hamiltonians[1] = kdv_positive_dispersion_partner();
  CHECK(magri_check(alt, 0, u) < 1e-10);
  CHECK_THROWS_AS(magri_check(make_system(SystemName::nls, g), 0, sample_loop(2.0, 2, 1, g)),
                  std::invalid_argument);
}

TEST_CASE("recursion operator maps the first structure to the second") {
  const Grid g(64);
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);
  const LoopSample u = smooth(g, 0.1);
  const LoopSample xi = smooth(g, 1.7);
  // R P0 xi = P1 xi for mean-zero xi
  const LoopSample lhs = recursion_apply(kdv, kdv.operators[0].apply(u, xi), u);
  const LoopSample rhs1 = dealias(kdv.operators[1].apply(u, xi), kdv.dealias_fraction);
  CHECK(max_abs_difference(lhs, rhs1) < 1e-9 * max_abs(rhs1));
  CHECK_THROWS_AS(recursion_apply(make_system(SystemName::camassa_holm, g), xi, u), std::invalid_argument);
}

TEST_CASE("Camassa-Holm momentum round trip and Magri chain") {
  const Grid g(64);
  const LoopSample u = smooth(g, 0.9);
  const LoopSample m = u - derivative(u, 2);
  CHECK(max_abs_difference(inv_helmholtz(m), u) < 1e-13);
  const SystemDescriptor ch = make_system(SystemName::camassa_holm, g);
  CHECK(magri_check(ch, 0, u) < 1e-10);
  // u = cos t: H0 = int (cos^2 + sin^2) / 2 = pi
  CHECK_THAT(eval_functional(ch.hamiltonians[0], scalar(g, [](double t) { return std::cos(t); })),
             WithinRel(pi, 1e-14));
}
