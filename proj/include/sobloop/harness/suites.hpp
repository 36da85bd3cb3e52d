#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sobloop/harness/flow.hpp"
#include "sobloop/harness/random.hpp"
#include "sobloop/harness/report.hpp"
#include "sobloop/integrable.hpp"
#include "sobloop/poisson.hpp"
#include "sobloop/sobolev.hpp"
#include "sobloop/transgression.hpp"

namespace sobloop::harness {

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"multipliers", "norms",    "theta",    "presymplectic",
                                              "brackets",    "jacobi",   "bicomplex", "nemytskii",
                                              "integrable"};
  return names;
}

/// Default thresholds, keyed <suite>.<check>. Every check a suite records
/// takes its threshold from here, so this is also the list of names accepted
/// as tolerance.<suite>.<check> overrides.
inline const std::map<std::string, double>& default_thresholds() {
  static const std::map<std::string, double> t{
      {"multipliers.dft_roundtrip", 1e-12},
      {"multipliers.parseval", 1e-12},
      {"multipliers.dt_equals_hilbert_absD", 1e-12},
      {"multipliers.dt_equals_minus_hilbert_absD", 1e-12},
      {"multipliers.hilbert_squared", 1e-12},
      {"multipliers.dt_inv_dt", 1e-12},
      {"multipliers.helmholtz_inv_helmholtz", 1e-12},
      {"multipliers.hilbert_skew", 1e-12},
      {"multipliers.absD_composition", 1e-12},
      {"multipliers.bessel_inverse", 1e-12},
      {"multipliers.derivative_of_sine", 1e-12},
      {"multipliers.hilbert_of_cosine", 1e-12},
      {"multipliers.zero_mode_annihilated", 0.0},
      {"multipliers.runtime", 1.0},
      {"norms.spread_s0.5", 1.01},
      {"norms.spread_s0.25", 1.01},
      {"norms.spread_decrease_s0.5", 0.0},
      {"norms.spread_decrease_s0.25", 0.0},
      {"norms.constant_estimate_change", 0.01},
      {"norms.scaling_invariance", 0.0},
      {"norms.gagliardo_constant", 1e-12},
      {"norms.gagliardo_shift_invariance", 1e-12},
      {"norms.bessel_inverse", 1e-12},
      {"norms.duality_holder_violations", 0.0},
      {"norms.sample_determinism", 0.0},
      {"norms.spread_random_s0.5", 1.01},
      {"norms.band_width_cfg", 1.0},
      {"norms.rough_sample_growth", 1.0},
      {"norms.runtime", 30.0},
      {"theta.kernel_duality_ratio", 0.02},
      {"theta.holder_violations", 0.0},
      {"theta.multiplier_equals_duality", 1e-10},
      {"theta.multiplier_equals_minus_duality", 1e-10},
      {"theta.unit_circle", 1e-12},
      {"theta.constant_h", 1e-12},
      {"theta.kernel_self", 1e-12},
      {"theta.kernel_antisymmetry", 1e-12},
      {"theta.bilinearity", 1e-12},
      {"theta.variable_field_reduces", 0.0},
      {"theta.kernel_hilbert_ratio_convergence", 0.75},
      {"presymplectic.skewness", 1e-12},
      {"presymplectic.kernel_dimension_m1", 0.0},
      {"presymplectic.kernel_dimension_m2", 0.0},
      {"presymplectic.kernel_dimension_m5", 0.0},
      {"presymplectic.one_term", 1e-12},
      {"presymplectic.unit_circle", 1e-12},
      {"presymplectic.constant_direction", 1e-12},
      {"presymplectic.lambda_exterior_derivative", 1e-8},
      {"brackets.skew_constant_J", 1e-10},
      {"brackets.skew_lipschitz_J", 1e-10},
      {"brackets.skew_weakly_nonlocal", 1e-10},
      {"brackets.unit_circle", 1e-10},
      {"brackets.linear_functionals", 1e-12},
      {"brackets.skew_tail_only", 1e-10},
      {"brackets.skew_symmetric_metric", 1e-10},
      {"brackets.skew_scalar_derivative", 1e-10},
      {"jacobi.constant_J_analytic", 1e-6},
      {"jacobi.constant_J_fd", 1e-3},
      {"jacobi.adversarial_over_floor", 10.0},
      {"jacobi.calibration_floor", 1e-10},
      {"jacobi.flat_metric_fd", 1e-3},
      {"jacobi.nonflat_metric_over_floor", 10.0},
      {"bicomplex.hessian_quadratic", 1e-8},
      {"bicomplex.hessian_trig", 1e-5},
      {"bicomplex.hessian_random", 1e-5},
      {"bicomplex.hessian_differential", 1e-5},
      {"bicomplex.hessian_linear", 1e-8},
      {"bicomplex.dh_exactness", 1e-12},
      {"bicomplex.dh_constant", 1e-12},
      {"bicomplex.total_derivative_gradient", 1e-6},
      {"nemytskii.violations_sin", 0.0},
      {"nemytskii.violations_vector", 0.0},
      {"nemytskii.identity", 0.0},
      {"nemytskii.constant_map", 0.0},
      {"integrable.kdv_rhs_sin", 1e-8},
      {"integrable.kdv_rhs_random", 1e-8},
      {"integrable.nls_rhs_circle", 1e-8},
      {"integrable.nls_rhs_random", 1e-8},
      {"integrable.kdv_casimir_drift", 1e-10},
      {"integrable.kdv_H0_drift", 1e-6},
      {"integrable.kdv_H1_drift", 1e-6},
      {"integrable.nls_l2_drift", 1e-8},
      {"integrable.zero_data", 0.0},
      {"integrable.kdv_magri", 1e-8},
      {"integrable.ch_roundtrip", 1e-12},
      {"integrable.recursion_maps_P0_to_P1", 1e-8},
      {"integrable.regularity_rejected", 1.0},
      {"integrable.kdv_positive_dispersion_magri", 1e-8},
      {"integrable.kdv_positive_dispersion_partner_magri", 1e-8},
      {"integrable.ch_magri", 1e-8},
      {"estimate_constants.spreads_non_increasing", 0.0},
      {"magri.max_discrepancy", 1e-8},
  };
  return t;
}

inline std::set<std::string> known_tolerance_names() {
  std::set<std::string> out;
  for (const auto& [k, v] : default_thresholds()) out.insert(k);
  return out;
}

namespace detail {

inline double thr(const std::string& suite, const std::string& name) {
  const auto it = default_thresholds().find(suite + "." + name);
  if (it == default_thresholds().end()) {
    throw std::logic_error("no default threshold for " + suite + "." + name);
  }
  return it->second;
}

inline double rel_max(const LoopSample& a, const LoopSample& ref) {
  return max_abs_difference(a, ref) / std::max(max_abs(ref), 1e-300);
}

inline double l2_of(const LoopSample& u) { return std::sqrt(duality_pair(u, u)); }

/// Real trigonometric polynomial with closed-form derivatives; used as the
/// oracle for spectral derivatives in the integrable suite.
struct TrigPoly {
  double a0 = 0.0;
  std::vector<double> a;  // cos kt, k = 1..K
  std::vector<double> b;  // sin kt

  [[nodiscard]] double eval(double t, int order = 0) const {
    double v = order == 0 ? a0 : 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double k = static_cast<double>(i + 1);
      double c = std::cos(k * t);
      double s = std::sin(k * t);
      // d/dt (c, s) = k (-s, c)
      for (int r = 0; r < order; ++r) {
        const double nc = -k * s;
        const double ns = k * c;
        c = nc;
        s = ns;
      }
      v += a[i] * c + b[i] * s;
    }
    return v;
  }

  static TrigPoly random(std::mt19937_64& rng, int modes, double amplitude) {
    std::normal_distribution<double> normal(0.0, 1.0);
    TrigPoly p;
    p.a0 = amplitude * normal(rng);
    for (int k = 1; k <= modes; ++k) {
      p.a.push_back(amplitude * normal(rng) / (k * k));
      p.b.push_back(amplitude * normal(rng) / (k * k));
    }
    return p;
  }
};

inline LoopSample sample_trig(const Grid& g, const std::vector<TrigPoly>& comps, int order = 0) {
  return LoopSample::from_function(g, comps.size(), [&](double t, std::span<double> o) {
    for (std::size_t c = 0; c < comps.size(); ++c) o[c] = comps[c].eval(t, order);
  });
}

inline std::vector<LoopSample> equivalence_family(const Grid& g) {
  std::vector<LoopSample> v;
  v.push_back(LoopSample::from_scalar(g, [](double t) { return std::cos(t); }));
  v.push_back(LoopSample::from_scalar(g, [](double t) { return std::sin(2 * t); }));
  v.push_back(LoopSample::from_scalar(g, [](double t) { return std::cos(3 * t); }));
  v.push_back(LoopSample::from_scalar(g, [](double t) { return std::cos(t) + 0.5 * std::sin(2 * t); }));
  v.push_back(LoopSample::from_scalar(
      g, [](double t) { return std::sin(t) - 0.3 * std::cos(3 * t) + 0.2 * std::sin(2 * t); }));
  return v;
}

inline LoopSample unit_circle(const Grid& g) {
  return LoopSample::from_function(g, 2, [](double t, std::span<double> o) {
    o[0] = std::cos(t);
    o[1] = std::sin(t);
  });
}

inline Functional square_of(std::size_t m, std::size_t c, const std::string& name) {
  return Functional::from_density(
      name, m, [c](std::span<const double> x) { return x[c] * x[c]; },
      [c, m](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < m; ++i) g[i] = i == c ? 2.0 * x[c] : 0.0;
      },
      [c, m](std::span<const double>, std::span<double> h) {
        for (std::size_t i = 0; i < m * m; ++i) h[i] = i == c * m + c ? 2.0 : 0.0;
      });
}

inline Functional linear_of(std::size_t m, std::size_t c, const std::string& name) {
  return Functional::from_density(
      name, m, [c](std::span<const double> x) { return x[c]; },
      [c, m](std::span<const double>, std::span<double> g) {
        for (std::size_t i = 0; i < m; ++i) g[i] = i == c ? 1.0 : 0.0;
      },
      [m](std::span<const double>, std::span<double> h) {
        for (std::size_t i = 0; i < m * m; ++i) h[i] = 0.0;
      });
}

/// J(x) = (1 + 0.5 sin x_1) J_can, Lipschitz with constant 0.5.
inline TwoFormField lipschitz_field() {
  LipschitzMap b{[](std::span<const double> x, std::span<double> out) {
                   const double f = 1.0 + 0.5 * std::sin(x[0]);
                   out[0] = 0.0;
                   out[1] = -f;
                   out[2] = f;
                   out[3] = 0.0;
                 },
                 2, 4, 0.5 * std::sqrt(2.0), 1.5 * std::sqrt(2.0)};
  return TwoFormField::variable(2, b);
}

/// m x 1 tail coefficient A(x) = (cos x_1, sin x_2).
inline LipschitzMap tail_coefficient() {
  return {[](std::span<const double> x, std::span<double> out) {
            out[0] = std::cos(x[0]);
            out[1] = std::sin(x[1]);
          },
          2, 2, 1.0, std::sqrt(2.0)};
}

inline SystemDescriptor dn_system(LipschitzMap g, LipschitzMap b) {
  SystemParams p;
  p.dn_metric = std::move(g);
  p.dn_christoffel = std::move(b);
  return make_system(SystemName::dubrovin_novikov, Grid(16), p, 2);
}

inline SystemDescriptor dn_flat() {
  return dn_system(LipschitzMap::constant(2, {2.0, 0.5, 0.5, 1.0}),
                   LipschitzMap::constant(2, std::vector<double>(8, 0.0)));
}

/// g = diag(1, 1 + x_1^2), b^{11}_0-type coefficient x_1 at index (1*2+1)*2+0.
/// The pair violates the flatness conditions, so Jacobi fails.
inline SystemDescriptor dn_nonflat() {
  LipschitzMap g{[](std::span<const double> x, std::span<double> out) {
                   out[0] = 1.0;
                   out[1] = 0.0;
                   out[2] = 0.0;
                   out[3] = 1.0 + x[0] * x[0];
                 },
                 2, 4, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  LipschitzMap b{[](std::span<const double> x, std::span<double> out) {
                   for (std::size_t i = 0; i < 8; ++i) out[i] = 0.0;
                   out[(1 * 2 + 1) * 2 + 0] = x[0];
                 },
                 2, 8, 1.0, std::numeric_limits<double>::infinity()};
  return dn_system(g, b);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline VerificationReport suite_multipliers(const RunConfig& cfg) {
  const std::string S = "multipliers";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  // Band-limited data: the identities are exact on every mode, and k^2
  // amplification of rounding stays below the threshold for |k| <= 16.
  std::mt19937_64 rng(cfg.seed);
  const LoopSample u = random_smooth_loop(g, 1, rng, 16, true);
  const LoopSample v = random_smooth_loop(g, 1, rng, 16, true);
  LoopSample u0 = u;
  for (double& x : u0.data()) x -= mean(u)[0];

  rep.add("dft_roundtrip", detail::rel_max(idft(dft(u)), u), t("dft_roundtrip"), Comparison::le);
  {
    const SpectralLoop sl = dft(u);
    double spec = std::norm(sl.coeff(0, 0)) + std::norm(sl.coeff(0, g.nyquist()));
    for (int k = 1; k < g.nyquist(); ++k) spec += 2.0 * std::norm(sl.coeff(0, k));
    const double phys = duality_pair(u, u) / two_pi;
    rep.add("parseval", std::abs(spec - phys) / phys, t("parseval"), Comparison::le);
  }
  const LoopSample du = derivative(u);
  const LoopSample habs = hilbert(frac_laplacian(u, 1.0));
  rep.add("dt_equals_hilbert_absD", detail::rel_max(habs, du), t("dt_equals_hilbert_absD"),
          Comparison::le, Role::criterion, "symbol of H|D| is -ik under H = -i sgn(k)");
  rep.diagnostic("dt_equals_minus_hilbert_absD", detail::rel_max(-1.0 * habs, du),
                 t("dt_equals_minus_hilbert_absD"), Comparison::le);
  rep.add("hilbert_squared", detail::rel_max(hilbert(hilbert(u)), -1.0 * u0), t("hilbert_squared"),
          Comparison::le);
  rep.add("dt_inv_dt", detail::rel_max(derivative(inv_dt(u)), u0), t("dt_inv_dt"), Comparison::le);
  // Composed on the spectrum: applying 1 - d^2 on the grid would amplify the
  // rounding noise of every mode by up to (N/2)^2.
  rep.add("helmholtz_inv_helmholtz",
          detail::rel_max(idft(apply_multiplier(apply_multiplier(dft(u), symbols::inv_helmholtz()),
                                                symbols::helmholtz())),
                          u),
          t("helmholtz_inv_helmholtz"), Comparison::le);
  rep.add("hilbert_skew",
          std::abs(duality_pair(hilbert(u), v) + duality_pair(u, hilbert(v))) /
              (detail::l2_of(u) * detail::l2_of(v)),
          t("hilbert_skew"), Comparison::le);
  rep.add("absD_composition",
          detail::rel_max(frac_laplacian(frac_laplacian(u, 0.3), 0.7), frac_laplacian(u, 1.0)),
          t("absD_composition"), Comparison::le);
  rep.add("bessel_inverse", detail::rel_max(bessel(bessel(u, cfg.s), -cfg.s), u), t("bessel_inverse"),
          Comparison::le);
  {
    const LoopSample s3 = LoopSample::from_scalar(g, [](double x) { return std::sin(3 * x); });
    const LoopSample c3 = LoopSample::from_scalar(g, [](double x) { return 3 * std::cos(3 * x); });
    rep.add("derivative_of_sine", detail::rel_max(derivative(s3), c3), t("derivative_of_sine"),
            Comparison::le);
    const LoopSample c5 = LoopSample::from_scalar(g, [](double x) { return std::cos(5 * x); });
    const LoopSample s5 = LoopSample::from_scalar(g, [](double x) { return std::sin(5 * x); });
    rep.add("hilbert_of_cosine", detail::rel_max(hilbert(c5), s5), t("hilbert_of_cosine"),
            Comparison::le);
  }
  rep.add("zero_mode_annihilated",
          std::abs(apply_multiplier(dft(u), symbols::frac_laplacian(cfg.s)).coeff(0, 0)),
          t("zero_mode_annihilated"), Comparison::le);
  rep.add_timing("runtime", rep.elapsed_s(), t("runtime"));
  rep.finish();
  return rep;
}

inline VerificationReport suite_norms(const RunConfig& cfg) {
  const std::string S = "norms";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const std::size_t nfine = cfg.grid_size;
  const std::size_t ncoarse = cfg.grid_size / 2;
  nlohmann::json table = nlohmann::json::array();
  for (double s : {0.5, 0.25}) {
    const SobolevParams sp(s, 2.0);
    const auto coarse = estimate_equivalence_constant(detail::equivalence_family(Grid(ncoarse)), sp);
    const auto fine = estimate_equivalence_constant(detail::equivalence_family(Grid(nfine)), sp);
    const std::string tag = s == 0.5 ? "s0.5" : "s0.25";
    rep.add("spread_" + tag, fine.spread, t("spread_" + tag), Comparison::lt);
    rep.add("spread_decrease_" + tag, fine.spread - coarse.spread, t("spread_decrease_" + tag),
            Comparison::lt, Role::criterion, "spread(N) - spread(N/2)");
    for (const auto* r : {&coarse, &fine}) {
      table.push_back({{"s", s}, {"p", 2.0}, {"N", r->grid_sizes.front()}, {"constant", r->estimated_constant},
                       {"spread", r->spread}, {"ratios", r->per_sample_ratios}});
    }
    if (s == 0.5) {
      rep.add("constant_estimate_change",
              std::abs(fine.estimated_constant - coarse.estimated_constant) / fine.estimated_constant,
              t("constant_estimate_change"), Comparison::lt);
    }
  }
  rep.extra()["equivalence"] = table;

  const Grid g(nfine);
  const SobolevParams sp(cfg.s, cfg.p);
  const LoopSample u = sample_loop(1.0, 1, cfg.seed, g);
  {
    const auto r = estimate_equivalence_constant(
        std::vector<LoopSample>{detail::equivalence_family(g)[0], detail::equivalence_family(g)[1],
                                detail::equivalence_family(g)[2]},
        SobolevParams(0.5, 2.0));
    const auto r2 = estimate_equivalence_constant(
        std::vector<LoopSample>{2.0 * detail::equivalence_family(g)[0], 2.0 * detail::equivalence_family(g)[1],
                                2.0 * detail::equivalence_family(g)[2]},
        SobolevParams(0.5, 2.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < r.per_sample_ratios.size(); ++i) {
      worst = std::max(worst, std::abs(r.per_sample_ratios[i] - r2.per_sample_ratios[i]));
    }
    rep.add("scaling_invariance", worst, t("scaling_invariance"), Comparison::le, Role::criterion,
            "ratio of u and 2u");
  }
  {
    const std::vector<double> c{1.7};
    rep.add("gagliardo_constant", gagliardo_seminorm(LoopSample::constant(g, c), sp),
            t("gagliardo_constant"), Comparison::le);
    LoopSample shifted = u;
    for (double& x : shifted.data()) x += 3.25;
    rep.add("gagliardo_shift_invariance",
            std::abs(gagliardo_seminorm(shifted, sp) - gagliardo_seminorm(u, sp)) /
                gagliardo_seminorm(u, sp),
            t("gagliardo_shift_invariance"), Comparison::le);
  }
  rep.add("bessel_inverse", detail::rel_max(bessel(bessel(u, -cfg.s), cfg.s), u), t("bessel_inverse"),
          Comparison::le);
  {
    std::size_t violations = 0;
    std::mt19937_64 rng(cfg.seed);
    for (double s : {0.25, 0.5}) {
      for (double p : {1.5, 2.0, 3.0}) {
        const SobolevParams q(s, p);
        for (int i = 0; i < 20; ++i) {
          const LoopSample a = random_smooth_loop(g, 1, rng, 8, true);
          const LoopSample b = random_smooth_loop(g, 1, rng, 8, true);
          const double lhs = std::abs(duality_pair(a, b));
          const double rhs = spectral_norm(a, s, p, NormKind::bessel_Hsp) *
                             spectral_norm(b, -s, q.p_conj(), NormKind::bessel_Hsp);
          if (lhs > rhs * (1.0 + 1e-12)) ++violations;
        }
      }
    }
    rep.add("duality_holder_violations", static_cast<double>(violations), t("duality_holder_violations"),
            Comparison::le, Role::criterion, "|<a,b>| <= |a|_{H^{s,p}} |b|_{H^{-s,p'}}");
  }
  rep.add("sample_determinism",
          max_abs_difference(sample_loop(0.75, 2, cfg.seed, g), sample_loop(0.75, 2, cfg.seed, g)),
          t("sample_determinism"), Comparison::le);
  {
    std::mt19937_64 rng(cfg.seed + 7);
    std::vector<LoopSample> fam;
    for (int i = 0; i < 5; ++i) fam.push_back(random_smooth_loop(g, 1, rng, 3));
    const auto r = estimate_equivalence_constant(fam, SobolevParams(0.5, 2.0));
    rep.diagnostic("spread_random_s0.5", r.spread, t("spread_random_s0.5"), Comparison::lt,
                   "five random 3-mode loops");
    const auto band = estimate_equivalence_constant(detail::equivalence_family(g), sp);
    rep.diagnostic("band_width_cfg", band.spread, t("band_width_cfg"), Comparison::ge,
                   band.is_band ? "equivalence band at configured (s,p)" : "configured (s,p) has p = 2");
    rep.extra()["configured_band"] = {{"s", cfg.s}, {"p", cfg.p}, {"is_band", band.is_band},
                                      {"min_ratio", band.min_ratio}, {"max_ratio", band.max_ratio},
                                      {"rhs", band.rhs_kind}};
  }
  {
    // sigma = 0.3: the H^{1/2} sum grows with N, sigma = 2 keeps it bounded.
    std::vector<double> sums;
    for (std::size_t n : {128u, 256u, 512u}) {
      sums.push_back(sobloop::detail::homogeneous_sum(dft(sample_loop(0.3, 1, cfg.seed, Grid(n))), 0.5));
    }
    rep.diagnostic("rough_sample_growth", sums[2] / sums[0], t("rough_sample_growth"), Comparison::gt,
                   "H^{1/2} sum at N=512 over N=128 for sigma = 0.3");
  }
  rep.add_timing("runtime", rep.elapsed_s(), t("runtime"));
  rep.finish();
  return rep;
}

inline VerificationReport suite_theta(const RunConfig& cfg) {
  const std::string S = "theta";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  const TwoFormField J = TwoFormField::canonical();
  const SobolevParams half(0.5, 2.0);
  std::mt19937_64 rng(cfg.seed);

  {
    std::vector<double> ratios;
    std::vector<double> hratios;
    std::vector<double> hratios_coarse;
    const Grid coarse(cfg.grid_size / 2);
    for (int i = 0; i < 5; ++i) {
      const SpectralLoop sg = dft(random_smooth_loop(g, 2, rng, 4, true));
      const SpectralLoop sh = dft(random_smooth_loop(g, 2, rng, 4, true));
      const LoopSample gam = idft(sg);
      const LoopSample h = idft(sh);
      const ThetaEvaluation ev = evaluate_theta(gam, h, J, half);
      ratios.push_back(ev.kernel_over_duality);
      hratios.push_back(theta_kernel(gam, hilbert(h), J, half) / ev.duality_value);
      // Same trigonometric polynomials on the half grid.
      SpectralLoop cg(coarse, 2);
      SpectralLoop ch(coarse, 2);
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t k = 0; k <= 4; ++k) {
          cg.at(c, k) = sg.at(c, k);
          ch.at(c, k) = sh.at(c, k);
        }
      }
      const LoopSample gc = idft(cg);
      const LoopSample hc = idft(ch);
      hratios_coarse.push_back(theta_kernel(gc, hilbert(hc), J, half) / theta_duality(gc, hc, J, half));
    }
    double mult_err = 0.0;
    double mult_minus_err = 0.0;
    for (int i = 0; i < 50; ++i) {
      const LoopSample gam = random_smooth_loop(g, 2, rng, 6, true);
      const LoopSample h = random_smooth_loop(g, 2, rng, 6, true);
      const double d = theta_duality(gam, h, J, half);
      const double mv = theta_multiplier(gam, h, J, half);
      const double scale = std::max(std::abs(d), 1.0);
      mult_err = std::max(mult_err, std::abs(mv - d) / scale);
      mult_minus_err = std::max(mult_minus_err, std::abs(mv + d) / scale);
    }
    auto deviation = [](const std::vector<double>& r) {
      double m = 0.0;
      for (double x : r) m += x;
      m /= static_cast<double>(r.size());
      double worst = 0.0;
      for (double x : r) worst = std::max(worst, std::abs(x - m) / std::abs(m));
      return worst;
    };
    rep.add("kernel_duality_ratio", deviation(ratios), t("kernel_duality_ratio"), Comparison::le,
            Role::criterion, "max |r_i - mean| / |mean| over 5 pairs");
    rep.diagnostic("kernel_hilbert_ratio_convergence", deviation(hratios) / deviation(hratios_coarse),
                   t("kernel_hilbert_ratio_convergence"), Comparison::lt,
                   "spread of theta_kernel(gamma, H h) / theta_duality(gamma, h) at N over N/2");
    rep.extra()["kernel_hilbert_spread"] = {{"N", deviation(hratios)}, {"N/2", deviation(hratios_coarse)}};
    rep.add("multiplier_equals_duality", mult_err, t("multiplier_equals_duality"), Comparison::le,
            Role::criterion, "50 random smooth pairs, c = 1");
    rep.diagnostic("multiplier_equals_minus_duality", mult_minus_err,
                   t("multiplier_equals_minus_duality"), Comparison::le);
    rep.extra()["kernel_over_duality"] = ratios;
    rep.extra()["kernel_hilbert_over_duality"] = hratios;
  }
  {
    std::size_t violations = 0;
    double worst = 0.0;
    const TwoFormField B = detail::lipschitz_field();
    for (double s : {0.25, 0.5}) {
      for (double p : {1.5, 2.0, 3.0}) {
        const SobolevParams sp(s, p);
        for (int i = 0; i < 100; ++i) {
          const LoopSample gam = sample_loop(1.0, 2, cfg.seed * 1000003ULL + 2 * i, g);
          const LoopSample h = sample_loop(1.0, 2, cfg.seed * 1000003ULL + 2 * i + 1, g);
          const TwoFormField& form = i % 2 == 0 ? J : B;
          const double lhs = std::abs(theta_kernel(gam, h, form, sp));
          const double bound = theta_kernel_holder_bound(gam, h, form, sp);
          worst = std::max(worst, lhs / bound);
          if (lhs > bound * (1.0 + 1e-12)) ++violations;
        }
      }
    }
    rep.add("holder_violations", static_cast<double>(violations), t("holder_violations"), Comparison::le,
            Role::criterion, "600 pairs, constant and Lipschitz fields");
    rep.extra()["holder_max_ratio"] = worst;
  }
  {
    const LoopSample c = detail::unit_circle(g);
    rep.add("unit_circle", std::abs(theta_duality(c, c, J, half) + two_pi), t("unit_circle"),
            Comparison::le, Role::criterion, "Theta(circle)[circle] = -2 pi");
    const std::vector<double> k{0.4, -1.1};
    rep.add("constant_h", std::abs(theta_duality(c, LoopSample::constant(g, k), J, half)), t("constant_h"),
            Comparison::le);
  }
  {
    const LoopSample a = random_smooth_loop(g, 2, rng, 5, true);
    const LoopSample b = random_smooth_loop(g, 2, rng, 5, true);
    const LoopSample c = random_smooth_loop(g, 2, rng, 5, true);
    const double kab = theta_kernel(a, b, J, half);
    const double scale = std::abs(kab) + 1.0;
    rep.add("kernel_self", std::abs(theta_kernel(a, a, J, half)) / scale, t("kernel_self"), Comparison::le);
    rep.add("kernel_antisymmetry", std::abs(kab + theta_kernel(b, a, J, half)) / scale,
            t("kernel_antisymmetry"), Comparison::le);
    const double lin = theta_kernel(a, 2.0 * b + (-3.0) * c, J, half) -
                       (2.0 * kab - 3.0 * theta_kernel(a, c, J, half));
    rep.add("bilinearity", std::abs(lin) / scale, t("bilinearity"), Comparison::le);
    const LipschitzMap cst = LipschitzMap::constant(2, J.j0());
    const TwoFormField V = TwoFormField::variable(2, cst);
    const double d = std::max(std::abs(theta_kernel(a, b, V, half) - kab),
                              std::abs(theta_duality(a, b, V, half) - theta_duality(a, b, J, half)));
    rep.add("variable_field_reduces", d, t("variable_field_reduces"), Comparison::le);
  }
  rep.finish();
  return rep;
}

inline VerificationReport suite_presymplectic(const RunConfig& cfg) {
  const std::string S = "presymplectic";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  std::mt19937_64 rng(cfg.seed);
  double skew = 0.0;
  double one = 0.0;
  for (int i = 0; i < 20; ++i) {
    const LoopSample h = sample_loop(1.5, 2, cfg.seed + 2 * i, g);
    const LoopSample k = random_smooth_loop(g, 2, rng, 6, true);
    const double hk = presymplectic(h, k);
    const double kh = presymplectic(k, h);
    const double scale = std::max(1.0, std::abs(hk));
    skew = std::max(skew, std::abs(hk + kh) / scale);
    one = std::max(one, std::abs(hk - presymplectic_one_term(h, k)) / scale);
  }
  rep.add("skewness", skew, t("skewness"), Comparison::le);
  for (std::size_t m : {1u, 2u, 5u}) {
    const double dim = static_cast<double>(presymplectic_kernel_dimension(g, m));
    rep.add("kernel_dimension_m" + std::to_string(m), std::abs(dim - static_cast<double>(m)),
            t("kernel_dimension_m" + std::to_string(m)), Comparison::le, Role::criterion,
            "|dim ker - m|");
  }
  rep.add("one_term", one, t("one_term"), Comparison::le);
  {
    const LoopSample c = detail::unit_circle(g);
    const LoopSample ct = derivative(c);
    // <c'', c> - <c', c'> = -2 pi - 2 pi
    rep.add("unit_circle", std::abs(presymplectic(ct, c) + 2.0 * two_pi) / two_pi, t("unit_circle"),
            Comparison::le, Role::criterion, "omega(circle', circle) = -4 pi");
    const std::vector<double> k{1.0, -2.0};
    rep.add("constant_direction", std::abs(presymplectic(LoopSample::constant(g, k), c)),
            t("constant_direction"), Comparison::le);
  }
  {
    const TwoFormField J = TwoFormField::canonical();
    const LoopSample gam = random_smooth_loop(g, 2, rng, 4, true);
    const LoopSample h = random_smooth_loop(g, 2, rng, 4, true);
    const LoopSample k = random_smooth_loop(g, 2, rng, 4, true);
    auto alpha = [&J](const LoopSample& x, const LoopSample& v) { return theta_lambda(x, v, J); };
    const double d = exterior_derivative_fd(alpha, gam, h, k, 1e-3);
    const double w = transgressed_two_form(h, k, J);
    rep.add("lambda_exterior_derivative", std::abs(d - w) / std::max(1.0, std::abs(w)),
            t("lambda_exterior_derivative"), Comparison::le, Role::criterion,
            "d Theta_lambda(h,k) = int omega(h,k)");
  }
  rep.finish();
  return rep;
}

inline VerificationReport suite_brackets(const RunConfig& cfg) {
  const std::string S = "brackets";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  std::mt19937_64 rng(cfg.seed);
  auto skew_battery = [&](const PoissonOperator& P, std::size_t m, int count) {
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
      const Functional F = random_density_functional(m, rng, 3, "F");
      const Functional G = random_density_functional(m, rng, 3, "G");
      const LoopSample gam = random_smooth_loop(g, m, rng, 5, true);
      worst = std::max(worst, std::abs(bracket(F, G, P, gam) + bracket(G, F, P, gam)));
    }
    return worst;
  };
  const PoissonOperator Pc = PoissonOperator::local(TwoFormField::canonical(), "J0 d");
  const PoissonOperator Pl = PoissonOperator::local(detail::lipschitz_field(), "J(gamma) d");
  const PoissonOperator Pw = PoissonOperator::weakly_nonlocal(
      TwoFormField::canonical(), {NonlocalTerm::paired_term(detail::tail_coefficient(), 1)},
      "J0 d + A d^-1 A^T");
  const PoissonOperator Pt = PoissonOperator::weakly_nonlocal(
      TwoFormField::constant(2, {0.0, 0.0, 0.0, 0.0}),
      {NonlocalTerm::paired_term(detail::tail_coefficient(), 1)}, "A d^-1 A^T");
  const SystemDescriptor flat = detail::dn_flat();
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);

  rep.add("skew_constant_J", skew_battery(Pc, 2, 100), t("skew_constant_J"), Comparison::le,
          Role::criterion, "(J0 d)^* = d J0 for skew J0");
  rep.add("skew_lipschitz_J", skew_battery(Pl, 2, 100), t("skew_lipschitz_J"), Comparison::le);
  rep.add("skew_weakly_nonlocal", skew_battery(Pw, 2, 100), t("skew_weakly_nonlocal"), Comparison::le);
  rep.diagnostic("skew_tail_only", skew_battery(Pt, 2, 100), t("skew_tail_only"), Comparison::le);
  rep.diagnostic("skew_symmetric_metric", skew_battery(flat.operators[0], 2, 100),
                 t("skew_symmetric_metric"), Comparison::le, "g d/dt with constant symmetric g");
  rep.diagnostic("skew_scalar_derivative", skew_battery(kdv.operators[0], 1, 100),
                 t("skew_scalar_derivative"), Comparison::le, "scalar d/dt");
  {
    const LoopSample c = detail::unit_circle(g);
    const double v = bracket(detail::square_of(2, 0, "x1^2"), detail::square_of(2, 1, "x2^2"), Pc, c);
    rep.add("unit_circle", std::abs(v + 2.0 * two_pi), t("unit_circle"), Comparison::le, Role::criterion,
            "{int x1^2, int x2^2} = -4 pi on the circle");
    const LoopSample gam = random_smooth_loop(g, 2, rng, 5, true);
    const double lin = std::max(
        std::abs(bracket(detail::linear_of(2, 0, "x1"), detail::linear_of(2, 1, "x2"), Pc, gam)),
        std::abs(bracket(detail::linear_of(2, 0, "x1"), detail::linear_of(2, 1, "x2"), Pl, gam)));
    rep.add("linear_functionals", lin, t("linear_functionals"), Comparison::le, Role::criterion,
            "constant gradients give zero");
  }
  rep.finish();
  return rep;
}

inline VerificationReport suite_jacobi(const RunConfig& cfg) {
  const std::string S = "jacobi";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  std::mt19937_64 rng(cfg.seed);
  struct Triple {
    Functional F, G, H;
    LoopSample gamma;
  };
  std::vector<Triple> triples;
  for (int i = 0; i < 10; ++i) {
    triples.push_back({random_density_functional(2, rng, 3, "F" + std::to_string(i)),
                       random_density_functional(2, rng, 3, "G" + std::to_string(i)),
                       random_density_functional(2, rng, 3, "H" + std::to_string(i)),
                       random_smooth_loop(g, 2, rng, 4, true)});
  }
  auto worst = [&](const PoissonOperator& P, JacobiMethod method, bool use_min = false) {
    double w = use_min ? std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& tr : triples) {
      const double r = jacobi_residual(tr.F, tr.G, tr.H, P, tr.gamma, 1e-5, method).relative_residual;
      w = use_min ? std::min(w, r) : std::max(w, r);
    }
    return w;
  };
  const PoissonOperator Pc = PoissonOperator::local(TwoFormField::canonical(), "J0 d");
  LipschitzMap adv{[](std::span<const double> x, std::span<double> out) {
                     const double f = 1.0 + x[0];
                     out[0] = 0.0;
                     out[1] = -f;
                     out[2] = f;
                     out[3] = 0.0;
                   },
                   2, 4, std::sqrt(2.0), std::numeric_limits<double>::infinity()};
  const PoissonOperator Pa = PoissonOperator::local(TwoFormField::variable(2, adv), "(1 + x1) J0 d");
  const SystemDescriptor flat = detail::dn_flat();
  const SystemDescriptor nonflat = detail::dn_nonflat();

  const double floor = worst(flat.operators[0], JacobiMethod::analytic);
  rep.add("calibration_floor", floor, t("calibration_floor"), Comparison::le, Role::criterion,
          "constant symmetric metric g d/dt, analytic chaining");
  rep.add("constant_J_analytic", worst(Pc, JacobiMethod::analytic), t("constant_J_analytic"),
          Comparison::le, Role::criterion, "J0 d with skew J0 is not skew-adjoint");
  rep.add("constant_J_fd", worst(Pc, JacobiMethod::finite_difference), t("constant_J_fd"),
          Comparison::le);
  const double adv_min = worst(Pa, JacobiMethod::analytic, true);
  rep.add("adversarial_over_floor", adv_min / std::max(floor, 1e-300), t("adversarial_over_floor"),
          Comparison::gt, Role::criterion, "smallest adversarial residual / floor");
  rep.diagnostic("flat_metric_fd", worst(flat.operators[0], JacobiMethod::finite_difference),
                 t("flat_metric_fd"), Comparison::le);
  rep.diagnostic("nonflat_metric_over_floor",
                 worst(nonflat.operators[0], JacobiMethod::analytic, true) / std::max(floor, 1e-300),
                 t("nonflat_metric_over_floor"), Comparison::gt, "non-flat metric is detected");
  rep.finish();
  return rep;
}

inline VerificationReport suite_bicomplex(const RunConfig& cfg) {
  const std::string S = "bicomplex";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  std::mt19937_64 rng(cfg.seed);
  const LoopSample gam = random_smooth_loop(g, 2, rng, 5, true);
  const Functional quad = Functional::from_density(
      "quadratic", 2, [](std::span<const double> x) { return x[0] * x[0] + 3.0 * x[0] * x[1]; },
      [](std::span<const double> x, std::span<double> o) {
        o[0] = 2.0 * x[0] + 3.0 * x[1];
        o[1] = 3.0 * x[0];
      });
  const Functional trig = Functional::from_density(
      "sin cos", 2, [](std::span<const double> x) { return std::sin(x[0]) * std::cos(x[1]); },
      [](std::span<const double> x, std::span<double> o) {
        o[0] = std::cos(x[0]) * std::cos(x[1]);
        o[1] = -std::sin(x[0]) * std::sin(x[1]);
      });
  const Functional lin = detail::linear_of(2, 1, "x2");
  rep.add("hessian_quadratic", hessian_symmetry(quad, gam).asymmetry, t("hessian_quadratic"),
          Comparison::le);
  rep.add("hessian_trig", hessian_symmetry(trig, gam).asymmetry, t("hessian_trig"), Comparison::le);
  rep.add("hessian_random", hessian_symmetry(random_density_functional(2, rng), gam).asymmetry,
          t("hessian_random"), Comparison::le);
  {
    const LoopSample u = random_smooth_loop(g, 1, rng, 5, true);
    const SystemDescriptor kdv = make_system(SystemName::kdv, g);
    rep.add("hessian_differential", hessian_symmetry(kdv.hamiltonians[1], u).asymmetry,
            t("hessian_differential"), Comparison::le, Role::criterion, "int (u^3 + u_x^2/2)");
  }
  rep.add("hessian_linear", hessian_symmetry(lin, gam).max_entry, t("hessian_linear"), Comparison::le,
          Role::criterion, "largest Hessian entry of a linear functional");
  {
    const LoopSample u = random_smooth_loop(g, 1, rng, 5, true);
    const LoopSample ux = derivative(u);
    double worst = 0.0;
    // densities f(u, u_x): u^2 u_x + sin u, exp(u) u_x^2, u
    LoopSample d1(g, 1), d2(g, 1);
    for (std::size_t j = 0; j < g.size(); ++j) {
      d1(j, 0) = u(j, 0) * u(j, 0) * ux(j, 0) + std::sin(u(j, 0));
      d2(j, 0) = std::exp(u(j, 0)) * ux(j, 0) * ux(j, 0);
    }
    for (const LoopSample* d : std::array<const LoopSample*, 3>{&d1, &d2, &u}) {
      worst = std::max(worst, dh_exactness_check(*d) / std::max(1.0, max_abs(*d)));
    }
    rep.add("dh_exactness", worst, t("dh_exactness"), Comparison::le);
    const std::vector<double> c{2.5};
    rep.add("dh_constant", dh_exactness_check(LoopSample::constant(g, c)), t("dh_constant"),
            Comparison::le);
  }
  {
    // The variational derivative of int d/dt f(gamma) dt vanishes.
    const Functional total = Functional::general("int d/dt sin(x1) x2", 2, [](const LoopSample& x) {
      LoopSample d(x.grid(), 1);
      for (std::size_t j = 0; j < x.size(); ++j) d(j, 0) = std::sin(x(j, 0)) * x(j, 1);
      const LoopSample dd = derivative(d);
      sobloop::detail::CompensatedSum acc;
      for (double v : dd.component(0)) acc += v;
      return x.grid().spacing() * acc.value();
    });
    VariationalOptions opt;
    opt.fd_fallback = true;
    rep.add("total_derivative_gradient", max_abs(variational_derivative(total, gam, opt)),
            t("total_derivative_gradient"), Comparison::le);
  }
  rep.finish();
  return rep;
}

inline VerificationReport suite_nemytskii(const RunConfig& cfg) {
  const std::string S = "nemytskii";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  const LipschitzMap sinmap = LipschitzMap::componentwise(2, [](double x) { return std::sin(x); }, 1.0, 1.0);
  const LipschitzMap vec{[](std::span<const double> x, std::span<double> out) {
                           out[0] = std::sin(x[0] + x[1]);
                         },
                         2, 1, std::sqrt(2.0), 1.0};
  std::size_t vs = 0;
  std::size_t vv = 0;
  double id = 0.0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double sigma = 0.6 + 0.01 * i;
    const LoopSample gam = 3.0 * sample_loop(sigma, 2, cfg.seed * 7919ULL + static_cast<std::uint64_t>(i), g);
    for (const SobolevParams sp : {SobolevParams(0.5, 2.0), SobolevParams(0.25, 3.0)}) {
      const double base = gagliardo_seminorm(gam, sp);
      const double a = gagliardo_seminorm(nemytskii(gam, sinmap), sp);
      const double b = gagliardo_seminorm(nemytskii(gam, vec), sp);
      if (a > sinmap.lip_bound * base * (1.0 + 1e-12)) ++vs;
      if (b > vec.lip_bound * base * (1.0 + 1e-12)) ++vv;
      worst_ratio = std::max({worst_ratio, a / (sinmap.lip_bound * base), b / (vec.lip_bound * base)});
      if (i < 10) {
        id = std::max(id, std::abs(gagliardo_seminorm(nemytskii(gam, LipschitzMap::identity(2)), sp) - base));
      }
    }
  }
  rep.add("violations_sin", static_cast<double>(vs), t("violations_sin"), Comparison::le, Role::criterion,
          "componentwise sin, L = 1");
  rep.add("violations_vector", static_cast<double>(vv), t("violations_vector"), Comparison::le,
          Role::criterion, "sin(x1 + x2), L = sqrt 2");
  rep.add("identity", id, t("identity"), Comparison::le);
  {
    const LoopSample gam = sample_loop(1.0, 2, cfg.seed, g);
    const LipschitzMap c = LipschitzMap::constant(2, {0.5, -1.0});
    rep.add("constant_map", gagliardo_seminorm(nemytskii(gam, c), SobolevParams(0.5, 2.0)),
            t("constant_map"), Comparison::le);
  }
  rep.extra()["max_ratio"] = worst_ratio;
  rep.finish();
  return rep;
}

inline VerificationReport suite_integrable(const RunConfig& cfg) {
  const std::string S = "integrable";
  VerificationReport rep(S, cfg);
  auto t = [&](const std::string& n) { return detail::thr(S, n); };
  const Grid g(cfg.grid_size);
  std::mt19937_64 rng(cfg.seed);
  const SystemDescriptor kdv = make_system(SystemName::kdv, g);
  const SystemDescriptor nls = make_system(SystemName::nls, g);
  const SystemDescriptor ch = make_system(SystemName::camassa_holm, g);
  auto l2rel = [](const LoopSample& a, const LoopSample& ref) {
    return lp_norm(a - ref, 2.0) / std::max(lp_norm(ref, 2.0), 1e-300);
  };
  auto kdv_oracle = [&](const detail::TrigPoly& p) {
    return LoopSample::from_scalar(g, [&p](double x) { return 6.0 * p.eval(x) * p.eval(x, 1) - p.eval(x, 3); });
  };
  auto nls_oracle = [&](const detail::TrigPoly& q, const detail::TrigPoly& r) {
    return LoopSample::from_function(g, 2, [&](double x, std::span<double> o) {
      const double a = q.eval(x);
      const double b = r.eval(x);
      const double n2 = a * a + b * b;
      o[0] = -(r.eval(x, 2) + 2.0 * n2 * b);
      o[1] = q.eval(x, 2) + 2.0 * n2 * a;
    });
  };
  {
    detail::TrigPoly p;
    p.a = {0.0};
    p.b = {1.0};
    rep.add("kdv_rhs_sin", l2rel(rhs(kdv, {0, 1}, detail::sample_trig(g, {p})), kdv_oracle(p)),
            t("kdv_rhs_sin"), Comparison::le, Role::criterion, "u = sin t against 6 u u_x - u_xxx");
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const auto q = detail::TrigPoly::random(rng, 6, 1.0);
      worst = std::max(worst, l2rel(rhs(kdv, {0, 1}, detail::sample_trig(g, {q})), kdv_oracle(q)));
    }
    rep.add("kdv_rhs_random", worst, t("kdv_rhs_random"), Comparison::le);
  }
  {
    detail::TrigPoly q;
    q.a = {0.1};
    q.b = {0.0};
    detail::TrigPoly r;
    r.a = {0.0};
    r.b = {0.1};
    rep.add("nls_rhs_circle", l2rel(rhs(nls, {0, 0}, detail::sample_trig(g, {q, r})), nls_oracle(q, r)),
            t("nls_rhs_circle"), Comparison::le, Role::criterion, "psi = 0.1 e^{it}");
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const auto a = detail::TrigPoly::random(rng, 5, 0.5);
      const auto b = detail::TrigPoly::random(rng, 5, 0.5);
      worst = std::max(worst, l2rel(rhs(nls, {0, 0}, detail::sample_trig(g, {a, b})), nls_oracle(a, b)));
    }
    rep.add("nls_rhs_random", worst, t("nls_rhs_random"), Comparison::le);
  }
  {
    RunConfig fc = cfg;
    fc.grid_size = 128;
    fc.dt = 0.0;
    fc.t_end = -1.0;
    fc.flow_pair_set = false;
    fc.kdv_normalization = "flow_consistent";
    fc.nls_operator = "canonical";
    fc.system = "kdv";
    const FlowRun kr = run_flow(fc);
    auto drift = [](const FlowRun& r, const std::string& q) {
      for (const auto& d : r.summary["drifts"])
        if (d["quantity"] == q) return d["max_drift"].get<double>();
      return std::numeric_limits<double>::quiet_NaN();
    };
    rep.add("kdv_casimir_drift", drift(kr, "C"), t("kdv_casimir_drift"), Comparison::le, Role::criterion,
            "u0 = cos t, N = 128, dt = 1e-4, t = 0.5");
    rep.add("kdv_H0_drift", drift(kr, "H0"), t("kdv_H0_drift"), Comparison::le);
    rep.add("kdv_H1_drift", drift(kr, "H1"), t("kdv_H1_drift"), Comparison::le);
    fc.system = "nls";
    const FlowRun nr = run_flow(fc);
    rep.add("nls_l2_drift", drift(nr, "l2_norm"), t("nls_l2_drift"), Comparison::le, Role::criterion,
            "u0 = 0.1 (cos t, 0), N = 128, dt = 1e-3, t = 1");
    rep.extra()["flows"] = {kr.summary, nr.summary};
    const Grid g128(128);
    const FlowState z = evolve(kdv, {0, 1}, LoopSample(g128, 1), 1e-4, 0.01);
    rep.add("zero_data", max_abs(z.field), t("zero_data"), Comparison::le);
  }
  {
    double worst = 0.0;
    double plus = 0.0;
    double partner = 0.0;
    double chm = 0.0;
    double rec = 0.0;
    SystemParams pp;
    pp.kdv = KdvNormalization::positive_dispersion;
    SystemDescriptor kp = make_system(SystemName::kdv, g, pp);
    SystemDescriptor kp2 = kp;
    kp2.hamiltonians[1] = kdv_positive_dispersion_partner();
    for (int i = 0; i < 10; ++i) {
      const LoopSample u = random_smooth_loop(g, 1, rng, 6, true);
      worst = std::max(worst, magri_check(kdv, 0, u));
      plus = std::max(plus, magri_check(kp, 0, u));
      partner = std::max(partner, magri_check(kp2, 0, u));
      chm = std::max(chm, magri_check(ch, 0, u));
      const LoopSample xi = random_smooth_loop(g, 1, rng, 6, false);
      const LoopSample lhs = recursion_apply(kdv, kdv.operators[0].apply(u, xi), u);
      const LoopSample r1 = dealias(kdv.operators[1].apply(u, xi), kdv.dealias_fraction);
      rec = std::max(rec, l2rel(lhs, r1));
    }
    rep.add("kdv_magri", worst, t("kdv_magri"), Comparison::le, Role::criterion, "n = 0, 10 random smooth u");
    rep.add("recursion_maps_P0_to_P1", rec, t("recursion_maps_P0_to_P1"), Comparison::le, Role::criterion,
            "R P0 xi = P1 xi, mean-zero xi");
    rep.diagnostic("kdv_positive_dispersion_magri", plus, t("kdv_positive_dispersion_magri"), Comparison::le,
                   "P1 = d^3 + 2u d + u_x with H1 = int(u^3 + u_x^2/2)");
    rep.diagnostic("kdv_positive_dispersion_partner_magri", partner, t("kdv_positive_dispersion_partner_magri"), Comparison::le,
                   "P1 = d^3 + 2u d + u_x with int(u^3/2 - u_x^2/2)");
    rep.diagnostic("ch_magri", chm, t("ch_magri"), Comparison::le);
  }
  {
    const LoopSample u = random_smooth_loop(g, 1, rng, 8, true);
    const LoopSample m = u - derivative(u, 2);
    rep.add("ch_roundtrip", detail::rel_max(inv_helmholtz(m), u), t("ch_roundtrip"), Comparison::le);
  }
  {
    double rejected = 0.0;
    try {
      const LoopSample rough = sample_loop(0.5, 1, cfg.seed, g);
      (void)kdv.operators[1].apply(rough, rough);
    } catch (const RegularityError&) {
      rejected = 1.0;
    }
    rep.add("regularity_rejected", rejected, t("regularity_rejected"), Comparison::eq, Role::criterion,
            "KdV P1 on sigma = 0.5 data");
  }
  rep.finish();
  return rep;
}

inline VerificationReport run_suite(const std::string& name, const RunConfig& cfg) {
  if (name == "multipliers") return suite_multipliers(cfg);
  if (name == "norms") return suite_norms(cfg);
  if (name == "theta") return suite_theta(cfg);
  if (name == "presymplectic") return suite_presymplectic(cfg);
  if (name == "brackets") return suite_brackets(cfg);
  if (name == "jacobi") return suite_jacobi(cfg);
  if (name == "bicomplex") return suite_bicomplex(cfg);
  if (name == "nemytskii") return suite_nemytskii(cfg);
  if (name == "integrable") return suite_integrable(cfg);
  throw ConfigError("verify: unknown suite '" + name + "'");
}

// ---------------------------------------------------------------------------

/// Per-N equivalence constants for the fixed trigonometric family and the
/// kernel constant theta_kernel(gamma, H h) / theta_duality(gamma, h) over
/// fixed loop pairs, at the configured (s, p).
inline VerificationReport estimate_constants(const RunConfig& cfg) {
  if (cfg.grids.size() < 2) throw ConfigError("estimate-constants: need at least 2 grid sizes");
  VerificationReport rep("estimate_constants", cfg);
  const SobolevParams sp(cfg.s, cfg.p);
  const TwoFormField J = TwoFormField::canonical();
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> spreads;
  for (std::size_t n : cfg.grids) {
    const Grid g(n);
    const auto er = estimate_equivalence_constant(detail::equivalence_family(g), sp);
    std::vector<double> kr;
    for (int a = 1; a <= 3; ++a) {
      const LoopSample gam = LoopSample::from_function(g, 2, [a](double x, std::span<double> o) {
        o[0] = std::cos(a * x);
        o[1] = std::sin(a * x) + 0.3 * std::cos(2 * x);
      });
      const LoopSample h = LoopSample::from_function(g, 2, [a](double x, std::span<double> o) {
        o[0] = std::sin(a * x) + 0.2;
        o[1] = 0.5 * std::cos(a * x);
      });
      kr.push_back(theta_kernel(gam, hilbert(h), J, sp) / theta_duality(gam, h, J, sp));
    }
    const auto [lo, hi] = std::minmax_element(kr.begin(), kr.end());
    double kmean = 0.0;
    for (double x : kr) kmean += x;
    kmean /= static_cast<double>(kr.size());
    spreads.push_back(er.spread);
    rows.push_back({{"N", n},
                    {"c_or_band", er.is_band ? "band" : "constant"},
                    {"estimated_constant", er.estimated_constant},
                    {"min_ratio", er.min_ratio},
                    {"max_ratio", er.max_ratio},
                    {"spread", er.spread},
                    {"ratios", er.per_sample_ratios},
                    {"rhs", er.rhs_kind},
                    {"C_sp", kmean},
                    {"C_sp_spread", *hi / *lo},
                    {"C_sp_ratios", kr}});
  }
  rep.extra()["table"] = rows;
  double worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < spreads.size(); ++i) {
    worst_increase = std::max(worst_increase, spreads[i] - spreads[i - 1]);
  }
  const bool band = cfg.p != 2.0;
  rep.add("spreads_non_increasing", worst_increase,
          detail::thr("estimate_constants", "spreads_non_increasing"), Comparison::le,
          band ? Role::diagnostic : Role::criterion,
          band ? "p != 2: ratios form an equivalence band" : "largest spread(N_i) - spread(N_{i-1})");
  rep.finish();
  return rep;
}

/// magri_check for n = 0 on 10 random smooth u; H1 is multiplied by
/// cfg.magri_h1_scale (any value other than 1 is a negative control).
inline VerificationReport magri_report(const RunConfig& cfg) {
  VerificationReport rep("magri", cfg);
  const Grid g(cfg.grid_size);
  SystemDescriptor kdv = make_system(SystemName::kdv, g, system_params(cfg));
  if (cfg.magri_h1_scale != 1.0) kdv.hamiltonians[1] = kdv.hamiltonians[1].scaled(cfg.magri_h1_scale);
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> d;
  for (int i = 0; i < 10; ++i) d.push_back(magri_check(kdv, 0, random_smooth_loop(g, 1, rng, 6, true)));
  rep.extra()["discrepancies"] = d;
  rep.extra()["h1_scale"] = cfg.magri_h1_scale;
  rep.extra()["normalization"] = cfg.kdv_normalization;
  rep.add("max_discrepancy", *std::max_element(d.begin(), d.end()),
          detail::thr("magri", "max_discrepancy"), Comparison::lt);
  rep.finish();
  return rep;
}

}  // namespace sobloop::harness
