#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sobloop/detail/summation.hpp"
#include "sobloop/fourier.hpp"
#include "sobloop/grid.hpp"

namespace sobloop {

/// Fractional order s in (0, 1/2] and integrability p in (1, inf).
class SobolevParams {
 public:
  SobolevParams(double s, double p) : s_(s), p_(p) {
    if (!(s > 0.0 && s <= 0.5)) {
      std::ostringstream msg;
      msg << "SobolevParams: s must lie in (0, 1/2] (got " << s << ")";
      throw std::invalid_argument(msg.str());
    }
    if (!(p > 1.0 && std::isfinite(p))) {
      std::ostringstream msg;
      msg << "SobolevParams: p must lie in (1, inf) (got " << p << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  [[nodiscard]] double s() const noexcept { return s_; }
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] double p_conj() const noexcept { return p_ / (p_ - 1.0); }
  /// Same s with the conjugate exponent.
  [[nodiscard]] SobolevParams conjugate() const { return {s_, p_conj()}; }

 private:
  double s_;
  double p_;
};

/// Grid L^p norm ((2 pi/N) sum_j |v_j|^p)^{1/p}, |.| Euclidean across components.
inline double lp_norm(const LoopSample& v, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  detail::CompensatedSum acc;
  for (std::size_t j = 0; j < v.size(); ++j) {
    double sq = 0.0;
    for (std::size_t c = 0; c < v.components(); ++c) sq += v(j, c) * v(j, c);
    acc += std::pow(sq, 0.5 * p);
  }
  return std::pow(v.grid().spacing() * acc.value(), 1.0 / p);
}

namespace detail {

// Off-diagonal trapezoid sum h^2 sum_{j != l} |u_j - u_l|^p / (2|sin((t_j - t_l)/2)|)^expo.
// The kernel depends only on the offset d, and offsets d and N-d give the
// same row sum, so half the offsets suffice.
inline double gagliardo_sum(const LoopSample& ls, double p, double expo) {
  const std::size_t n = ls.size();
  if (n < 16) throw std::invalid_argument("gagliardo_seminorm: requires N >= 16");
  const double h = ls.grid().spacing();
  const std::size_t m = ls.components();
  CompensatedSum total;
  for (std::size_t d = 1; d <= n / 2; ++d) {
    const double chord =
        2.0 * std::sin(std::numbers::pi * static_cast<double>(d) / static_cast<double>(n));
    const double weight = (d == n / 2 ? 1.0 : 2.0) / std::pow(chord, expo);
    CompensatedSum row;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t l = (j + d) % n;
      double sq = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        const double diff = ls(j, c) - ls(l, c);
        sq += diff * diff;
      }
      row += p == 2.0 ? sq : std::pow(sq, 0.5 * p);
    }
    total += weight * row.value();
  }
  return h * h * total.value();
}

}  // namespace detail

/// p-th power of the Gagliardo seminorm with the chordal kernel
/// (2|sin((t - tau)/2)|)^{-(1 + sp)}.
inline double gagliardo_power(const LoopSample& ls, const SobolevParams& sp) {
  return detail::gagliardo_sum(ls, sp.p(), 1.0 + sp.s() * sp.p());
}

/// Same sum with an explicit exponent p and kernel exponent, for Hoelder
/// bounds where the integrand exponent and the measure are decoupled.
inline double gagliardo_power(const LoopSample& ls, double p, double kernel_exponent) {
  if (!(p >= 1.0)) throw std::invalid_argument("gagliardo_power: p must be >= 1");
  return detail::gagliardo_sum(ls, p, kernel_exponent);
}

inline double gagliardo_seminorm(const LoopSample& ls, const SobolevParams& sp) {
  return std::pow(gagliardo_power(ls, sp), 1.0 / sp.p());
}

enum class NormKind { homogeneous_Hs2, bessel_Hsp, sobolev_Wsp_dual, littlewood_paley };

inline const char* to_string(NormKind kind) noexcept {
  switch (kind) {
    case NormKind::homogeneous_Hs2: return "homogeneous_Hs2";
    case NormKind::bessel_Hsp: return "bessel_Hsp";
    case NormKind::sobolev_Wsp_dual: return "sobolev_Wsp_dual";
    case NormKind::littlewood_paley: return "littlewood_paley";
  }
  return "unknown";
}

namespace detail {

inline double homogeneous_sum(const SpectralLoop& sl, double s) {
  CompensatedSum acc;
  const int nyq = sl.nyquist();
  for (std::size_t c = 0; c < sl.components(); ++c) {
    for (int k = 1; k <= nyq; ++k) {
      const double w = (k == nyq ? 1.0 : 2.0) * std::pow(static_cast<double>(k), 2.0 * s);
      acc += w * std::norm(sl.at(c, static_cast<std::size_t>(k)));
    }
  }
  return acc.value();
}

// ||(sum_j |2^{js} Delta_j u|^2)^{1/2}||_{L^p} with sharp dyadic blocks:
// block 0 is |k| <= 1, block j >= 1 is 2^{j-1} < |k| <= 2^j.
inline double littlewood_paley_norm(const LoopSample& ls, double s, double p) {
  const SpectralLoop sl = dft(ls);
  const int nyq = sl.nyquist();
  std::vector<double> square(ls.size(), 0.0);
  int lo = -1;
  for (int j = 0;; ++j) {
    const int hi = j == 0 ? 1 : (1 << j);
    SpectralLoop block(ls.grid(), ls.components());
    for (std::size_t c = 0; c < ls.components(); ++c) {
      for (int k = std::max(lo + 1, 0); k <= std::min(hi, nyq); ++k) {
        block.at(c, static_cast<std::size_t>(k)) = sl.at(c, static_cast<std::size_t>(k));
      }
    }
    const LoopSample piece = idft(block);
    const double weight = std::pow(2.0, 2.0 * s * j);
    for (std::size_t t = 0; t < ls.size(); ++t) {
      for (std::size_t c = 0; c < ls.components(); ++c) square[t] += weight * piece(t, c) * piece(t, c);
    }
    if (hi >= nyq) break;
    lo = hi;
  }
  CompensatedSum acc;
  for (double v : square) acc += std::pow(v, 0.5 * p);
  return std::pow(ls.grid().spacing() * acc.value(), 1.0 / p);
}

}  // namespace detail

/// Spectral Sobolev norms. s may be any real for the Bessel route; the
/// dual kind is the Bessel norm at -s.
inline double spectral_norm(const LoopSample& ls, double s, double p, NormKind kind) {
  switch (kind) {
    case NormKind::homogeneous_Hs2:
      return std::sqrt(detail::homogeneous_sum(dft(ls), s));
    case NormKind::bessel_Hsp:
      return lp_norm(bessel(ls, s), p);
    case NormKind::sobolev_Wsp_dual:
      return lp_norm(bessel(ls, -s), p);
    case NormKind::littlewood_paley:
      return detail::littlewood_paley_norm(ls, s, p);
  }
  throw std::invalid_argument("spectral_norm: unknown norm kind");
}

inline double spectral_norm(const LoopSample& ls, const SobolevParams& sp, NormKind kind) {
  return spectral_norm(ls, sp.s(), sp.p(), kind);
}

/// L^p norm of |D|^s u. Vanishes on constants, so it is the spectral
/// counterpart of the Gagliardo seminorm for p != 2.
inline double riesz_seminorm(const LoopSample& ls, double s, double p) {
  return lp_norm(frac_laplacian(ls, s), p);
}

/// (2 pi/N) sum_j <xi(t_j), h(t_j)>.
inline double duality_pair(const LoopSample& xi, const LoopSample& h) {
  if (!(xi.grid() == h.grid())) throw std::invalid_argument("duality_pair: grid mismatch");
  if (xi.components() != h.components()) {
    throw std::invalid_argument("duality_pair: component count mismatch");
  }
  detail::CompensatedSum acc;
  for (std::size_t c = 0; c < xi.components(); ++c) {
    const auto a = xi.component(c);
    const auto b = h.component(c);
    for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  }
  return xi.grid().spacing() * acc.value();
}

struct EquivalenceReport {
  double estimated_constant = 0.0;
  std::vector<double> per_sample_ratios;
  double spread = 1.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::vector<std::size_t> grid_sizes;
  /// For p != 2 only two-sided bounds exist and the ratios form a band.
  bool is_band = false;
  std::string rhs_kind;
};

/// Ratios [u]^p / ||u||^p of the Gagliardo seminorm to its spectral
/// counterpart: sum |k|^{2s}|u_k|^2 for p = 2, ||  |D|^s u ||_{L^p}^p otherwise.
/// Constant samples are skipped; at least three non-constant ones are needed.
inline EquivalenceReport estimate_equivalence_constant(std::span<const LoopSample> samples,
                                                       const SobolevParams& sp) {
  EquivalenceReport rep;
  rep.is_band = sp.p() != 2.0;
  rep.rhs_kind = rep.is_band ? "riesz_Lp" : "homogeneous_Hs2";
  for (const LoopSample& u : samples) {
    double rhs = 0.0;
    if (rep.is_band) {
      rhs = std::pow(riesz_seminorm(u, sp.s(), sp.p()), sp.p());
    } else {
      rhs = detail::homogeneous_sum(dft(u), sp.s());
    }
    const double scale = max_abs(u);
    if (!(rhs > 1e-24 * std::max(1.0, scale * scale))) continue;
    rep.per_sample_ratios.push_back(gagliardo_power(u, sp) / rhs);
    if (std::find(rep.grid_sizes.begin(), rep.grid_sizes.end(), u.size()) == rep.grid_sizes.end()) {
      rep.grid_sizes.push_back(u.size());
    }
  }
  if (rep.per_sample_ratios.size() < 3) {
    throw std::invalid_argument(
        "estimate_equivalence_constant: need at least 3 non-constant samples");
  }
  const auto [lo, hi] =
      std::minmax_element(rep.per_sample_ratios.begin(), rep.per_sample_ratios.end());
  rep.min_ratio = *lo;
  rep.max_ratio = *hi;
  rep.spread = *hi / *lo;
  detail::CompensatedSum acc;
  for (double r : rep.per_sample_ratios) acc += r;
  rep.estimated_constant = acc.value() / static_cast<double>(rep.per_sample_ratios.size());
  return rep;
}

/// Coefficient map R^in -> R^out with a Lipschitz bound L and a sup bound.
struct LipschitzMap {
  std::function<void(std::span<const double>, std::span<double>)> apply;
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  double lip_bound = 1.0;
  double sup_bound = std::numeric_limits<double>::infinity();

  [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> out(out_dim);
    apply(x, out);
    return out;
  }

  /// Componentwise scalar map a(x)_c = f(x_c).
  static LipschitzMap componentwise(std::size_t dim, std::function<double(double)> f, double lip,
                                    double sup = std::numeric_limits<double>::infinity()) {
    return {[f = std::move(f)](std::span<const double> x, std::span<double> out) {
              for (std::size_t c = 0; c < x.size(); ++c) out[c] = f(x[c]);
            },
            dim, dim, lip, sup};
  }

  static LipschitzMap identity(std::size_t dim) {
    return {[](std::span<const double> x, std::span<double> out) {
              std::copy(x.begin(), x.end(), out.begin());
            },
            dim, dim, 1.0, std::numeric_limits<double>::infinity()};
  }

  static LipschitzMap constant(std::size_t in_dim, std::vector<double> value) {
    const std::size_t out_dim = value.size();
    double sup = 0.0;
    for (double v : value) sup += v * v;
    return {[value = std::move(value)](std::span<const double>, std::span<double> out) {
              std::copy(value.begin(), value.end(), out.begin());
            },
            in_dim, out_dim, 0.0, std::sqrt(sup)};
  }
};

/// Largest sampled ratio |a(x) - a(y)| / (L |x - y|) over the given point
/// pairs; values above 1 + 1e-9 contradict the stated bound.
inline double lipschitz_violation(const LipschitzMap& a, std::span<const std::vector<double>> xs,
                                  std::span<const std::vector<double>> ys) {
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto ax = a(xs[i]);
    const auto ay = a(ys[i]);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t c = 0; c < ax.size(); ++c) num += (ax[c] - ay[c]) * (ax[c] - ay[c]);
    for (std::size_t c = 0; c < xs[i].size(); ++c) den += (xs[i][c] - ys[i][c]) * (xs[i][c] - ys[i][c]);
    if (den == 0.0) continue;
    const double bound = a.lip_bound * std::sqrt(den);
    worst = std::max(worst, bound > 0.0 ? std::sqrt(num) / bound
                                        : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  }
  return worst;
}

/// Pointwise composition t_j -> a(gamma(t_j)).
inline LoopSample nemytskii(const LoopSample& ls, const LipschitzMap& a) {
  if (a.in_dim != ls.components()) throw std::invalid_argument("nemytskii: dimension mismatch");
  LoopSample out(ls.grid(), a.out_dim);
  std::vector<double> x(a.in_dim);
  std::vector<double> y(a.out_dim);
  for (std::size_t j = 0; j < ls.size(); ++j) {
    ls.point(j, x);
    a.apply(x, y);
    for (std::size_t c = 0; c < a.out_dim; ++c) out(j, c) = y[c];
  }
  out.require_finite("nemytskii");
  return out;
}

/// Random real loop with u_k = zeta_k |k|^{-(sigma + 1/2)} for 0 < |k| < N/2,
/// zeta_k complex standard normal (real and imaginary parts N(0, 1/2)).
/// Mean and Nyquist coefficients are zero. The result is tagged with sigma.
inline LoopSample sample_loop(double sigma, std::size_t m, std::uint64_t seed, const Grid& grid) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sample_loop: regularity must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  SpectralLoop sl(grid, m);
  const int nyq = grid.nyquist();
  for (std::size_t c = 0; c < m; ++c) {
    for (int k = 1; k < nyq; ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      sl.at(c, static_cast<std::size_t>(k)) =
          cplx{re, im} * std::pow(static_cast<double>(k), -(sigma + 0.5));
    }
  }
  LoopSample out = idft(sl);
  out.set_regularity(sigma);
  return out;
}

}  // namespace sobloop
