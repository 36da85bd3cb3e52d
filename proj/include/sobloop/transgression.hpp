#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sobloop/detail/summation.hpp"
#include "sobloop/fourier.hpp"
#include "sobloop/grid.hpp"
#include "sobloop/sobolev.hpp"

namespace sobloop {

/// Antisymmetric matrix field on R^m, stored row-major. Either a constant
/// J0 or a Lipschitz map x -> B(x) with m*m outputs.
class TwoFormField {
 public:
  enum class Kind { constant_J, variable_B };

  static TwoFormField constant(std::size_t m, std::vector<double> j0) {
    if (j0.size() != m * m) throw std::invalid_argument("TwoFormField: J0 must be m x m");
    require_skew(j0, m, "TwoFormField::constant");
    TwoFormField f(Kind::constant_J, m);
    f.j0_ = std::move(j0);
    return f;
  }

  /// J = [[0, -1], [1, 0]], the matrix of dx ^ dy.
  static TwoFormField canonical() { return constant(2, {0.0, -1.0, 1.0, 0.0}); }

  static TwoFormField variable(std::size_t m, LipschitzMap b) {
    if (b.in_dim != m || b.out_dim != m * m) {
      throw std::invalid_argument("TwoFormField: B must map R^m to m x m matrices");
    }
    TwoFormField f(Kind::variable_B, m);
    f.b_ = std::move(b);
    return f;
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t dim() const noexcept { return m_; }
  [[nodiscard]] const std::vector<double>& j0() const {
    if (kind_ != Kind::constant_J) throw std::logic_error("TwoFormField: not constant");
    return j0_;
  }

  /// Matrix at x; skewness of variable fields is checked at every evaluation.
  void matrix_at(std::span<const double> x, std::span<double> out) const {
    if (kind_ == Kind::constant_J) {
      std::copy(j0_.begin(), j0_.end(), out.begin());
      return;
    }
    b_->apply(x, out);
    require_skew({out.begin(), out.end()}, m_, "TwoFormField::matrix_at");
  }

  /// Upper bound on the operator norm of the field: exact for constant J0,
  /// the declared sup bound of B otherwise.
  [[nodiscard]] double norm_bound() const {
    if (kind_ == Kind::variable_B) return b_->sup_bound;
    return operator_norm(j0_, m_);
  }

  /// Matrix field evaluated at every node of gamma, node-major m*m blocks.
  [[nodiscard]] std::vector<double> sample(const LoopSample& gamma) const {
    std::vector<double> out(gamma.size() * m_ * m_);
    std::vector<double> x(m_);
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      gamma.point(j, x);
      matrix_at(x, std::span<double>(out.data() + j * m_ * m_, m_ * m_));
    }
    return out;
  }

  static double operator_norm(std::span<const double> a, std::size_t m) {
    // Power iteration on A^T A; m is small.
    std::vector<double> v(m, 1.0);
    std::vector<double> av(m);
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) v[i] += 0.1 * static_cast<double>(i);
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
      for (std::size_t r = 0; r < m; ++r) {
        av[r] = 0.0;
        for (std::size_t c = 0; c < m; ++c) av[r] += a[r * m + c] * v[c];
      }
      for (std::size_t c = 0; c < m; ++c) {
        w[c] = 0.0;
        for (std::size_t r = 0; r < m; ++r) w[c] += a[r * m + c] * av[r];
      }
      double nw = 0.0;
      for (double x : w) nw += x * x;
      nw = std::sqrt(nw);
      if (nw == 0.0) return 0.0;
      lambda = nw;
      for (std::size_t i = 0; i < m; ++i) v[i] = w[i] / nw;
    }
    return std::sqrt(lambda);
  }

 private:
  TwoFormField(Kind k, std::size_t m) : kind_(k), m_(m) {}

  static void require_skew(std::span<const double> a, std::size_t m, const char* where) {
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) {
        if (std::abs(a[r * m + c] + a[c * m + r]) > 1e-12 * std::max(1.0, scale)) {
          throw std::invalid_argument(std::string(where) + ": matrix is not antisymmetric");
        }
      }
    }
  }

  Kind kind_;
  std::size_t m_;
  std::vector<double> j0_;
  std::optional<LipschitzMap> b_;
};

/// Pointwise matrix action x_j -> A(gamma(t_j)) x_j.
inline LoopSample apply_field(const TwoFormField& form, const LoopSample& gamma,
                              const LoopSample& x) {
  const std::size_t m = form.dim();
  if (gamma.components() != m || x.components() != m) {
    throw std::invalid_argument("apply_field: dimension mismatch");
  }
  gamma.require_same_shape(x);
  const std::vector<double> mats = form.sample(gamma);
  LoopSample out(x.grid(), m);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double* a = mats.data() + j * m * m;
    for (std::size_t r = 0; r < m; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < m; ++c) acc += a[r * m + c] * x(j, c);
      out(j, r) = acc;
    }
  }
  return out;
}

/// Theta(gamma)[h] = <J(gamma) gamma', h>.
inline double theta_duality(const LoopSample& gamma, const LoopSample& h, const TwoFormField& form,
                            const SobolevParams& /*sp*/) {
  if (gamma.components() != form.dim() || h.components() != form.dim()) {
    throw std::invalid_argument("theta_duality: dimension mismatch");
  }
  gamma.require_same_shape(h);
  return duality_pair(apply_field(form, gamma, derivative(gamma)), h);
}

/// <|D|^s gamma, J H |D|^{1-s} h> with unit constant. Splitting the orders
/// as s and 1 - s keeps the identity with the derivative form for every s;
/// at s = 1/2 both factors carry |D|^{1/2}. Under the symbol -i sgn(k) for H
/// this equals -theta_duality.
inline double theta_multiplier(const LoopSample& gamma, const LoopSample& h,
                               const TwoFormField& form, const SobolevParams& sp) {
  if (form.kind() != TwoFormField::Kind::constant_J) {
    throw std::invalid_argument(
        "theta_multiplier: only defined for a constant form; a variable B(gamma) does not "
        "commute with Fourier multipliers, use theta_duality or theta_kernel");
  }
  if (gamma.components() != form.dim() || h.components() != form.dim()) {
    throw std::invalid_argument("theta_multiplier: dimension mismatch");
  }
  gamma.require_same_shape(h);
  const LoopSample left = frac_laplacian(gamma, sp.s());
  const LoopSample right = apply_field(form, gamma, hilbert(frac_laplacian(h, 1.0 - sp.s())));
  return duality_pair(left, right);
}

/// Off-diagonal double trapezoid sum of
/// <gamma(t) - gamma(tau), B (h(t) - h(tau))> / (2|sin((t - tau)/2)|)^{1 + sp}.
/// For a variable field B is the midpoint average (B(gamma(t)) + B(gamma(tau)))/2.
inline double theta_kernel(const LoopSample& gamma, const LoopSample& h, const TwoFormField& form,
                           const SobolevParams& sp) {
  const std::size_t m = form.dim();
  if (gamma.components() != m || h.components() != m) {
    throw std::invalid_argument("theta_kernel: dimension mismatch");
  }
  gamma.require_same_shape(h);
  const std::size_t n = gamma.size();
  if (n < 16) throw std::invalid_argument("theta_kernel: requires N >= 16");
  const double expo = 1.0 + sp.s() * sp.p();
  const double step = gamma.grid().spacing();
  const bool variable = form.kind() == TwoFormField::Kind::variable_B;
  const std::vector<double> mats = variable ? form.sample(gamma) : form.j0();
  std::vector<double> a(m * m);
  std::vector<double> dg(m);
  std::vector<double> dh(m);
  detail::CompensatedSum total;
  for (std::size_t d = 1; d < n; ++d) {
    const double chord =
        2.0 * std::sin(std::numbers::pi * static_cast<double>(d) / static_cast<double>(n));
    const double weight = 1.0 / std::pow(chord, expo);
    detail::CompensatedSum row;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t l = (j + d) % n;
      for (std::size_t c = 0; c < m; ++c) {
        dg[c] = gamma(j, c) - gamma(l, c);
        dh[c] = h(j, c) - h(l, c);
      }
      const double* mat = mats.data();
      if (variable) {
        for (std::size_t i = 0; i < m * m; ++i) {
          a[i] = 0.5 * (mats[j * m * m + i] + mats[l * m * m + i]);
        }
        mat = a.data();
      }
      double v = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        double bh = 0.0;
        for (std::size_t c = 0; c < m; ++c) bh += mat[r * m + c] * dh[c];
        v += dg[r] * bh;
      }
      row += v;
    }
    total += weight * row.value();
  }
  return step * step * total.value();
}

/// Right side of the Hoelder bound for theta_kernel: |B| [gamma]_p [h]_{p'}
/// with both seminorms taken against the same measure
/// (2|sin((t - tau)/2)|)^{-(1 + sp)} dt dtau.
inline double theta_kernel_holder_bound(const LoopSample& gamma, const LoopSample& h,
                                        const TwoFormField& form, const SobolevParams& sp) {
  const double expo = 1.0 + sp.s() * sp.p();
  const double g = std::pow(gagliardo_power(gamma, sp.p(), expo), 1.0 / sp.p());
  const double k = std::pow(gagliardo_power(h, sp.p_conj(), expo), 1.0 / sp.p_conj());
  return form.norm_bound() * g * k;
}

struct ThetaEvaluation {
  double duality_value = 0.0;
  double kernel_value = 0.0;
  /// NaN for a variable field, where the multiplier form is undefined.
  double multiplier_value = std::numeric_limits<double>::quiet_NaN();
  double kernel_over_duality = std::numeric_limits<double>::quiet_NaN();
  double multiplier_over_duality = std::numeric_limits<double>::quiet_NaN();
  /// |duality| / (||gamma||_{H^{s,p}} ||h||_{H^{1-s,p'}}).
  double duality_bound_ratio = std::numeric_limits<double>::quiet_NaN();
  SobolevParams params{0.5, 2.0};
};

inline ThetaEvaluation evaluate_theta(const LoopSample& gamma, const LoopSample& h,
                                      const TwoFormField& form, const SobolevParams& sp) {
  ThetaEvaluation ev;
  ev.params = sp;
  ev.duality_value = theta_duality(gamma, h, form, sp);
  ev.kernel_value = theta_kernel(gamma, h, form, sp);
  if (form.kind() == TwoFormField::Kind::constant_J) {
    ev.multiplier_value = theta_multiplier(gamma, h, form, sp);
  }
  if (ev.duality_value != 0.0) {
    ev.kernel_over_duality = ev.kernel_value / ev.duality_value;
    ev.multiplier_over_duality = ev.multiplier_value / ev.duality_value;
  }
  const double denom = spectral_norm(gamma, sp.s(), sp.p(), NormKind::bessel_Hsp) *
                       spectral_norm(h, 1.0 - sp.s(), sp.p_conj(), NormKind::bessel_Hsp);
  if (denom > 0.0) ev.duality_bound_ratio = std::abs(ev.duality_value) / denom;
  return ev;
}

/// Transgression of the primitive lambda(x)[v] = 1/2 <J x, v> of the
/// constant form: Theta_lambda(gamma)[h] = 1/2 <J gamma, h>. For the
/// canonical J this is lambda = 1/2 (x dy - y dx).
inline double theta_lambda(const LoopSample& gamma, const LoopSample& h, const TwoFormField& form) {
  if (form.kind() != TwoFormField::Kind::constant_J) {
    throw std::invalid_argument("theta_lambda: needs a constant form");
  }
  return 0.5 * duality_pair(apply_field(form, gamma, gamma), h);
}

/// Transgressed two-form int omega(h, k) dt = <J h, k>.
inline double transgressed_two_form(const LoopSample& h, const LoopSample& k,
                                    const TwoFormField& form) {
  if (form.kind() != TwoFormField::Kind::constant_J) {
    throw std::invalid_argument("transgressed_two_form: needs a constant form");
  }
  return duality_pair(apply_field(form, h, h), k);
}

/// Central-difference exterior derivative of a 1-form alpha(gamma)[v]:
/// d alpha(h, k) = D_h(alpha[k]) - D_k(alpha[h]).
template <typename OneForm>
double exterior_derivative_fd(OneForm&& alpha, const LoopSample& gamma, const LoopSample& h,
                              const LoopSample& k, double eps) {
  const double dh = (alpha(gamma + eps * h, k) - alpha(gamma - eps * h, k)) / (2.0 * eps);
  const double dk = (alpha(gamma + eps * k, h) - alpha(gamma - eps * k, h)) / (2.0 * eps);
  return dh - dk;
}

/// Canonical presymplectic form <h', k> - <k', h>. It does not depend on a
/// base loop.
inline double presymplectic(const LoopSample& h, const LoopSample& k) {
  h.require_same_shape(k);
  return duality_pair(derivative(h), k) - duality_pair(derivative(k), h);
}

/// The equivalent one-term expression 2 <h', k>.
inline double presymplectic_one_term(const LoopSample& h, const LoopSample& k) {
  h.require_same_shape(k);
  return 2.0 * duality_pair(derivative(h), k);
}

/// Null-space dimension of h -> presymplectic(h, .). In the real Fourier
/// basis the form is block diagonal with blocks proportional to k for each
/// resolved wavenumber 0 <= k < N/2 and each component, so only the k = 0
/// blocks (the constant loops) are degenerate.
inline std::size_t presymplectic_kernel_dimension(const Grid& grid, std::size_t m) {
  if (m == 0) throw std::invalid_argument("presymplectic_kernel_dimension: m must be >= 1");
  std::size_t dim = 0;
  for (int k = 0; k < grid.nyquist(); ++k) {
    // Block symbol 2 pi * 2k on the (cos kt, sin kt) pair; k = 0 has a single
    // basis function.
    const double symbol = 4.0 * std::numbers::pi * static_cast<double>(k);
    if (symbol == 0.0) dim += 1;
  }
  return dim * m;
}

}  // namespace sobloop
