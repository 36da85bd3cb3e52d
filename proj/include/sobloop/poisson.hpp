#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sobloop/detail/summation.hpp"
#include "sobloop/fourier.hpp"
#include "sobloop/grid.hpp"
#include "sobloop/sobolev.hpp"
#include "sobloop/transgression.hpp"

namespace sobloop {

/// Density f(x, x_t, x_tt) of a functional int f dt together with its partial
/// derivatives; each argument and each partial has m entries.
struct DifferentialDensity {
  std::function<double(std::span<const double>, std::span<const double>, std::span<const double>)>
      f;
  std::function<void(std::span<const double>, std::span<const double>, std::span<const double>,
                     std::span<double>, std::span<double>, std::span<double>)>
      partials;
};

enum class FunctionalKind { pointwise, differential, cylindrical, general };

/// Functional F(gamma) on sampled loops with its L^2 variational derivative
/// (the grid gradient divided by 2 pi/N) and, when known, its second
/// variation v -> Hess F(gamma) v.
struct Functional {
  std::string name;
  std::size_t components = 1;
  FunctionalKind kind = FunctionalKind::general;
  std::function<double(const LoopSample&)> eval;
  std::function<LoopSample(const LoopSample&)> gradient;
  std::function<LoopSample(const LoopSample&, const LoopSample&)> hessian;

  /// F(gamma) = int f(gamma(t)) dt.
  static Functional from_density(
      std::string name, std::size_t m, std::function<double(std::span<const double>)> f,
      std::function<void(std::span<const double>, std::span<double>)> grad = {},
      std::function<void(std::span<const double>, std::span<double>)> hess = {}) {
    Functional out;
    out.name = std::move(name);
    out.components = m;
    out.kind = FunctionalKind::pointwise;
    out.eval = [f, m](const LoopSample& g) {
      std::vector<double> x(m);
      detail::CompensatedSum acc;
      for (std::size_t j = 0; j < g.size(); ++j) {
        g.point(j, x);
        acc += f(x);
      }
      return g.grid().spacing() * acc.value();
    };
    if (grad) {
      out.gradient = [grad, m](const LoopSample& g) {
        LoopSample d(g.grid(), m);
        std::vector<double> x(m);
        std::vector<double> y(m);
        for (std::size_t j = 0; j < g.size(); ++j) {
          g.point(j, x);
          grad(x, y);
          for (std::size_t c = 0; c < m; ++c) d(j, c) = y[c];
        }
        return d;
      };
    }
    if (hess) {
      out.hessian = [hess, m](const LoopSample& g, const LoopSample& v) {
        LoopSample d(g.grid(), m);
        std::vector<double> x(m);
        std::vector<double> h(m * m);
        for (std::size_t j = 0; j < g.size(); ++j) {
          g.point(j, x);
          hess(x, h);
          for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < m; ++c) acc += h[r * m + c] * v(j, c);
            d(j, r) = acc;
          }
        }
        return d;
      };
    }
    return out;
  }

  /// F(gamma) = int f(gamma, gamma_t, gamma_tt) dt with spectral derivatives;
  /// the variational derivative is f_x - d/dt f_{x_t} + d^2/dt^2 f_{x_tt}.
  static Functional differential(std::string name, std::size_t m, DifferentialDensity dens) {
    Functional out;
    out.name = std::move(name);
    out.components = m;
    out.kind = FunctionalKind::differential;
    out.eval = [dens, m](const LoopSample& g) {
      const LoopSample gt = derivative(g, 1);
      const LoopSample gtt = derivative(g, 2);
      std::vector<double> x(m);
      std::vector<double> xt(m);
      std::vector<double> xtt(m);
      detail::CompensatedSum acc;
      for (std::size_t j = 0; j < g.size(); ++j) {
        g.point(j, x);
        gt.point(j, xt);
        gtt.point(j, xtt);
        acc += dens.f(x, xt, xtt);
      }
      return g.grid().spacing() * acc.value();
    };
    if (dens.partials) {
      out.gradient = [dens, m](const LoopSample& g) {
        const LoopSample gt = derivative(g, 1);
        const LoopSample gtt = derivative(g, 2);
        LoopSample fx(g.grid(), m);
        LoopSample fxt(g.grid(), m);
        LoopSample fxtt(g.grid(), m);
        std::vector<double> x(m);
        std::vector<double> xt(m);
        std::vector<double> xtt(m);
        std::vector<double> a(m);
        std::vector<double> b(m);
        std::vector<double> c2(m);
        for (std::size_t j = 0; j < g.size(); ++j) {
          g.point(j, x);
          gt.point(j, xt);
          gtt.point(j, xtt);
          dens.partials(x, xt, xtt, a, b, c2);
          for (std::size_t c = 0; c < m; ++c) {
            fx(j, c) = a[c];
            fxt(j, c) = b[c];
            fxtt(j, c) = c2[c];
          }
        }
        return fx - derivative(fxt, 1) + derivative(fxtt, 2);
      };
    }
    return out;
  }

  /// F(gamma) = phi(z) where z lists, per component, Re u_k for k = 0..K and
  /// Im u_k for k = 1..K. dphi fills the gradient; d2phi the Hessian
  /// (row-major, size dim^2) if given.
  static Functional cylindrical(
      std::string name, std::size_t m, int modes, std::function<double(std::span<const double>)> phi,
      std::function<void(std::span<const double>, std::span<double>)> dphi,
      std::function<void(std::span<const double>, std::span<double>)> d2phi = {}) {
    if (modes < 0) throw std::invalid_argument("cylindrical: K must be >= 0");
    const std::size_t per = 2 * static_cast<std::size_t>(modes) + 1;
    const std::size_t dim = per * m;
    auto coords = [m, modes, per](const LoopSample& g) {
      if (modes >= g.grid().nyquist()) {
        throw std::invalid_argument("cylindrical: K must be below N/2");
      }
      const SpectralLoop sl = dft(g);
      std::vector<double> z(per * m);
      for (std::size_t c = 0; c < m; ++c) {
        for (int k = 0; k <= modes; ++k) z[c * per + k] = sl.at(c, k).real();
        for (int k = 1; k <= modes; ++k) z[c * per + modes + k] = sl.at(c, k).imag();
      }
      return z;
    };
    // Grid function of the coefficient vector w: sum_a w_a d z_a / d x_j
    // scaled to an L^2 gradient, (1/2pi) sum (w_Re cos kt - w_Im sin kt).
    auto synth = [m, modes, per](const Grid& grid, std::span<const double> w) {
      LoopSample d(grid, m);
      for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
          const double t = grid.node(j);
          double acc = w[c * per];
          for (int k = 1; k <= modes; ++k) {
            acc += w[c * per + k] * std::cos(k * t) - w[c * per + modes + k] * std::sin(k * t);
          }
          d(j, c) = acc / two_pi;
        }
      }
      return d;
    };
    Functional out;
    out.name = std::move(name);
    out.components = m;
    out.kind = FunctionalKind::cylindrical;
    out.eval = [coords, phi](const LoopSample& g) { return phi(coords(g)); };
    out.gradient = [coords, synth, dphi, dim](const LoopSample& g) {
      std::vector<double> w(dim);
      dphi(coords(g), w);
      return synth(g.grid(), w);
    };
    if (d2phi) {
      out.hessian = [coords, synth, d2phi, dim](const LoopSample& g, const LoopSample& v) {
        std::vector<double> h(dim * dim);
        d2phi(coords(g), h);
        const std::vector<double> dz = coords(v);
        std::vector<double> w(dim, 0.0);
        for (std::size_t a = 0; a < dim; ++a)
          for (std::size_t b = 0; b < dim; ++b) w[a] += h[a * dim + b] * dz[b];
        return synth(g.grid(), w);
      };
    }
    return out;
  }

  static Functional general(std::string name, std::size_t m,
                            std::function<double(const LoopSample&)> eval,
                            std::function<LoopSample(const LoopSample&)> gradient = {},
                            std::function<LoopSample(const LoopSample&, const LoopSample&)> hess = {}) {
    Functional out;
    out.name = std::move(name);
    out.components = m;
    out.kind = FunctionalKind::general;
    out.eval = std::move(eval);
    out.gradient = std::move(gradient);
    out.hessian = std::move(hess);
    return out;
  }

  /// a * F.
  [[nodiscard]] Functional scaled(double a) const {
    Functional out = *this;
    out.name = name + "*" + std::to_string(a);
    out.eval = [e = eval, a](const LoopSample& g) { return a * e(g); };
    if (gradient) out.gradient = [d = gradient, a](const LoopSample& g) { return a * d(g); };
    if (hessian) {
      out.hessian = [h = hessian, a](const LoopSample& g, const LoopSample& v) { return a * h(g, v); };
    }
    return out;
  }
};

inline double eval_functional(const Functional& F, const LoopSample& gamma) {
  if (gamma.components() != F.components) {
    throw std::invalid_argument("eval_functional: component count mismatch for " + F.name);
  }
  return F.eval(gamma);
}

struct VariationalOptions {
  bool fd_fallback = false;
  double eps = 1e-6;
};

/// delta F(gamma) as a loop; finite differences of eval_functional along grid
/// basis directions when there is no analytic gradient and the fallback is on.
inline LoopSample variational_derivative(const Functional& F, const LoopSample& gamma,
                                         const VariationalOptions& opt = {}) {
  if (gamma.components() != F.components) {
    throw std::invalid_argument("variational_derivative: component count mismatch for " + F.name);
  }
  if (F.gradient) return F.gradient(gamma);
  if (!opt.fd_fallback) {
    throw std::invalid_argument("variational_derivative: " + F.name +
                                " has no gradient and the finite-difference fallback is off");
  }
  LoopSample out(gamma.grid(), gamma.components());
  LoopSample probe = gamma;
  const double w = gamma.grid().spacing();
  for (std::size_t c = 0; c < gamma.components(); ++c) {
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      const double x0 = probe(j, c);
      probe(j, c) = x0 + opt.eps;
      const double fp = F.eval(probe);
      probe(j, c) = x0 - opt.eps;
      const double fm = F.eval(probe);
      probe(j, c) = x0;
      out(j, c) = (fp - fm) / (2.0 * opt.eps * w);
    }
  }
  return out;
}

/// |D_h F - <delta F, h>| / max(|D_h F|, |<delta F, h>|, tiny) with a central
/// difference for D_h F.
inline double gradient_check(const Functional& F, const LoopSample& gamma, const LoopSample& h,
                             double eps = 1e-6) {
  const double fd = (F.eval(gamma + eps * h) - F.eval(gamma - eps * h)) / (2.0 * eps);
  const double an = duality_pair(variational_derivative(F, gamma), h);
  return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-300});
}

/// Second variation Hess F(gamma) v; central differences of the gradient
/// when no analytic Hessian is attached.
inline LoopSample hessian_apply(const Functional& F, const LoopSample& gamma, const LoopSample& v,
                                double eps = 1e-5) {
  if (F.hessian) return F.hessian(gamma, v);
  return (1.0 / (2.0 * eps)) *
         (variational_derivative(F, gamma + eps * v) - variational_derivative(F, gamma - eps * v));
}

/// One weakly nonlocal term A(gamma) d^{-1} (B(gamma)^T xi) with A, B taking
/// values in m x q matrices, row-major.
struct NonlocalTerm {
  LipschitzMap A;
  LipschitzMap B;
  std::size_t q = 1;
  bool paired = false;

  /// A = B, the configuration for which the term is skew-adjoint.
  static NonlocalTerm paired_term(LipschitzMap a, std::size_t q) {
    NonlocalTerm t{a, a, q, true};
    return t;
  }
};

/// Bracket operator: local J(gamma) d/dt, the weakly nonlocal extension
/// J d/dt + sum_r A_r d^{-1} B_r^T, or an explicit map for operators given
/// as differential polynomials.
class PoissonOperator {
 public:
  enum class Kind { local, weakly_nonlocal, explicit_op };
  using Apply = std::function<LoopSample(const LoopSample&, const LoopSample&)>;
  /// For an explicit state-dependent P: g(gamma, xi, eta) with
  /// <(D_v P) xi, eta> = <g, v> for all v.
  using StateGradient = std::function<LoopSample(const LoopSample&, const LoopSample&, const LoopSample&)>;

  static PoissonOperator local(TwoFormField j, std::string name = "local") {
    PoissonOperator p(Kind::local, j.dim(), std::move(name));
    p.j_ = std::move(j);
    return p;
  }

  static PoissonOperator weakly_nonlocal(TwoFormField j, std::vector<NonlocalTerm> terms,
                                         std::string name = "weakly_nonlocal") {
    const std::size_t m = j.dim();
    for (const auto& t : terms) {
      if (t.A.in_dim != m || t.B.in_dim != m || t.A.out_dim != m * t.q || t.B.out_dim != m * t.q) {
        throw std::invalid_argument("weakly_nonlocal: term maps must be R^m -> m x q matrices");
      }
    }
    PoissonOperator p(Kind::weakly_nonlocal, m, std::move(name));
    p.j_ = std::move(j);
    p.terms_ = std::move(terms);
    return p;
  }

  /// adjoint may be empty; it is then assembled densely on demand.
  static PoissonOperator explicit_op(std::size_t m, std::string name, Apply apply,
                                     bool state_independent, Apply adjoint = {},
                                     StateGradient state_gradient = {}) {
    PoissonOperator p(Kind::explicit_op, m, std::move(name));
    p.apply_ = std::move(apply);
    p.adjoint_ = std::move(adjoint);
    p.state_gradient_ = std::move(state_gradient);
    p.state_independent_ = state_independent;
    return p;
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t dim() const noexcept { return m_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const std::vector<NonlocalTerm>& terms() const noexcept { return terms_; }
  [[nodiscard]] const std::optional<TwoFormField>& field() const noexcept { return j_; }

  /// True when every nonlocal term has A_r = B_r.
  [[nodiscard]] bool paired() const noexcept {
    return std::all_of(terms_.begin(), terms_.end(), [](const NonlocalTerm& t) { return t.paired; });
  }

  /// No dependence on the base loop: constant J and constant (zero
  /// Lipschitz bound) A_r, B_r, or an explicit map declared as such.
  [[nodiscard]] bool state_independent() const noexcept {
    if (kind_ == Kind::explicit_op) return state_independent_;
    if (j_->kind() != TwoFormField::Kind::constant_J) return false;
    return std::all_of(terms_.begin(), terms_.end(), [](const NonlocalTerm& t) {
      return t.A.lip_bound == 0.0 && t.B.lip_bound == 0.0;
    });
  }

  [[nodiscard]] LoopSample apply(const LoopSample& gamma, const LoopSample& xi) const {
    check(gamma, xi, "apply_operator");
    if (kind_ == Kind::explicit_op) return apply_(gamma, xi);
    LoopSample out = apply_field(*j_, gamma, derivative(xi));
    for (const auto& t : terms_) {
      const LoopSample bx = mat_t_vec(t.B, t.q, gamma, xi);
      out += mat_vec(t.A, t.q, gamma, inv_dt(bx));
    }
    return out;
  }

  /// P^* with <P xi, eta> = <xi, P^* eta>. For the local part
  /// (J d/dt)^* = -d/dt J^T, for a nonlocal term (A d^{-1} B^T)^* = -B d^{-1} A^T.
  [[nodiscard]] LoopSample apply_adjoint(const LoopSample& gamma, const LoopSample& eta) const {
    check(gamma, eta, "apply_adjoint");
    if (kind_ == Kind::explicit_op) {
      if (adjoint_) return adjoint_(gamma, eta);
      return dense_adjoint(gamma, eta);
    }
    LoopSample out = -derivative(apply_field_transposed(*j_, gamma, eta));
    for (const auto& t : terms_) {
      const LoopSample ae = mat_t_vec(t.A, t.q, gamma, eta);
      out -= mat_vec(t.B, t.q, gamma, inv_dt(ae));
    }
    return out;
  }

  /// g with <(D_v P(gamma)) xi, eta> = <g, v>. Zero for state-independent P.
  /// Field derivatives of J, A_r, B_r use a pointwise central difference.
  [[nodiscard]] LoopSample state_gradient(const LoopSample& gamma, const LoopSample& xi,
                                          const LoopSample& eta) const {
    check(gamma, xi, "state_gradient");
    LoopSample out(gamma.grid(), m_);
    if (state_independent()) return out;
    if (kind_ == Kind::explicit_op) {
      if (!state_gradient_) {
        throw std::invalid_argument("state_gradient: explicit operator " + name_ +
                                    " provides no state derivative");
      }
      return state_gradient_(gamma, xi, eta);
    }
    const LoopSample dxi = derivative(xi);
    std::vector<double> x(m_);
    std::vector<double> plus(m_ * m_);
    std::vector<double> minus(m_ * m_);
    if (j_->kind() == TwoFormField::Kind::variable_B) {
      for (std::size_t j = 0; j < gamma.size(); ++j) {
        for (std::size_t a = 0; a < m_; ++a) {
          gamma.point(j, x);
          const double step = fd_step(x[a]);
          x[a] += step;
          j_->matrix_at(x, plus);
          x[a] -= 2.0 * step;
          j_->matrix_at(x, minus);
          double acc = 0.0;
          for (std::size_t r = 0; r < m_; ++r)
            for (std::size_t c = 0; c < m_; ++c)
              acc += (plus[r * m_ + c] - minus[r * m_ + c]) / (2.0 * step) * dxi(j, c) * eta(j, r);
          out(j, a) += acc;
        }
      }
    }
    for (const auto& t : terms_) {
      // <(D_v A) w, eta> with w = d^{-1}(B^T xi), and
      // <(D_v B)^T xi, -d^{-1}(A^T eta)> from the B factor.
      const LoopSample w = inv_dt(mat_t_vec(t.B, t.q, gamma, xi));
      const LoopSample z = -inv_dt(mat_t_vec(t.A, t.q, gamma, eta));
      std::vector<double> ap(m_ * t.q);
      std::vector<double> am(m_ * t.q);
      for (std::size_t j = 0; j < gamma.size(); ++j) {
        for (std::size_t a = 0; a < m_; ++a) {
          double acc = 0.0;
          if (t.A.lip_bound != 0.0) {
            gamma.point(j, x);
            const double step = fd_step(x[a]);
            x[a] += step;
            t.A.apply(x, ap);
            x[a] -= 2.0 * step;
            t.A.apply(x, am);
            for (std::size_t r = 0; r < m_; ++r)
              for (std::size_t i = 0; i < t.q; ++i)
                acc += (ap[r * t.q + i] - am[r * t.q + i]) / (2.0 * step) * w(j, i) * eta(j, r);
          }
          if (t.B.lip_bound != 0.0) {
            gamma.point(j, x);
            const double step = fd_step(x[a]);
            x[a] += step;
            t.B.apply(x, ap);
            x[a] -= 2.0 * step;
            t.B.apply(x, am);
            for (std::size_t r = 0; r < m_; ++r)
              for (std::size_t i = 0; i < t.q; ++i)
                acc += (ap[r * t.q + i] - am[r * t.q + i]) / (2.0 * step) * xi(j, r) * z(j, i);
          }
          out(j, a) += acc;
        }
      }
    }
    return out;
  }

 private:
  PoissonOperator(Kind k, std::size_t m, std::string name) : kind_(k), m_(m), name_(std::move(name)) {}

  static double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

  void check(const LoopSample& gamma, const LoopSample& xi, const char* where) const {
    if (gamma.components() != m_ || xi.components() != m_) {
      throw std::invalid_argument(std::string(where) + ": dimension mismatch for " + name_);
    }
    gamma.require_same_shape(xi);
  }

  static LoopSample apply_field_transposed(const TwoFormField& f, const LoopSample& gamma,
                                           const LoopSample& x) {
    const std::size_t m = f.dim();
    const std::vector<double> mats = f.sample(gamma);
    LoopSample out(x.grid(), m);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double* a = mats.data() + j * m * m;
      for (std::size_t c = 0; c < m; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m; ++r) acc += a[r * m + c] * x(j, r);
        out(j, c) = acc;
      }
    }
    return out;
  }

  // M(gamma)^T x with M in m x q: a q-component loop.
  LoopSample mat_t_vec(const LipschitzMap& map, std::size_t q, const LoopSample& gamma,
                       const LoopSample& x) const {
    LoopSample out(x.grid(), q);
    std::vector<double> pt(m_);
    std::vector<double> mat(m_ * q);
    for (std::size_t j = 0; j < x.size(); ++j) {
      gamma.point(j, pt);
      map.apply(pt, mat);
      for (std::size_t i = 0; i < q; ++i) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m_; ++r) acc += mat[r * q + i] * x(j, r);
        out(j, i) = acc;
      }
    }
    return out;
  }

  // M(gamma) y with y a q-component loop.
  LoopSample mat_vec(const LipschitzMap& map, std::size_t q, const LoopSample& gamma,
                     const LoopSample& y) const {
    LoopSample out(y.grid(), m_);
    std::vector<double> pt(m_);
    std::vector<double> mat(m_ * q);
    for (std::size_t j = 0; j < y.size(); ++j) {
      gamma.point(j, pt);
      map.apply(pt, mat);
      for (std::size_t r = 0; r < m_; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < q; ++i) acc += mat[r * q + i] * y(j, i);
        out(j, r) = acc;
      }
    }
    return out;
  }

  // (P^* eta)_b = <P e_b, eta> / w for basis loops e_b.
  LoopSample dense_adjoint(const LoopSample& gamma, const LoopSample& eta) const {
    LoopSample out(gamma.grid(), m_);
    LoopSample e(gamma.grid(), m_);
    const double w = gamma.grid().spacing();
    for (std::size_t c = 0; c < m_; ++c) {
      for (std::size_t j = 0; j < gamma.size(); ++j) {
        e(j, c) = 1.0;
        out(j, c) = duality_pair(apply_(gamma, e), eta) / w;
        e(j, c) = 0.0;
      }
    }
    return out;
  }

  Kind kind_;
  std::size_t m_;
  std::string name_;
  std::optional<TwoFormField> j_;
  std::vector<NonlocalTerm> terms_;
  Apply apply_;
  Apply adjoint_;
  StateGradient state_gradient_;
  bool state_independent_ = false;
};

inline LoopSample apply_operator(const PoissonOperator& P, const LoopSample& gamma,
                                 const LoopSample& xi) {
  return P.apply(gamma, xi);
}

/// {F, G}(gamma) = <P(gamma) delta G, delta F>.
inline double bracket(const Functional& F, const Functional& G, const PoissonOperator& P,
                      const LoopSample& gamma) {
  return duality_pair(P.apply(gamma, variational_derivative(G, gamma)),
                      variational_derivative(F, gamma));
}

/// |<P xi, eta> + <P eta, xi>|, zero for a skew-adjoint P.
inline double operator_skew_residual(const PoissonOperator& P, const LoopSample& gamma,
                                     const LoopSample& xi, const LoopSample& eta) {
  return std::abs(duality_pair(P.apply(gamma, xi), eta) + duality_pair(P.apply(gamma, eta), xi));
}

enum class JacobiMethod { analytic, finite_difference };

struct JacobiReport {
  std::vector<std::string> triples;
  double residual = 0.0;
  /// Largest of |{F,G}|, |{G,H}|, |{H,F}| and the three nested brackets.
  double scale = 0.0;
  double relative_residual = 0.0;
  double epsilon_fd = 0.0;
  JacobiMethod method = JacobiMethod::analytic;
  double terms[3] = {0.0, 0.0, 0.0};
};

/// Variational derivative of gamma -> {G, H}(gamma).
/// Analytic: Hess G (P dH) + Hess H (P^* dG) + state term.
/// Finite differences: central differences along grid basis directions.
inline LoopSample bracket_gradient(const Functional& G, const Functional& H,
                                   const PoissonOperator& P, const LoopSample& gamma,
                                   JacobiMethod method, double eps) {
  if (method == JacobiMethod::analytic) {
    const LoopSample dG = variational_derivative(G, gamma);
    const LoopSample dH = variational_derivative(H, gamma);
    LoopSample out = hessian_apply(G, gamma, P.apply(gamma, dH)) +
                     hessian_apply(H, gamma, P.apply_adjoint(gamma, dG));
    if (!P.state_independent()) out += P.state_gradient(gamma, dH, dG);
    return out;
  }
  LoopSample out(gamma.grid(), gamma.components());
  LoopSample probe = gamma;
  const double w = gamma.grid().spacing();
  for (std::size_t c = 0; c < gamma.components(); ++c) {
    for (std::size_t j = 0; j < gamma.size(); ++j) {
      const double x0 = probe(j, c);
      probe(j, c) = x0 + eps;
      const double bp = bracket(G, H, P, probe);
      probe(j, c) = x0 - eps;
      const double bm = bracket(G, H, P, probe);
      probe(j, c) = x0;
      out(j, c) = (bp - bm) / (2.0 * eps * w);
    }
  }
  return out;
}

/// {F,{G,H}} + {G,{H,F}} + {H,{F,G}} with the outer bracket evaluated as
/// <P delta{.,.}, delta F>.
inline JacobiReport jacobi_residual(const Functional& F, const Functional& G, const Functional& H,
                                    const PoissonOperator& P, const LoopSample& gamma,
                                    double eps = 1e-5,
                                    JacobiMethod method = JacobiMethod::analytic) {
  if (!(eps > 0.0)) throw std::invalid_argument("jacobi_residual: eps must be > 0");
  JacobiReport rep;
  rep.triples = {F.name, G.name, H.name};
  rep.epsilon_fd = eps;
  rep.method = method;
  const Functional* fs[3] = {&F, &G, &H};
  double scale = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Functional& a = *fs[i];
    const Functional& b = *fs[(i + 1) % 3];
    const Functional& c = *fs[(i + 2) % 3];
    const LoopSample inner = bracket_gradient(b, c, P, gamma, method, eps);
    rep.terms[i] = duality_pair(P.apply(gamma, inner), variational_derivative(a, gamma));
    scale = std::max({scale, std::abs(rep.terms[i]), std::abs(bracket(b, c, P, gamma))});
  }
  detail::CompensatedSum acc;
  for (double t : rep.terms) acc += t;
  rep.residual = std::abs(acc.value());
  rep.scale = scale;
  rep.relative_residual = scale > 0.0 ? rep.residual / scale : rep.residual;
  return rep;
}

struct HessianSymmetry {
  double asymmetry = 0.0;
  double max_entry = 0.0;
};

/// Grid Hessian H_ab = (2 pi/N) d(delta F)_a / d x_b by central differences
/// of the variational derivative, and its largest asymmetry |H - H^T|. The
/// second variation of any functional is symmetric, which is d_V^2 = 0 in
/// degree two.
inline HessianSymmetry hessian_symmetry(const Functional& F, const LoopSample& gamma,
                                        double eps = 1e-4) {
  const std::size_t n = gamma.size();
  const std::size_t dim = n * gamma.components();
  const double w = gamma.grid().spacing();
  VariationalOptions opt;
  opt.fd_fallback = true;
  std::vector<double> hess(dim * dim);
  LoopSample probe = gamma;
  for (std::size_t b = 0; b < dim; ++b) {
    const std::size_t jb = b % n;
    const std::size_t cb = b / n;
    const double x0 = probe(jb, cb);
    probe(jb, cb) = x0 + eps;
    const LoopSample dp = variational_derivative(F, probe, opt);
    probe(jb, cb) = x0 - eps;
    const LoopSample dm = variational_derivative(F, probe, opt);
    probe(jb, cb) = x0;
    for (std::size_t a = 0; a < dim; ++a) {
      hess[a * dim + b] = w * (dp.data()[a] - dm.data()[a]) / (2.0 * eps);
    }
  }
  HessianSymmetry out;
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < dim; ++b) {
      out.asymmetry = std::max(out.asymmetry, std::abs(hess[a * dim + b] - hess[b * dim + a]));
      out.max_entry = std::max(out.max_entry, std::abs(hess[a * dim + b]));
    }
  }
  return out;
}

inline double dv_squared_check(const Functional& F, const LoopSample& gamma, double eps = 1e-4) {
  return hessian_symmetry(F, gamma, eps).asymmetry;
}

/// |int d/dt (density) dt| on the grid; zero for every horizontal-exact density.
inline double dh_exactness_check(const LoopSample& density) {
  if (density.components() != 1) {
    throw std::invalid_argument("dh_exactness_check: density must be scalar");
  }
  const LoopSample dt = derivative(density);
  detail::CompensatedSum acc;
  for (double v : dt.component(0)) acc += v;
  return std::abs(density.grid().spacing() * acc.value());
}

/// Largest |{F,G}_P1 - {F,G}_P2| over all ordered pairs of the battery.
inline double bracket_agreement(const PoissonOperator& P1, const PoissonOperator& P2,
                                std::span<const Functional> battery, const LoopSample& gamma) {
  double worst = 0.0;
  for (const auto& F : battery) {
    for (const auto& G : battery) {
      worst = std::max(worst, std::abs(bracket(F, G, P1, gamma) - bracket(F, G, P2, gamma)));
    }
  }
  return worst;
}

}  // namespace sobloop
