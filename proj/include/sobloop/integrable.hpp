#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sobloop/fourier.hpp"
#include "sobloop/grid.hpp"
#include "sobloop/poisson.hpp"
#include "sobloop/sobolev.hpp"

namespace sobloop {

enum class SystemName { kdv, nls, camassa_holm, dubrovin_novikov };

inline const char* to_string(SystemName s) noexcept {
  switch (s) {
    case SystemName::kdv: return "kdv";
    case SystemName::nls: return "nls";
    case SystemName::camassa_holm: return "camassa_holm";
    case SystemName::dubrovin_novikov: return "dubrovin_novikov";
  }
  return "unknown";
}

inline SystemName parse_system_name(const std::string& s) {
  if (s == "kdv") return SystemName::kdv;
  if (s == "nls") return SystemName::nls;
  if (s == "camassa_holm" || s == "ch") return SystemName::camassa_holm;
  if (s == "dubrovin_novikov" || s == "dn") return SystemName::dubrovin_novikov;
  throw std::invalid_argument("unknown system '" + s + "'");
}

/// KdV second structure. flow_consistent: P1 = -d^3 + 4u d + 2u_x, whose
/// Hamiltonian ladder with H0 = int u^2/2 and H1 = int (u^3 + u_x^2/2)
/// reproduces u_t = 6 u u_x - u_xxx. positive_dispersion: P1 = d^3 + 2u d + u_x, which
/// pairs with H1' = int (u^3/2 - u_x^2/2) instead.
enum class KdvNormalization { flow_consistent, positive_dispersion };

/// NLS operator on gamma = (Re psi, Im psi). canonical: J0; derivative: J0 d/dx.
enum class NlsOperator { canonical, derivative };

/// Thrown by evolve when the step guard leaves too few resolved modes.
class StepGuardError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SystemParams {
  KdvNormalization kdv = KdvNormalization::flow_consistent;
  NlsOperator nls = NlsOperator::canonical;
  /// Dubrovin-Novikov coefficients: g maps R^m to m x m, b to m x m x m
  /// (index order i, j, k, row-major).
  std::optional<LipschitzMap> dn_metric;
  std::optional<LipschitzMap> dn_christoffel;
  /// Hamiltonian density for DN; defaults to |u|^2/2.
  std::optional<Functional> dn_hamiltonian;
  double dealias_fraction = 2.0 / 3.0;
};

struct SystemDescriptor {
  SystemName name = SystemName::kdv;
  std::size_t components = 1;
  std::vector<PoissonOperator> operators;
  std::vector<Functional> hamiltonians;
  std::vector<Functional> casimirs;
  /// KdV recursion xi -> R(u) xi.
  std::function<LoopSample(const LoopSample&, const LoopSample&)> recursion;
  /// Applied to delta_u H before P (CH acts on delta_m H = (1 - d^2)^{-1} delta_u H).
  std::function<LoopSample(const LoopSample&)> gradient_map;
  /// Applied to P delta H to obtain u_t (CH: u_t = (1 - d^2)^{-1} m_t).
  std::function<LoopSample(const LoopSample&)> output_map;
  /// Upper estimate of the linearised rate |lambda| at wavenumber k for the
  /// flow at pair index (operator, hamiltonian), given max |u|.
  std::function<double(std::size_t, std::size_t, double, double)> stiffness;
  /// Operators that need H^1 data, by index.
  std::vector<bool> needs_smooth_data;
  double dealias_fraction = 2.0 / 3.0;
  SystemParams params;
};

namespace detail {

// Operators of order > 1 in the integrable catalogue need at least H^1; a
// sampled loop with regularity sigma lies in H^s only for s < sigma.
inline void require_smooth(const LoopSample& u, const std::string& op) {
  if (const auto sigma = u.regularity(); sigma && *sigma <= 1.0) {
    std::ostringstream msg;
    msg << op << " needs H^1 data; input was sampled at regularity " << *sigma
        << " (lies in H^s only for s < " << *sigma << ")";
    throw RegularityError(msg.str());
  }
}

inline LoopSample scalar_mul(const LoopSample& a, const LoopSample& b) {
  return pointwise_product(a, b);
}

inline Functional kdv_h0() {
  return Functional::from_density(
      "H0", 1, [](std::span<const double> x) { return 0.5 * x[0] * x[0]; },
      [](std::span<const double> x, std::span<double> g) { g[0] = x[0]; },
      [](std::span<const double>, std::span<double> h) { h[0] = 1.0; });
}

inline Functional kdv_casimir() {
  return Functional::from_density(
      "C", 1, [](std::span<const double> x) { return x[0]; },
      [](std::span<const double>, std::span<double> g) { g[0] = 1.0; },
      [](std::span<const double>, std::span<double> h) { h[0] = 0.0; });
}

// int (a u^3 + b u_x^2)
inline Functional cubic_gradient_energy(std::string name, double a, double b) {
  DifferentialDensity d;
  d.f = [a, b](std::span<const double> x, std::span<const double> xt, std::span<const double>) {
    return a * x[0] * x[0] * x[0] + b * xt[0] * xt[0];
  };
  d.partials = [a, b](std::span<const double> x, std::span<const double> xt,
                      std::span<const double>, std::span<double> fx, std::span<double> fxt,
                      std::span<double> fxtt) {
    fx[0] = 3.0 * a * x[0] * x[0];
    fxt[0] = 2.0 * b * xt[0];
    fxtt[0] = 0.0;
  };
  return Functional::differential(std::move(name), 1, d);
}

inline SystemDescriptor make_kdv(const SystemParams& params) {
  SystemDescriptor sys;
  sys.name = SystemName::kdv;
  sys.components = 1;
  sys.params = params;
  sys.dealias_fraction = params.dealias_fraction;
  const bool plus = params.kdv == KdvNormalization::positive_dispersion;
  sys.operators.push_back(PoissonOperator::explicit_op(
      1, "P0", [](const LoopSample&, const LoopSample& xi) { return derivative(xi); }, true,
      [](const LoopSample&, const LoopSample& eta) { return -derivative(eta); }));
  // P1 = e d^3 + a u d + b u_x; skew-adjoint when a = 2b.
  const double e = plus ? 1.0 : -1.0;
  const double a = plus ? 2.0 : 4.0;
  const double b = plus ? 1.0 : 2.0;
  auto p1 = [e, a, b](const LoopSample& u, const LoopSample& xi) {
    require_smooth(u, "KdV P1");
    const LoopSample ux = derivative(u);
    return e * derivative(xi, 3) + a * scalar_mul(u, derivative(xi)) + b * scalar_mul(ux, xi);
  };
  auto p1_adj = [e, a, b](const LoopSample& u, const LoopSample& eta) {
    require_smooth(u, "KdV P1");
    const LoopSample ux = derivative(u);
    return -e * derivative(eta, 3) - a * derivative(scalar_mul(u, eta)) + b * scalar_mul(ux, eta);
  };
  // <(a v d + b v_x) xi, eta> = <v, a xi_x eta - b (xi eta)_x>.
  auto p1_state = [a, b](const LoopSample&, const LoopSample& xi, const LoopSample& eta) {
    return a * scalar_mul(derivative(xi), eta) - b * derivative(scalar_mul(xi, eta));
  };
  sys.operators.push_back(
      PoissonOperator::explicit_op(1, plus ? "P1_plus" : "P1", p1, false, p1_adj, p1_state));
  sys.needs_smooth_data = {false, true};
  sys.hamiltonians.push_back(kdv_h0());
  sys.hamiltonians.push_back(cubic_gradient_energy("H1", 1.0, 0.5));
  sys.casimirs.push_back(kdv_casimir());
  // R = P1 P0^{-1} = e d^2 + a u + b u_x d^{-1}.
  sys.recursion = [e, a, b](const LoopSample& u, const LoopSample& xi) {
    require_smooth(u, "KdV recursion");
    const LoopSample ux = derivative(u);
    return e * derivative(xi, 2) + a * scalar_mul(u, xi) + b * scalar_mul(ux, inv_dt(xi));
  };
  sys.stiffness = [](std::size_t, std::size_t, double k, double umax) {
    return k * k * k + 6.0 * umax * k;
  };
  return sys;
}

inline Functional nls_hamiltonian() {
  DifferentialDensity d;
  d.f = [](std::span<const double> x, std::span<const double> xt, std::span<const double>) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return 0.5 * (xt[0] * xt[0] + xt[1] * xt[1]) - 0.5 * r2 * r2;
  };
  d.partials = [](std::span<const double> x, std::span<const double> xt, std::span<const double>,
                  std::span<double> fx, std::span<double> fxt, std::span<double> fxtt) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    for (int c = 0; c < 2; ++c) {
      fx[c] = -2.0 * r2 * x[c];
      fxt[c] = xt[c];
      fxtt[c] = 0.0;
    }
  };
  return Functional::differential("H_NLS", 2, d);
}

inline Functional nls_mass() {
  return Functional::from_density(
      "mass", 2, [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = 2.0 * x[0];
        g[1] = 2.0 * x[1];
      },
      [](std::span<const double>, std::span<double> h) {
        h[0] = 2.0;
        h[1] = 0.0;
        h[2] = 0.0;
        h[3] = 2.0;
      });
}

inline SystemDescriptor make_nls(const SystemParams& params) {
  SystemDescriptor sys;
  sys.name = SystemName::nls;
  sys.components = 2;
  sys.params = params;
  sys.dealias_fraction = params.dealias_fraction;
  // J0 = [[0, 1], [-1, 0]] acting pointwise.
  auto j0 = [](const LoopSample& x) {
    LoopSample out(x.grid(), 2);
    for (std::size_t j = 0; j < x.size(); ++j) {
      out(j, 0) = x(j, 1);
      out(j, 1) = -x(j, 0);
    }
    return out;
  };
  if (params.nls == NlsOperator::canonical) {
    sys.operators.push_back(PoissonOperator::explicit_op(
        2, "J0", [j0](const LoopSample&, const LoopSample& xi) { return j0(xi); }, true,
        [j0](const LoopSample&, const LoopSample& eta) { return -j0(eta); }));
    sys.stiffness = [](std::size_t, std::size_t, double k, double umax) {
      return k * k + 6.0 * umax * umax;
    };
  } else {
    sys.operators.push_back(PoissonOperator::explicit_op(
        2, "J0_d",
        [j0](const LoopSample&, const LoopSample& xi) { return j0(derivative(xi)); }, true,
        [j0](const LoopSample&, const LoopSample& eta) { return j0(derivative(eta)); }));
    sys.stiffness = [](std::size_t, std::size_t, double k, double umax) {
      return k * k * k + 6.0 * umax * umax * k;
    };
  }
  sys.needs_smooth_data = {false};
  sys.hamiltonians.push_back(nls_hamiltonian());
  sys.casimirs.push_back(nls_mass());
  return sys;
}

inline SystemDescriptor make_camassa_holm(const SystemParams& params) {
  SystemDescriptor sys;
  sys.name = SystemName::camassa_holm;
  sys.components = 1;
  sys.params = params;
  sys.dealias_fraction = params.dealias_fraction;
  auto momentum = [](const LoopSample& u) { return u - derivative(u, 2); };
  sys.operators.push_back(PoissonOperator::explicit_op(
      1, "P0",
      [](const LoopSample& u, const LoopSample& xi) {
        require_smooth(u, "CH P0");
        return derivative(xi) - derivative(xi, 3);
      },
      true,
      [](const LoopSample& u, const LoopSample& eta) {
        require_smooth(u, "CH P0");
        return derivative(eta, 3) - derivative(eta);
      }));
  sys.operators.push_back(PoissonOperator::explicit_op(
      1, "P1",
      [momentum](const LoopSample& u, const LoopSample& xi) {
        require_smooth(u, "CH P1");
        const LoopSample m = momentum(u);
        return scalar_mul(m, derivative(xi)) + derivative(scalar_mul(m, xi));
      },
      false,
      [momentum](const LoopSample& u, const LoopSample& eta) {
        require_smooth(u, "CH P1");
        const LoopSample m = momentum(u);
        return -derivative(scalar_mul(m, eta)) - scalar_mul(m, derivative(eta));
      }));
  sys.needs_smooth_data = {true, true};
  sys.hamiltonians.push_back(Functional::differential(
      "H0", 1,
      {[](std::span<const double> x, std::span<const double> xt, std::span<const double>) {
         return 0.5 * (x[0] * x[0] + xt[0] * xt[0]);
       },
       [](std::span<const double> x, std::span<const double> xt, std::span<const double>,
          std::span<double> fx, std::span<double> fxt, std::span<double> fxtt) {
         fx[0] = x[0];
         fxt[0] = xt[0];
         fxtt[0] = 0.0;
       }}));
  sys.hamiltonians.push_back(Functional::differential(
      "H1", 1,
      {[](std::span<const double> x, std::span<const double> xt, std::span<const double>) {
         return 0.5 * (x[0] * x[0] * x[0] + x[0] * xt[0] * xt[0]);
       },
       [](std::span<const double> x, std::span<const double> xt, std::span<const double>,
          std::span<double> fx, std::span<double> fxt, std::span<double> fxtt) {
         fx[0] = 0.5 * (3.0 * x[0] * x[0] + xt[0] * xt[0]);
         fxt[0] = x[0] * xt[0];
         fxtt[0] = 0.0;
       }}));
  sys.casimirs.push_back(kdv_casimir());
  sys.gradient_map = [](const LoopSample& g) { return inv_helmholtz(g); };
  sys.output_map = [](const LoopSample& mt) { return inv_helmholtz(mt); };
  sys.stiffness = [](std::size_t, std::size_t, double k, double umax) {
    return 3.0 * umax * k + 1.0;
  };
  return sys;
}

inline SystemDescriptor make_dubrovin_novikov(const SystemParams& params, std::size_t m) {
  if (!params.dn_metric || !params.dn_christoffel) {
    throw std::invalid_argument(
        "dubrovin_novikov: coefficient maps g^{ij} and b^{ij}_k must be supplied");
  }
  const LipschitzMap g = *params.dn_metric;
  const LipschitzMap b = *params.dn_christoffel;
  if (g.in_dim != m || g.out_dim != m * m || b.in_dim != m || b.out_dim != m * m * m) {
    throw std::invalid_argument("dubrovin_novikov: g must map R^m to m x m, b to m x m x m");
  }
  SystemDescriptor sys;
  sys.name = SystemName::dubrovin_novikov;
  sys.components = m;
  sys.params = params;
  sys.dealias_fraction = params.dealias_fraction;

  // (P xi)^i = g^{ij}(u) xi_j' + b^{ij}_k(u) u^k' xi_j.
  auto apply = [g, b, m](const LoopSample& u, const LoopSample& xi) {
    const LoopSample ut = derivative(u);
    const LoopSample dxi = derivative(xi);
    LoopSample out(u.grid(), m);
    std::vector<double> x(m);
    std::vector<double> gm(m * m);
    std::vector<double> bm(m * m * m);
    for (std::size_t t = 0; t < u.size(); ++t) {
      u.point(t, x);
      g.apply(x, gm);
      b.apply(x, bm);
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          acc += gm[i * m + j] * dxi(t, j);
          for (std::size_t k = 0; k < m; ++k) acc += bm[(i * m + j) * m + k] * ut(t, k) * xi(t, j);
        }
        out(t, i) = acc;
      }
    }
    return out;
  };
  // P^* eta = -(g^T eta)' + (b u')^T eta.
  auto adjoint = [g, b, m](const LoopSample& u, const LoopSample& eta) {
    const LoopSample ut = derivative(u);
    LoopSample gte(u.grid(), m);
    LoopSample bte(u.grid(), m);
    std::vector<double> x(m);
    std::vector<double> gm(m * m);
    std::vector<double> bm(m * m * m);
    for (std::size_t t = 0; t < u.size(); ++t) {
      u.point(t, x);
      g.apply(x, gm);
      b.apply(x, bm);
      for (std::size_t j = 0; j < m; ++j) {
        double a1 = 0.0;
        double a2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          a1 += gm[i * m + j] * eta(t, i);
          for (std::size_t k = 0; k < m; ++k) a2 += bm[(i * m + j) * m + k] * ut(t, k) * eta(t, i);
        }
        gte(t, j) = a1;
        bte(t, j) = a2;
      }
    }
    return bte - derivative(gte);
  };
  // <(D_v P) xi, eta> = <v_a, d_a g^{ij} xi_j' eta_i + d_a b^{ij}_k u^k' xi_j eta_i>
  //                    - <v_a, (b^{ij}_a xi_j eta_i)'>.
  auto state = [g, b, m](const LoopSample& u, const LoopSample& xi, const LoopSample& eta) {
    const LoopSample ut = derivative(u);
    const LoopSample dxi = derivative(xi);
    LoopSample local(u.grid(), m);
    LoopSample flux(u.grid(), m);
    std::vector<double> x(m);
    std::vector<double> gp(m * m);
    std::vector<double> gmn(m * m);
    std::vector<double> bp(m * m * m);
    std::vector<double> bmn(m * m * m);
    std::vector<double> b0(m * m * m);
    for (std::size_t t = 0; t < u.size(); ++t) {
      u.point(t, x);
      b.apply(x, b0);
      for (std::size_t a = 0; a < m; ++a) {
        const double x0 = x[a];
        const double step = 1e-6 * std::max(1.0, std::abs(x0));
        x[a] = x0 + step;
        g.apply(x, gp);
        b.apply(x, bp);
        x[a] = x0 - step;
        g.apply(x, gmn);
        b.apply(x, bmn);
        x[a] = x0;
        double acc = 0.0;
        double fl = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            acc += (gp[i * m + j] - gmn[i * m + j]) / (2.0 * step) * dxi(t, j) * eta(t, i);
            for (std::size_t k = 0; k < m; ++k) {
              const std::size_t idx = (i * m + j) * m + k;
              acc += (bp[idx] - bmn[idx]) / (2.0 * step) * ut(t, k) * xi(t, j) * eta(t, i);
            }
            fl += b0[(i * m + j) * m + a] * xi(t, j) * eta(t, i);
          }
        }
        local(t, a) = acc;
        flux(t, a) = fl;
      }
    }
    return local - derivative(flux);
  };
  const bool constant = g.lip_bound == 0.0 && b.lip_bound == 0.0;
  sys.operators.push_back(PoissonOperator::explicit_op(m, "P_DN", apply, constant, adjoint, state));
  sys.needs_smooth_data = {false};
  if (params.dn_hamiltonian) {
    sys.hamiltonians.push_back(*params.dn_hamiltonian);
  } else {
    sys.hamiltonians.push_back(Functional::from_density(
        "H", m,
        [](std::span<const double> x) {
          double acc = 0.0;
          for (double v : x) acc += v * v;
          return 0.5 * acc;
        },
        [](std::span<const double> x, std::span<double> out) {
          std::copy(x.begin(), x.end(), out.begin());
        },
        [m](std::span<const double>, std::span<double> h) {
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) h[r * m + c] = r == c ? 1.0 : 0.0;
        }));
  }
  const double gsup = std::isfinite(g.sup_bound) ? g.sup_bound : 1.0;
  const double bsup = std::isfinite(b.sup_bound) ? b.sup_bound : 1.0;
  sys.stiffness = [gsup, bsup](std::size_t, std::size_t, double k, double umax) {
    return (gsup + bsup * umax) * k + 1.0;
  };
  return sys;
}

}  // namespace detail

/// Builds the KdV, NLS, Camassa-Holm or Dubrovin-Novikov catalogue entry.
/// m is used only by Dubrovin-Novikov (the others fix their component count).
inline SystemDescriptor make_system(SystemName name, const Grid& /*grid*/,
                                    const SystemParams& params = {}, std::size_t m = 1) {
  switch (name) {
    case SystemName::kdv: return detail::make_kdv(params);
    case SystemName::nls: return detail::make_nls(params);
    case SystemName::camassa_holm: return detail::make_camassa_holm(params);
    case SystemName::dubrovin_novikov: return detail::make_dubrovin_novikov(params, m);
  }
  throw std::invalid_argument("make_system: unknown system");
}

/// Magri partner of H0 under the positive-dispersion KdV P1: int (u^3/2 - u_x^2/2).
inline Functional kdv_positive_dispersion_partner() {
  return detail::cubic_gradient_energy("H1_plus", 0.5, -0.5);
}

struct FlowPair {
  std::size_t op = 0;
  std::size_t hamiltonian = 0;
};

namespace detail {

inline void check_pair(const SystemDescriptor& sys, FlowPair pair, const char* where) {
  if (pair.op >= sys.operators.size() || pair.hamiltonian >= sys.hamiltonians.size()) {
    std::ostringstream msg;
    msg << where << ": pair (" << pair.op << ", " << pair.hamiltonian << ") out of range for "
        << to_string(sys.name);
    throw std::invalid_argument(msg.str());
  }
}

inline LoopSample mapped_gradient(const SystemDescriptor& sys, std::size_t h, const LoopSample& u) {
  LoopSample g = variational_derivative(sys.hamiltonians[h], u);
  return sys.gradient_map ? sys.gradient_map(g) : g;
}

}  // namespace detail

/// u_t = P delta H, dealiased.
inline LoopSample rhs(const SystemDescriptor& sys, FlowPair pair, const LoopSample& u) {
  detail::check_pair(sys, pair, "rhs");
  if (u.components() != sys.components) throw std::invalid_argument("rhs: component mismatch");
  LoopSample out = sys.operators[pair.op].apply(u, detail::mapped_gradient(sys, pair.hamiltonian, u));
  if (sys.output_map) out = sys.output_map(out);
  return dealias(out, sys.dealias_fraction);
}

struct FlowLogEntry {
  double time = 0.0;
  std::vector<double> hamiltonians;
  std::vector<double> casimirs;
  double l2_norm = 0.0;
};

struct FlowState {
  double time = 0.0;
  LoopSample field;
  std::vector<FlowLogEntry> conserved_log;
  bool stable = true;
  std::string diagnostic;
  /// Galerkin truncation wavenumber used by the step guard.
  int galerkin_modes = 0;
  std::size_t steps = 0;
};

struct EvolveOptions {
  /// Largest accepted dt * |lambda(k)|; RK4 is stable on the imaginary axis
  /// up to 2 sqrt(2).
  double stability_limit = 2.5;
  /// The step guard rejects runs whose cutoff K falls below this fraction of N.
  double min_mode_fraction = 1.0 / 8.0;
  bool step_guard = true;
};

namespace detail {

inline FlowLogEntry log_entry(const SystemDescriptor& sys, double t, const LoopSample& u) {
  FlowLogEntry e;
  e.time = t;
  for (const auto& h : sys.hamiltonians) e.hamiltonians.push_back(eval_functional(h, u));
  for (const auto& c : sys.casimirs) e.casimirs.push_back(eval_functional(c, u));
  e.l2_norm = lp_norm(u, 2.0);
  return e;
}

inline LoopSample truncate(const LoopSample& u, int modes) {
  SpectralLoop sl = dft(u);
  for (std::size_t c = 0; c < sl.components(); ++c)
    for (std::size_t k = static_cast<std::size_t>(modes) + 1; k < SpectralLoop::half_size(u.grid());
         ++k)
      sl.at(c, k) = 0.0;
  return idft(sl);
}

}  // namespace detail

/// Largest wavenumber K <= dealias cutoff with dt * stiffness(K) within the
/// RK4 stability limit.
inline int galerkin_cutoff(const SystemDescriptor& sys, FlowPair pair, const LoopSample& u0,
                           double dt, const EvolveOptions& opt = {}) {
  const int cutoff = dealias_cutoff(u0.grid(), sys.dealias_fraction);
  if (!opt.step_guard) return cutoff;
  const double umax = max_abs(u0);
  int k = cutoff;
  while (k > 0 && dt * sys.stiffness(pair.op, pair.hamiltonian, static_cast<double>(k), umax) >
                      opt.stability_limit) {
    --k;
  }
  return k;
}

/// Classical RK4 for u_t = rhs(u) on the Galerkin space |k| <= K chosen by
/// the step guard. Every accepted step is logged. A non-finite state stops
/// the run with the log so far and a diagnostic.
inline FlowState evolve(const SystemDescriptor& sys, FlowPair pair, const LoopSample& u0, double dt,
                        double t_end, const EvolveOptions& opt = {}) {
  detail::check_pair(sys, pair, "evolve");
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be > 0");
  if (!(t_end >= 0.0)) throw std::invalid_argument("evolve: t_end must be >= 0");
  if (u0.components() != sys.components) throw std::invalid_argument("evolve: component mismatch");
  if (pair.op < sys.needs_smooth_data.size() && sys.needs_smooth_data[pair.op]) {
    detail::require_smooth(u0, std::string(to_string(sys.name)) + " " +
                                   sys.operators[pair.op].name());
  }
  const int modes = galerkin_cutoff(sys, pair, u0, dt, opt);
  const double min_modes = opt.min_mode_fraction * static_cast<double>(u0.size());
  if (opt.step_guard && static_cast<double>(modes) < min_modes) {
    std::ostringstream msg;
    msg << "evolve: dt = " << dt << " resolves only |k| <= " << modes << " (need >= " << min_modes
        << "); reduce dt";
    throw StepGuardError(msg.str());
  }
  FlowState st{0.0, detail::truncate(u0, modes), {}, true, {}, modes, 0};
  st.conserved_log.push_back(detail::log_entry(sys, 0.0, st.field));
  auto f = [&](const LoopSample& u) { return detail::truncate(rhs(sys, pair, u), modes); };
  const auto nsteps = static_cast<std::size_t>(std::llround(std::ceil(t_end / dt - 1e-9)));
  for (std::size_t n = 0; n < nsteps; ++n) {
    const double h = std::min(dt, t_end - st.time);
    const LoopSample& u = st.field;
    const LoopSample k1 = f(u);
    const LoopSample k2 = f(u + (0.5 * h) * k1);
    const LoopSample k3 = f(u + (0.5 * h) * k2);
    const LoopSample k4 = f(u + h * k3);
    LoopSample next = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.all_finite() || max_abs(next) > 1e150) {
      std::ostringstream msg;
      msg << "evolve: non-finite or overflowing state at t = " << st.time + h << " (step " << n + 1
          << ")";
      st.stable = false;
      st.diagnostic = msg.str();
      return st;
    }
    st.field = std::move(next);
    st.time = n + 1 == nsteps ? t_end : st.time + h;
    ++st.steps;
    st.conserved_log.push_back(detail::log_entry(sys, st.time, st.field));
  }
  return st;
}

/// ||P1 dH_n - P0 dH_{n+1}|| / max(||P1 dH_n||, tiny) in L^2.
inline double magri_check(const SystemDescriptor& sys, std::size_t n, const LoopSample& u) {
  if (sys.operators.size() < 2) {
    throw std::invalid_argument(std::string("magri_check: ") + to_string(sys.name) +
                                " has no second Poisson operator");
  }
  if (n + 1 >= sys.hamiltonians.size()) {
    throw std::invalid_argument("magri_check: Hamiltonians H_n and H_{n+1} are not both available");
  }
  const LoopSample lhs = dealias(sys.operators[1].apply(u, detail::mapped_gradient(sys, n, u)),
                                 sys.dealias_fraction);
  const LoopSample rhs0 = dealias(sys.operators[0].apply(u, detail::mapped_gradient(sys, n + 1, u)),
                                  sys.dealias_fraction);
  const double num = lp_norm(lhs - rhs0, 2.0);
  const double den = std::max(lp_norm(lhs, 2.0), 1e-300);
  return num / den;
}

/// KdV recursion R(u) xi, dealiased. The nonlocal term acts on the
/// mean-zero part of xi.
inline LoopSample recursion_apply(const SystemDescriptor& sys, const LoopSample& xi,
                                  const LoopSample& u) {
  if (!sys.recursion) {
    throw std::invalid_argument(std::string("recursion_apply: ") + to_string(sys.name) +
                                " has no recursion operator");
  }
  return dealias(sys.recursion(u, xi), sys.dealias_fraction);
}

}  // namespace sobloop
