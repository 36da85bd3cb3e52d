#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sobloop/grid.hpp"

namespace sobloop {

using cplx = std::complex<double>;

/// Fourier coefficients u_k = (1/N) sum_j x_j exp(-i k t_j) of a real loop.
/// Only k = 0..N/2 is stored per component; u_{-k} = conj(u_k).
class SpectralLoop {
 public:
  SpectralLoop(Grid grid, std::size_t components)
      : grid_(grid), m_(components), coeffs_(half_size(grid) * components, cplx{}) {
    if (components == 0) throw std::invalid_argument("SpectralLoop: component count must be >= 1");
  }

  /// Takes the half spectrum k = 0..N/2, component-major. The k = 0 and
  /// k = N/2 coefficients of a real signal are real; a non-negligible
  /// imaginary part there is rejected.
  SpectralLoop(Grid grid, std::size_t components, std::vector<cplx> half_spectrum)
      : grid_(grid), m_(components), coeffs_(std::move(half_spectrum)) {
    if (components == 0) throw std::invalid_argument("SpectralLoop: component count must be >= 1");
    if (coeffs_.size() != half_size(grid) * components) {
      throw std::invalid_argument("SpectralLoop: coefficient count does not match (N/2+1)*m");
    }
    const auto nyq = static_cast<std::size_t>(grid.nyquist());
    for (std::size_t c = 0; c < m_; ++c) {
      for (std::size_t k : {std::size_t{0}, nyq}) {
        const cplx z = coeffs_[c * half_size(grid) + k];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
          throw std::invalid_argument("SpectralLoop: non-finite coefficient");
        }
        if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z))) {
          throw std::invalid_argument("SpectralLoop: k=0 and k=N/2 coefficients must be real");
        }
        coeffs_[c * half_size(grid) + k] = z.real();
      }
    }
  }

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] std::size_t components() const noexcept { return m_; }
  [[nodiscard]] int nyquist() const noexcept { return grid_.nyquist(); }

  /// Coefficient for any k in {-N/2+1, ..., N/2}.
  [[nodiscard]] cplx coeff(std::size_t c, int k) const {
    if (k > nyquist() || k <= -nyquist()) {
      std::ostringstream msg;
      msg << "SpectralLoop::coeff: wavenumber " << k << " outside (-N/2, N/2]";
      throw std::out_of_range(msg.str());
    }
    const cplx z = coeffs_[c * half_size(grid_) + static_cast<std::size_t>(std::abs(k))];
    return k >= 0 ? z : std::conj(z);
  }

  /// Mutable access for k = 0..N/2.
  cplx& at(std::size_t c, std::size_t k) noexcept { return coeffs_[c * half_size(grid_) + k]; }
  [[nodiscard]] cplx at(std::size_t c, std::size_t k) const noexcept {
    return coeffs_[c * half_size(grid_) + k];
  }

  [[nodiscard]] std::span<cplx> half(std::size_t c) noexcept {
    return {coeffs_.data() + c * half_size(grid_), half_size(grid_)};
  }
  [[nodiscard]] std::span<const cplx> half(std::size_t c) const noexcept {
    return {coeffs_.data() + c * half_size(grid_), half_size(grid_)};
  }

  /// sum over the full spectrum of |u_k|^2 for component c.
  [[nodiscard]] double energy(std::size_t c) const noexcept {
    const auto nyq = static_cast<std::size_t>(nyquist());
    detail::CompensatedSum acc;
    for (std::size_t k = 0; k <= nyq; ++k) {
      const double w = (k == 0 || k == nyq) ? 1.0 : 2.0;
      acc += w * std::norm(at(c, k));
    }
    return acc.value();
  }

  static std::size_t half_size(const Grid& g) noexcept { return g.size() / 2 + 1; }

 private:
  Grid grid_;
  std::size_t m_;
  std::vector<cplx> coeffs_;
};

namespace detail {

// FFTW planning is not thread-safe, execution with the new-array interface
// is. Plans are created once per N under a lock and reused.
class FftPlanCache {
 public:
  struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
  };

  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  Plans get(std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(n);
    std::vector<cplx> spec(n / 2 + 1);
    auto* rp = real.data();
    auto* cp = reinterpret_cast<fftw_complex*>(spec.data());
    const int ni = static_cast<int>(n);
    Plans p;
    p.forward = fftw_plan_dft_r2c_1d(ni, rp, cp, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.backward = fftw_plan_dft_c2r_1d(ni, cp, rp, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p.forward == nullptr || p.backward == nullptr) {
      throw std::runtime_error("FFTW plan creation failed");
    }
    plans_.emplace(n, p);
    return p;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

  ~FftPlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

 private:
  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<std::size_t, Plans> plans_;
};

}  // namespace detail

inline SpectralLoop dft(const LoopSample& ls) {
  ls.require_finite("dft");
  const Grid g = ls.grid();
  const std::size_t n = g.size();
  const auto plans = detail::FftPlanCache::instance().get(n);
  SpectralLoop out(g, ls.components());
  std::vector<double> in(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < ls.components(); ++c) {
    auto src = ls.component(c);
    std::copy(src.begin(), src.end(), in.begin());
    auto dst = out.half(c);
    fftw_execute_dft_r2c(plans.forward, in.data(), reinterpret_cast<fftw_complex*>(dst.data()));
    for (cplx& z : dst) z *= inv_n;
    dst.front() = dst.front().real();
    dst.back() = dst.back().real();
  }
  return out;
}

inline LoopSample idft(const SpectralLoop& sl) {
  const Grid g = sl.grid();
  const std::size_t n = g.size();
  const auto plans = detail::FftPlanCache::instance().get(n);
  LoopSample out(g, sl.components());
  // c2r overwrites its input.
  std::vector<cplx> scratch(SpectralLoop::half_size(g));
  for (std::size_t c = 0; c < sl.components(); ++c) {
    auto src = sl.half(c);
    std::copy(src.begin(), src.end(), scratch.begin());
    fftw_execute_dft_c2r(plans.backward, reinterpret_cast<fftw_complex*>(scratch.data()),
                         out.component(c).data());
  }
  out.require_finite("idft");
  return out;
}

enum class ZeroMode { keep, annihilate };

/// Odd symbols (sigma(-k) = -sigma(k) up to conjugation, e.g. ik, -i sgn k)
/// have the Nyquist coefficient zeroed so real input stays real.
enum class Parity { even, odd };

struct Multiplier {
  std::function<cplx(int)> symbol;
  ZeroMode zero_mode = ZeroMode::keep;
  Parity parity = Parity::even;
};

/// Output coefficient at k is sigma(k) u_k. Requires sigma(-k) = conj(sigma(k))
/// on the represented range, since the result must again be a real loop.
inline SpectralLoop apply_multiplier(const SpectralLoop& sl, const Multiplier& mult) {
  if (!mult.symbol) throw std::invalid_argument("apply_multiplier: empty symbol");
  const int nyq = sl.nyquist();
  std::vector<cplx> sigma(static_cast<std::size_t>(nyq) + 1);
  for (int k = 0; k <= nyq; ++k) {
    if (k == 0 && mult.zero_mode == ZeroMode::annihilate) continue;
    if (k == nyq && mult.parity == Parity::odd) continue;
    const cplx s = mult.symbol(k);
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      std::ostringstream msg;
      msg << "apply_multiplier: symbol not finite at k=" << k;
      throw std::invalid_argument(msg.str());
    }
    if (k > 0 && k < nyq) {
      const cplx mirror = mult.symbol(-k);
      if (std::abs(mirror - std::conj(s)) > 1e-13 * std::max(1.0, std::abs(s))) {
        std::ostringstream msg;
        msg << "apply_multiplier: symbol is not Hermitian at k=" << k;
        throw std::invalid_argument(msg.str());
      }
    }
    sigma[static_cast<std::size_t>(k)] = (k == 0 || k == nyq) ? cplx{s.real(), 0.0} : s;
  }
  SpectralLoop out(sl.grid(), sl.components());
  for (std::size_t c = 0; c < sl.components(); ++c) {
    for (std::size_t k = 0; k < sigma.size(); ++k) out.at(c, k) = sigma[k] * sl.at(c, k);
  }
  return out;
}

inline LoopSample apply_multiplier(const LoopSample& ls, const Multiplier& mult) {
  return idft(apply_multiplier(dft(ls), mult));
}

namespace symbols {

/// |k|^s. The zero mode is always annihilated, which makes
/// |D|^a |D|^b = |D|^{a+b} hold exactly on mean-zero loops.
inline Multiplier frac_laplacian(double s) {
  return {[s](int k) { return cplx{std::pow(std::abs(static_cast<double>(k)), s), 0.0}; },
          ZeroMode::annihilate, Parity::even};
}

/// Bessel potential (1 + k^2)^{s/2}.
inline Multiplier bessel(double s) {
  return {[s](int k) {
            const double kk = static_cast<double>(k);
            return cplx{std::pow(1.0 + kk * kk, 0.5 * s), 0.0};
          },
          ZeroMode::keep, Parity::even};
}

/// (ik)^order.
inline Multiplier derivative(int order = 1) {
  if (order < 0) throw std::invalid_argument("derivative: order must be >= 0");
  return {[order](int k) {
            cplx v{1.0, 0.0};
            for (int i = 0; i < order; ++i) v *= cplx{0.0, static_cast<double>(k)};
            return v;
          },
          ZeroMode::keep, order % 2 == 1 ? Parity::odd : Parity::even};
}

/// -i sgn(k).
inline Multiplier hilbert() {
  return {[](int k) { return cplx{0.0, k > 0 ? -1.0 : (k < 0 ? 1.0 : 0.0)}; },
          ZeroMode::annihilate, Parity::odd};
}

/// 1/(ik) on k != 0.
inline Multiplier inverse_derivative() {
  return {[](int k) { return 1.0 / cplx{0.0, static_cast<double>(k)}; }, ZeroMode::annihilate,
          Parity::odd};
}

/// 1/(1 + k^2).
inline Multiplier inv_helmholtz() {
  return {[](int k) {
            const double kk = static_cast<double>(k);
            return cplx{1.0 / (1.0 + kk * kk), 0.0};
          },
          ZeroMode::keep, Parity::even};
}

/// 1 + k^2, the symbol of 1 - d^2/dt^2.
inline Multiplier helmholtz() {
  return {[](int k) {
            const double kk = static_cast<double>(k);
            return cplx{1.0 + kk * kk, 0.0};
          },
          ZeroMode::keep, Parity::even};
}

}  // namespace symbols

/// Zeros every coefficient with |k| > fraction * N/2.
inline SpectralLoop dealias(const SpectralLoop& sl, double fraction = 2.0 / 3.0) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("dealias: fraction must lie in (0, 1]");
  }
  const double cutoff = fraction * static_cast<double>(sl.nyquist());
  SpectralLoop out = sl;
  for (std::size_t c = 0; c < out.components(); ++c) {
    for (std::size_t k = 0; k < SpectralLoop::half_size(out.grid()); ++k) {
      if (static_cast<double>(k) > cutoff) out.at(c, k) = 0.0;
    }
  }
  return out;
}

inline LoopSample dealias(const LoopSample& ls, double fraction = 2.0 / 3.0) {
  return idft(dealias(dft(ls), fraction));
}

/// Largest wavenumber kept by dealias at the given fraction.
inline int dealias_cutoff(const Grid& g, double fraction = 2.0 / 3.0) {
  return static_cast<int>(std::floor(fraction * static_cast<double>(g.nyquist())));
}

inline LoopSample hilbert(const LoopSample& ls) { return apply_multiplier(ls, symbols::hilbert()); }

inline LoopSample inv_dt(const LoopSample& ls) {
  return apply_multiplier(ls, symbols::inverse_derivative());
}

inline LoopSample inv_helmholtz(const LoopSample& ls) {
  return apply_multiplier(ls, symbols::inv_helmholtz());
}

inline LoopSample derivative(const LoopSample& ls, int order = 1) {
  return apply_multiplier(ls, symbols::derivative(order));
}

inline LoopSample frac_laplacian(const LoopSample& ls, double s) {
  return apply_multiplier(ls, symbols::frac_laplacian(s));
}

inline LoopSample bessel(const LoopSample& ls, double s) {
  return apply_multiplier(ls, symbols::bessel(s));
}

}  // namespace sobloop
