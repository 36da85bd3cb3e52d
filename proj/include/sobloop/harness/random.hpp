#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "sobloop/poisson.hpp"

namespace sobloop::harness {

/// Trigonometric polynomial with modes 1..K, coefficients N(0,1)/k^2, plus
/// an N(0,1) mean when with_mean is set.
inline LoopSample random_smooth_loop(const Grid& grid, std::size_t m, std::mt19937_64& rng,
                                     int modes = 6, bool with_mean = false, double amplitude = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SpectralLoop sl(grid, m);
  for (std::size_t c = 0; c < m; ++c) {
    if (with_mean) sl.at(c, 0) = amplitude * normal(rng);
    for (int k = 1; k <= modes; ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      sl.at(c, static_cast<std::size_t>(k)) = amplitude * cplx{re, im} / (2.0 * k * k);
    }
  }
  return idft(sl);
}

/// int f(gamma) dt with f(x) = sum_r a_r sin(<w_r, x> + phi_r), analytic
/// gradient and Hessian.
inline Functional random_density_functional(std::size_t m, std::mt19937_64& rng, int terms = 3,
                                            const std::string& name = "F") {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, two_pi);
  std::vector<double> amp(static_cast<std::size_t>(terms));
  std::vector<double> phi(static_cast<std::size_t>(terms));
  std::vector<double> freq(static_cast<std::size_t>(terms) * m);
  for (int r = 0; r < terms; ++r) {
    amp[static_cast<std::size_t>(r)] = normal(rng);
    phi[static_cast<std::size_t>(r)] = phase(rng);
    for (std::size_t c = 0; c < m; ++c) freq[static_cast<std::size_t>(r) * m + c] = normal(rng);
  }
  auto arg = [freq, phi, m](std::span<const double> x, std::size_t r) {
    double a = phi[r];
    for (std::size_t c = 0; c < m; ++c) a += freq[r * m + c] * x[c];
    return a;
  };
  const auto nterms = static_cast<std::size_t>(terms);
  return Functional::from_density(
      name, m,
      [amp, arg, nterms](std::span<const double> x) {
        double v = 0.0;
        for (std::size_t r = 0; r < nterms; ++r) v += amp[r] * std::sin(arg(x, r));
        return v;
      },
      [amp, arg, freq, nterms, m](std::span<const double> x, std::span<double> g) {
        for (std::size_t c = 0; c < m; ++c) g[c] = 0.0;
        for (std::size_t r = 0; r < nterms; ++r) {
          const double w = amp[r] * std::cos(arg(x, r));
          for (std::size_t c = 0; c < m; ++c) g[c] += w * freq[r * m + c];
        }
      },
      [amp, arg, freq, nterms, m](std::span<const double> x, std::span<double> h) {
        for (std::size_t i = 0; i < m * m; ++i) h[i] = 0.0;
        for (std::size_t r = 0; r < nterms; ++r) {
          const double w = -amp[r] * std::sin(arg(x, r));
          for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) h[a * m + b] += w * freq[r * m + a] * freq[r * m + b];
        }
      });
}

}  // namespace sobloop::harness
