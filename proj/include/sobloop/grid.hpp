#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sobloop/detail/summation.hpp"

namespace sobloop {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Raised when an operation needs more smoothness than the regularity tag
/// of its input carries.
class RegularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Uniform periodic grid t_j = 2*pi*j/N on the circle, N even and N >= 8.
class Grid {
 public:
  explicit Grid(std::size_t n_points) : n_(n_points) {
    if (n_points < 8 || n_points % 2 != 0) {
      std::ostringstream msg;
      msg << "Grid: N must be an even integer >= 8 (got " << n_points << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] double spacing() const noexcept { return two_pi / static_cast<double>(n_); }
  [[nodiscard]] double node(std::size_t j) const noexcept {
    return two_pi * static_cast<double>(j) / static_cast<double>(n_);
  }
  /// Largest represented wavenumber, N/2.
  [[nodiscard]] int nyquist() const noexcept { return static_cast<int>(n_ / 2); }

  [[nodiscard]] std::vector<double> nodes() const {
    std::vector<double> t(n_);
    for (std::size_t j = 0; j < n_; ++j) t[j] = node(j);
    return t;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_;
};

/// N samples of an R^m-valued loop. Storage is component-major: the N values
/// of component c are contiguous.
class LoopSample {
 public:
  LoopSample(Grid grid, std::size_t components)
      : grid_(grid), m_(components), values_(grid.size() * components, 0.0) {
    if (components == 0) throw std::invalid_argument("LoopSample: component count must be >= 1");
  }

  LoopSample(Grid grid, std::size_t components, std::vector<double> values)
      : grid_(grid), m_(components), values_(std::move(values)) {
    if (components == 0) throw std::invalid_argument("LoopSample: component count must be >= 1");
    if (values_.size() != grid.size() * components) {
      throw std::invalid_argument("LoopSample: value count does not match N*m");
    }
    require_finite("LoopSample");
  }

  /// Samples f(t) on the grid; f returns the m components at node t.
  template <typename F>
  static LoopSample from_function(Grid grid, std::size_t components, F&& f) {
    LoopSample out(grid, components);
    std::vector<double> point(components);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      f(grid.node(j), std::span<double>(point));
      for (std::size_t c = 0; c < components; ++c) out(j, c) = point[c];
    }
    out.require_finite("LoopSample::from_function");
    return out;
  }

  template <typename F>
  static LoopSample from_scalar(Grid grid, F&& f) {
    LoopSample out(grid, 1);
    for (std::size_t j = 0; j < grid.size(); ++j) out(j, 0) = f(grid.node(j));
    out.require_finite("LoopSample::from_scalar");
    return out;
  }

  static LoopSample constant(Grid grid, std::span<const double> value) {
    LoopSample out(grid, value.size());
    for (std::size_t c = 0; c < value.size(); ++c)
      for (std::size_t j = 0; j < grid.size(); ++j) out(j, c) = value[c];
    return out;
  }

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] std::size_t size() const noexcept { return grid_.size(); }
  [[nodiscard]] std::size_t components() const noexcept { return m_; }

  double& operator()(std::size_t j, std::size_t c) noexcept { return values_[c * grid_.size() + j]; }
  double operator()(std::size_t j, std::size_t c) const noexcept {
    return values_[c * grid_.size() + j];
  }

  [[nodiscard]] std::span<double> component(std::size_t c) noexcept {
    return {values_.data() + c * grid_.size(), grid_.size()};
  }
  [[nodiscard]] std::span<const double> component(std::size_t c) const noexcept {
    return {values_.data() + c * grid_.size(), grid_.size()};
  }

  [[nodiscard]] std::span<double> data() noexcept { return values_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return values_; }

  /// Copies the m components at node j into out.
  void point(std::size_t j, std::span<double> out) const noexcept {
    for (std::size_t c = 0; c < m_; ++c) out[c] = (*this)(j, c);
  }

  /// Known Sobolev regularity of the data, set by the random sampler.
  /// Unset means smooth (or unknown) grid data.
  [[nodiscard]] std::optional<double> regularity() const noexcept { return regularity_; }
  void set_regularity(std::optional<double> sigma) noexcept { regularity_ = sigma; }

  [[nodiscard]] bool all_finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void require_finite(const char* where) const {
    for (std::size_t c = 0; c < m_; ++c) {
      for (std::size_t j = 0; j < grid_.size(); ++j) {
        if (!std::isfinite((*this)(j, c))) {
          std::ostringstream msg;
          msg << where << ": non-finite value at node " << j << ", component " << c;
          throw std::invalid_argument(msg.str());
        }
      }
    }
  }

  LoopSample& operator+=(const LoopSample& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  LoopSample& operator-=(const LoopSample& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  LoopSample& operator*=(double a) noexcept {
    for (double& v : values_) v *= a;
    return *this;
  }

  friend LoopSample operator+(LoopSample a, const LoopSample& b) { return a += b; }
  friend LoopSample operator-(LoopSample a, const LoopSample& b) { return a -= b; }
  friend LoopSample operator*(double s, LoopSample a) { return a *= s; }
  friend LoopSample operator*(LoopSample a, double s) { return a *= s; }
  friend LoopSample operator-(LoopSample a) { return a *= -1.0; }

  void require_same_shape(const LoopSample& o) const {
    if (!(grid_ == o.grid_) || m_ != o.m_) {
      throw std::invalid_argument("LoopSample: grid or component count mismatch");
    }
  }

 private:
  Grid grid_;
  std::size_t m_;
  std::vector<double> values_;
  std::optional<double> regularity_;
};

/// Pointwise product of two scalar loops, or of a scalar loop with every
/// component of a vector loop.
inline LoopSample pointwise_product(const LoopSample& a, const LoopSample& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("pointwise_product: grid mismatch");
  if (a.components() == b.components()) {
    LoopSample out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] *= b.data()[i];
    return out;
  }
  const LoopSample& scalar = a.components() == 1 ? a : b;
  const LoopSample& vec = a.components() == 1 ? b : a;
  if (scalar.components() != 1) {
    throw std::invalid_argument("pointwise_product: incompatible component counts");
  }
  LoopSample out = vec;
  for (std::size_t c = 0; c < out.components(); ++c)
    for (std::size_t j = 0; j < out.size(); ++j) out(j, c) *= scalar(j, 0);
  return out;
}

/// Extracts component c as a scalar loop.
inline LoopSample component_loop(const LoopSample& a, std::size_t c) {
  LoopSample out(a.grid(), 1);
  for (std::size_t j = 0; j < a.size(); ++j) out(j, 0) = a(j, c);
  return out;
}

/// Mean of each component, (1/N) sum_j x_j.
inline std::vector<double> mean(const LoopSample& a) {
  std::vector<double> out(a.components());
  for (std::size_t c = 0; c < a.components(); ++c) {
    detail::CompensatedSum acc;
    for (double v : a.component(c)) acc += v;
    out[c] = acc.value() / static_cast<double>(a.size());
  }
  return out;
}

inline double max_abs(const LoopSample& a) noexcept {
  double out = 0.0;
  for (double v : a.data()) out = std::max(out, std::abs(v));
  return out;
}

inline double max_abs_difference(const LoopSample& a, const LoopSample& b) {
  a.require_same_shape(b);
  double out = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    out = std::max(out, std::abs(a.data()[i] - b.data()[i]));
  return out;
}

}  // namespace sobloop
