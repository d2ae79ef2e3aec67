#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace snac {

/// Forward-mode dual number carrying N partial derivatives. Used for the
/// epipolar-distance and projection Jacobians, which are awkward to derive
/// by hand; every use is cross-checked against finite differences in tests.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constants are intended

  static Dual seed(double value, std::size_t slot) {
    Dual x(value);
    x.d[slot] = 1.0;
    return x;
  }

  Dual operator-() const {
    Dual r(-v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r(a.v + b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r(a.v - b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    const double inv2 = 1.0 / (b.v * b.v);
    for (std::size_t i = 0; i < N; ++i)
      r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
    return r;
  }

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }

  friend Dual sqrt(const Dual& a) {
    Dual r(std::sqrt(a.v));
    const double g = 0.5 / r.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = g * a.d[i];
    return r;
  }
  friend Dual sin(const Dual& a) {
    Dual r(std::sin(a.v));
    const double g = std::cos(a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = g * a.d[i];
    return r;
  }
  friend Dual cos(const Dual& a) {
    Dual r(std::cos(a.v));
    const double g = -std::sin(a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = g * a.d[i];
    return r;
  }
};

}  // namespace snac
