#pragma once

#include <cmath>

namespace stap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double k) { x *= k; y *= k; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double k) { return {k * a.x, k * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
  static constexpr Mat2 sym(double s11, double s12, double s22) { return {s11, s12, s12, s22}; }

  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }
  constexpr Mat2 transpose() const { return {a, c, b, d}; }
  // Caller guarantees det() != 0.
  constexpr Mat2 inverse() const {
    const double k = 1.0 / det();
    return {d * k, -b * k, -c * k, a * k};
  }

  constexpr Mat2& operator+=(const Mat2& o) { a += o.a; b += o.b; c += o.c; d += o.d; return *this; }
  friend constexpr Mat2 operator+(Mat2 x, const Mat2& y) { return x += y; }
  friend constexpr Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
  }
  friend constexpr Mat2 operator*(double k, const Mat2& m) { return {k * m.a, k * m.b, k * m.c, k * m.d}; }
  friend constexpr Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }
  friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Mat2 outer(Vec2 u, Vec2 v) { return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y}; }

// v' M v
constexpr double quad_form(const Mat2& m, Vec2 v) {
  return v.x * (m.a * v.x + m.b * v.y) + v.y * (m.c * v.x + m.d * v.y);
}

inline bool is_spd(const Mat2& m, double sym_tol = 1e-9) {
  if (!std::isfinite(m.a) || !std::isfinite(m.b) || !std::isfinite(m.c) || !std::isfinite(m.d)) return false;
  if (std::abs(m.b - m.c) > sym_tol * (1.0 + std::abs(m.b))) return false;
  return m.a > 0.0 && m.det() > 0.0;
}

// Lower Cholesky factor [[l11, 0], [l21, l22]] of an SPD matrix.
inline Mat2 cholesky(const Mat2& m) {
  const double l11 = std::sqrt(m.a);
  const double l21 = m.c / l11;
  const double l22 = std::sqrt(m.d - l21 * l21);
  return {l11, 0.0, l21, l22};
}

// Symmetrize to suppress round-off asymmetry after products.
constexpr Mat2 symmetrized(const Mat2& m) {
  const double off = 0.5 * (m.b + m.c);
  return {m.a, off, off, m.d};
}

}  // namespace stap
