#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "stap/error.hpp"
#include "stap/linalg.hpp"

namespace stap {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into the half-open range [-pi, pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= kPi;
  return w >= kPi ? -kPi : w;
}

/// Direction of the vector (x, y) in [-pi, pi). East is 0, north is pi/2.
/// Throws UndefinedDirection for the zero vector.
inline double atan_star(double y, double x) {
  if (x == 0.0 && y == 0.0) throw UndefinedDirection();
  const double a = std::atan2(y, x);
  return a >= kPi ? -kPi : a;
}

inline double atan_star(Vec2 v) { return atan_star(v.y, v.x); }

/// Bearing of `v`, or `prev` for the zero vector.
inline double bearing_or(Vec2 v, double prev) { return (v.x == 0.0 && v.y == 0.0) ? prev : atan_star(v); }

inline Mat2 rotation(double omega) {
  const double c = std::cos(omega);
  const double s = std::sin(omega);
  return {c, -s, s, c};
}

/// Rotation built from a precomputed (cos, sin) pair.
constexpr Mat2 rotation(double c, double s) { return {c, -s, s, c}; }

/// R(omega) v without materializing the matrix.
constexpr Vec2 rotate(double c, double s, Vec2 v) { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
/// R(omega)' v
constexpr Vec2 rotate_back(double c, double s, Vec2 v) { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }

/// Axis-aligned rectangle used as the support of s0 and of missing locations.
struct Domain {
  double xmin = -5.0, xmax = 5.0, ymin = -5.0, ymax = 5.0;

  constexpr bool contains(Vec2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  constexpr double width() const { return xmax - xmin; }
  constexpr double height() const { return ymax - ymin; }
  constexpr double area() const { return width() * height(); }
  constexpr bool valid() const { return xmax > xmin && ymax > ymin; }
};

/// Observed track s_1..s_T, its missing mask, and the parameter s_0.
struct Path {
  std::vector<Vec2> points;
  std::vector<bool> missing;  // empty means nothing missing
  Vec2 s0;
  std::optional<std::vector<double>> timestamps;

  std::size_t size() const { return points.size(); }
  std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
  bool is_missing(std::size_t i) const { return !missing.empty() && missing[i]; }
  std::size_t missing_count() const {
    std::size_t n = 0;
    for (bool m : missing) n += m ? 1 : 0;
    return n;
  }

  void validate() const {
    if (points.size() < 3) throw DataError("path needs at least 3 locations");
    if (!missing.empty() && missing.size() != points.size())
      throw DataError("missing mask length differs from path length");
    if (is_missing(0)) throw DataError("first location of a path cannot be missing");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!is_missing(i) && !(std::isfinite(points[i].x) && std::isfinite(points[i].y)))
        throw DataError("non-finite coordinate at index " + std::to_string(i));
    }
    if (timestamps) {
      const auto& t = *timestamps;
      if (t.size() != points.size()) throw DataError("timestamp count differs from path length");
      const double dt = t.size() > 1 ? t[1] - t[0] : 0.0;
      for (std::size_t i = 1; i < t.size(); ++i) {
        const double gap = t[i] - t[i - 1];
        if (!(gap > 0.0)) throw DataError("timestamps must be strictly increasing");
        if (std::abs(gap - dt) > 1e-9 * std::abs(dt)) throw DataError("timestamps must be equally spaced");
      }
    }
  }
};

/// Bearings of a location sequence. `initial` is phi_0 (from s0 to s1) and
/// `step[i]` is the bearing of s_{i+1} - s_i. A zero-length step inherits the
/// previous bearing; s0 == s1 is an error.
struct Bearings {
  double initial = 0.0;
  std::vector<double> step;

  /// Bearing preceding step i (phi_{i-1}).
  double before(std::size_t i) const { return i == 0 ? initial : step[i - 1]; }
};

inline Bearings compute_bearings(std::span<const Vec2> points, Vec2 s0) {
  Bearings b;
  b.initial = atan_star(points[0] - s0);
  b.step.resize(points.size() > 0 ? points.size() - 1 : 0);
  double prev = b.initial;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Vec2 v = points[i + 1] - points[i];
    prev = (v.x == 0.0 && v.y == 0.0) ? prev : atan_star(v);
    b.step[i] = prev;
  }
  return b;
}

struct MovementMetrics {
  std::vector<Vec2> v;        // displacements
  std::vector<Vec2> y;        // displacements rotated into the previous heading frame
  std::vector<double> r;      // step lengths
  std::vector<double> phi;    // bearings
  std::vector<double> theta;  // turning angles
  double phi0 = 0.0;
};

inline MovementMetrics path_to_metrics(const Path& path) {
  if (path.missing_count() > 0) throw DataError("path_to_metrics requires a fully observed (or imputed) path");
  MovementMetrics m;
  const auto n = path.steps();
  const Bearings b = compute_bearings(path.points, path.s0);
  m.phi0 = b.initial;
  m.v.resize(n);
  m.y.resize(n);
  m.r.resize(n);
  m.phi = b.step;
  m.theta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 v = path.points[i + 1] - path.points[i];
    const double prev = b.before(i);
    const Vec2 y = rotate_back(std::cos(prev), std::sin(prev), v);
    m.v[i] = v;
    m.y[i] = y;
    m.r[i] = norm(v);
    m.theta[i] = (v.x == 0.0 && v.y == 0.0) ? wrap_angle(m.phi[i] - prev) : atan_star(y);
  }
  return m;
}

/// Rebuilds locations from s1, the initial bearing, turning angles and step
/// lengths. s0 is placed one unit behind s1 along phi0.
inline Path metrics_to_path(Vec2 s1, double phi0, std::span<const double> theta, std::span<const double> r) {
  if (theta.size() != r.size()) throw DataError("theta and r must have equal length");
  Path p;
  p.points.reserve(theta.size() + 1);
  p.points.push_back(s1);
  p.s0 = s1 - Vec2{std::cos(phi0), std::sin(phi0)};
  double phi = phi0;
  Vec2 s = s1;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (r[i] < 0.0) throw DataError("step lengths must be nonnegative");
    phi = phi + theta[i];
    s += r[i] * Vec2{std::cos(phi), std::sin(phi)};
    p.points.push_back(s);
  }
  return p;
}

/// Contour {x : (x-center)' shape^{-1} (x-center) = radius_sq} of a bivariate
/// normal holding `level` probability mass.
struct Ellipse {
  Vec2 center;
  Mat2 shape;
  double level = 0.95;
  double radius_sq = 0.0;

  bool contains(Vec2 p) const { return quad_form(shape.inverse(), p - center) <= radius_sq; }

  /// Semi-axis lengths (major first) and orientation of the major axis.
  struct Axes {
    double major = 0.0;
    double minor = 0.0;
    double angle = 0.0;
  };
  Axes axes() const {
    const double tr = shape.trace();
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - shape.det()));
    const double l1 = 0.5 * tr + disc;
    const double l2 = 0.5 * tr - disc;
    double angle;
    if (std::abs(shape.b) > 1e-15) angle = std::atan2(l1 - shape.a, shape.b);
    else angle = shape.a >= shape.d ? 0.0 : kPi / 2.0;
    return {std::sqrt(l1 * radius_sq), std::sqrt(std::max(0.0, l2) * radius_sq), angle};
  }

  std::vector<Vec2> boundary(std::size_t n) const {
    const Mat2 l = cholesky(shape);
    const double rad = std::sqrt(radius_sq);
    std::vector<Vec2> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      out[k] = center + rad * (l * Vec2{std::cos(t), std::sin(t)});
    }
    return out;
  }
};

/// chi-square(2) quantile in closed form, -2 log(1 - level). Levels are
/// decimal fractions, so 1 - level is snapped back to the nearest 1e-12 grid
/// value when it is within round-off; 0.95 then gives -2 log(0.05) exactly.
inline double chi2_2df_quantile(double level) {
  double tail = 1.0 - level;
  const double snapped = std::round(tail * 1e12) / 1e12;
  if (snapped > 0.0 && std::abs(snapped - tail) <= 4.0 * std::numeric_limits<double>::epsilon() * tail) tail = snapped;
  return -2.0 * std::log(tail);
}

inline Ellipse ellipse_contour(Vec2 mean, const Mat2& cov, double level) {
  if (!is_spd(cov)) throw NumericError("ellipse covariance must be symmetric positive definite");
  if (!(level > 0.0 && level < 1.0)) throw NumericError("ellipse level must lie in (0, 1)");
  return {mean, cov, level, chi2_2df_quantile(level)};
}

}  // namespace stap
