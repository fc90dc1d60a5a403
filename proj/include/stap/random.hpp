#pragma once

// Random variate generators. Every sampler takes a caller-owned 64-bit
// engine, so draws are reproducible given the engine state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "stap/geometry.hpp"
#include "stap/linalg.hpp"

namespace stap {

using Rng = std::mt19937_64;

/// Uniform on the open interval (0, 1).
template <class Engine>
double uniform01(Engine& rng) {
  static_assert(Engine::max() - Engine::min() == std::numeric_limits<std::uint64_t>::max(),
                "uniform01 expects a 64-bit engine");
  return (static_cast<double>((rng() - Engine::min()) >> 11) + 0.5) * 0x1.0p-53;
}

template <class Engine>
double uniform(Engine& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

template <class Engine>
bool bernoulli(Engine& rng, double p) {
  return uniform01(rng) < p;
}

template <class Engine>
double std_normal(Engine& rng) {
  return std::normal_distribution<double>{0.0, 1.0}(rng);
}

template <class Engine>
double normal(Engine& rng, double mean, double sd) {
  return mean + sd * std_normal(rng);
}

/// Log of a Gamma(shape, 1) draw; stays finite for shapes far below one,
/// where the draw itself underflows.
template <class Engine>
double log_gamma_variate(Engine& rng, double shape) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>{shape, 1.0}(rng));
  const double g = std::gamma_distribution<double>{shape + 1.0, 1.0}(rng);
  return std::log(g) + std::log(uniform01(rng)) / shape;
}

/// Gamma with shape/rate parameterization (mean shape / rate).
template <class Engine>
double gamma(Engine& rng, double shape, double rate) {
  return std::exp(log_gamma_variate(rng, shape)) / rate;
}

template <class Engine>
double beta(Engine& rng, double a, double b) {
  const double la = log_gamma_variate(rng, a);
  const double lb = log_gamma_variate(rng, b);
  return 1.0 / (1.0 + std::exp(lb - la));
}

/// Dirichlet draw; nonpositive concentrations get zero weight. At least one
/// concentration must be positive.
template <class Engine>
std::vector<double> dirichlet(Engine& rng, std::span<const double> conc) {
  std::vector<double> out(conc.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < conc.size(); ++k) {
    out[k] = conc[k] > 0.0 ? log_gamma_variate(rng, conc[k]) : -std::numeric_limits<double>::infinity();
    top = std::max(top, out[k]);
  }
  double sum = 0.0;
  for (double& w : out) {
    w = std::exp(w - top);
    sum += w;
  }
  for (double& w : out) w /= sum;
  return out;
}

template <class Engine>
std::int64_t binomial(Engine& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<std::int64_t>{n, p}(rng);
}

/// Number of occupied tables after n customers in a Chinese restaurant with
/// concentration `conc`.
template <class Engine>
std::int64_t crt(Engine& rng, std::int64_t n, double conc) {
  std::int64_t tables = 0;
  for (std::int64_t t = 0; t < n; ++t) tables += bernoulli(rng, conc / (static_cast<double>(t) + conc)) ? 1 : 0;
  return tables;
}

template <class Engine>
Vec2 mvnormal(Engine& rng, Vec2 mean, const Mat2& cov) {
  const Mat2 l = cholesky(cov);
  const double z1 = std_normal(rng);
  const double z2 = std_normal(rng);
  return mean + l * Vec2{z1, z2};
}

/// Inverse-Wishart in dimension 2 with density proportional to
/// |S|^{-(dof+3)/2} exp(-tr(scale S^{-1}) / 2); mean scale / (dof - 3).
template <class Engine>
Mat2 inverse_wishart(Engine& rng, double dof, const Mat2& scale) {
  // S^{-1} ~ Wishart(dof, scale^{-1}) by the Bartlett decomposition.
  const Mat2 l = cholesky(symmetrized(scale.inverse()));
  const double a11 = std::sqrt(2.0 * gamma(rng, 0.5 * dof, 1.0));
  const double a22 = std::sqrt(2.0 * gamma(rng, 0.5 * (dof - 1.0), 1.0));
  const double a21 = std_normal(rng);
  const Mat2 a{a11, 0.0, a21, a22};
  const Mat2 la = l * a;
  const Mat2 w = la * la.transpose();
  return symmetrized(w.inverse());
}

namespace detail {

inline double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }
inline double upper_tail_inv(double q) { return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q); }

// Standard normal truncated to [a, b] with a >= 0.
template <class Engine>
double truncated_std_normal_upper(Engine& rng, double a, double b) {
  const double qa = upper_tail(a);
  const double qb = upper_tail(b);
  if (a < 30.0 && qa - qb > 1e-300) {
    const double q = qa - uniform01(rng) * (qa - qb);
    return std::clamp(upper_tail_inv(q), a, b);
  }
  // Deep tail: truncated exponential proposal with rejection.
  for (;;) {
    const double span = b - a;
    const double e = -std::log1p(-uniform01(rng) * -std::expm1(-a * span)) / a;
    const double x = a + e;
    if (uniform01(rng) <= std::exp(-0.5 * e * e)) return std::min(x, b);
  }
}

}  // namespace detail

/// Normal(mean, sd^2) restricted to [lo, hi], by inverse CDF.
template <class Engine>
double truncated_normal(Engine& rng, double mean, double sd, double lo, double hi) {
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  double x;
  if (a >= 0.0) {
    x = detail::truncated_std_normal_upper(rng, a, b);
  } else if (b <= 0.0) {
    x = -detail::truncated_std_normal_upper(rng, -b, -a);
  } else {
    const double pa = detail::upper_tail(-a);  // Phi(a)
    const double pb = 1.0 - detail::upper_tail(b);
    const double p = pa + uniform01(rng) * (pb - pa);
    x = std::clamp(-detail::upper_tail_inv(p), a, b);
  }
  return std::clamp(mean + sd * x, lo, hi);
}

/// Wrapped Cauchy with mean direction `mu` and mean resultant length `rho`.
template <class Engine>
double wrapped_cauchy(Engine& rng, double mu, double rho) {
  const double scale = -std::log(rho);
  return wrap_angle(mu + scale * std::tan(kPi * (uniform01(rng) - 0.5)));
}

/// Weibull with shape a and scale b.
template <class Engine>
double weibull(Engine& rng, double shape, double scale) {
  return scale * std::pow(-std::log(uniform01(rng)), 1.0 / shape);
}

template <class Engine>
std::size_t categorical(Engine& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  for (std::size_t k = weights.size(); k-- > 0;)
    if (weights[k] > 0.0) return k;
  return 0;
}

}  // namespace stap
