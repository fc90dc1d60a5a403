#pragma once

// The step-and-turn-with-attractive-point (STAP) emission: a bivariate normal
// step whose mean blends attraction toward a point with a heading-relative
// drift, and whose covariance rotates with the previous heading.

#include <cmath>
#include <string>

#include "stap/error.hpp"
#include "stap/geometry.hpp"
#include "stap/linalg.hpp"
#include "stap/random.hpp"

namespace stap {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct StapParams {
  Vec2 mu;         // attractor
  Vec2 eta;        // drift in the heading frame
  Mat2 sigma = Mat2::identity();
  double tau = 0.5;  // attraction strength
  double rho = 0.5;  // 0: biased walk, 1: correlated walk

  bool valid() const {
    return is_spd(sigma) && tau > 0.0 && tau < 1.0 && rho >= 0.0 && rho <= 1.0 && std::isfinite(mu.x) &&
           std::isfinite(mu.y) && std::isfinite(eta.x) && std::isfinite(eta.y);
  }
  void validate() const {
    if (!valid()) throw ConfigError("invalid STAP parameters (need SPD sigma, 0<tau<1, 0<=rho<=1)");
  }
  friend bool operator==(const StapParams&, const StapParams&) = default;
};

struct StepMoments {
  Vec2 mean;         // M: expected increment
  Mat2 cov;          // V
  double length;     // |M|
  double direction;  // direction of M; 0 when M is the zero vector
};

/// Per-step quantities that depend only on the emission parameters, cached
/// so that density evaluation is a handful of flops.
struct EmissionCache {
  StapParams params;
  Mat2 sigma_inv;
  double log_norm = 0.0;  // -log(2 pi) - log|Sigma| / 2

  explicit EmissionCache(const StapParams& p)
      : params(p), sigma_inv(p.sigma.inverse()), log_norm(-kLog2Pi - 0.5 * std::log(p.sigma.det())) {}

  /// Mean increment given the current location and (cos, sin) of phi_prev.
  Vec2 mean(Vec2 s, double c, double sn) const {
    const auto& p = params;
    return (1.0 - p.rho) * p.tau * (p.mu - s) + p.rho * rotate(c, sn, p.eta);
  }

  /// Residual d - M rotated by R(rho phi_prev)', i.e. in Sigma's frame.
  Vec2 whitened_residual(Vec2 d, Vec2 s, double phi_prev, double c, double sn) const {
    const Vec2 res = d - mean(s, c, sn);
    const double rho = params.rho;
    if (rho == 0.0) return res;
    if (rho == 1.0) return rotate_back(c, sn, res);
    return rotate_back(std::cos(rho * phi_prev), std::sin(rho * phi_prev), res);
  }

  double logdensity(Vec2 d, Vec2 s, double phi_prev, double c, double sn) const {
    const Vec2 e = whitened_residual(d, s, phi_prev, c, sn);
    return log_norm - 0.5 * quad_form(sigma_inv, e);
  }
};

inline StepMoments stap_moments(const StapParams& p, Vec2 s, double phi_prev) {
  const Vec2 m = (1.0 - p.rho) * p.tau * (p.mu - s) + p.rho * (rotation(phi_prev) * p.eta);
  const Mat2 r = rotation(p.rho * phi_prev);
  const Mat2 v = symmetrized(r * p.sigma * r.transpose());
  const double len = norm(m);
  return {m, v, len, len > 0.0 ? atan_star(m) : 0.0};
}

/// log N(s_next | s + M, V).
inline double stap_logdensity(Vec2 s_next, Vec2 s, double phi_prev, const StapParams& p) {
  const EmissionCache cache(p);
  return cache.logdensity(s_next - s, s, phi_prev, std::cos(phi_prev), std::sin(phi_prev));
}

/// Density of the polar step (r, phi) from s: the coordinate density at
/// s + r (cos phi, sin phi) times the Jacobian r.
inline double metric_loglik(double r, double phi, Vec2 s, double phi_prev, const StapParams& p) {
  if (!(r > 0.0)) throw DataError("metric likelihood needs a positive step length, got " + std::to_string(r));
  const Vec2 next = s + r * Vec2{std::cos(phi), std::sin(phi)};
  return stap_logdensity(next, s, phi_prev, p) + std::log(r);
}

template <class Engine>
Vec2 sample_step(Engine& rng, const StapParams& p, Vec2 s, double phi_prev) {
  const StepMoments m = stap_moments(p, s, phi_prev);
  // R(rho phi) L z has covariance V without refactorizing V.
  const Mat2 l = cholesky(p.sigma);
  const Vec2 z{std_normal(rng), std_normal(rng)};
  const Vec2 noise = rotation(p.rho * phi_prev) * (l * z);
  return s + m.mean + noise;
}

}  // namespace stap
