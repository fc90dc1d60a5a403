#pragma once

// Closed-form full conditionals of the per-behaviour emission parameters.
// Each function sees only the steps currently assigned to the behaviour.

#include <cmath>
#include <optional>
#include <span>

#include "stap/emission.hpp"
#include "stap/linalg.hpp"
#include "stap/priors.hpp"

namespace stap {

/// Everything a single step contributes to the emission likelihood.
struct StepGeometry {
  Vec2 s;               // s_i
  Vec2 d;               // s_{i+1} - s_i
  double phi_prev = 0;  // phi_{i-1}
  double c = 1.0;       // cos(phi_prev)
  double sn = 0.0;      // sin(phi_prev)
};

struct Gaussian2 {
  Vec2 mean;
  Mat2 cov;
};

struct ScalarGaussian {
  double mean = 0.0;
  double var = 0.0;
};

struct InverseWishartParams {
  double dof = 0.0;
  Mat2 scale;
};

namespace detail {

// V^{-1} = R(rho phi) Sigma^{-1} R(rho phi)'
inline Mat2 rotated_precision(const Mat2& sigma_inv, double rho, const StepGeometry& g) {
  if (rho == 0.0) return sigma_inv;
  const double c = rho == 1.0 ? g.c : std::cos(rho * g.phi_prev);
  const double s = rho == 1.0 ? g.sn : std::sin(rho * g.phi_prev);
  const Mat2 r = rotation(c, s);
  return r * sigma_inv * r.transpose();
}

}  // namespace detail

inline Gaussian2 mu_conditional(const StapParams& p, std::span<const StepGeometry> steps,
                                std::span<const std::size_t> members, const PriorConfig& prior) {
  const Mat2 prior_prec = prior.W_mu.inverse();
  const double k = (1.0 - p.rho) * p.tau;
  Mat2 prec = prior_prec;
  Vec2 h = prior_prec * prior.B_mu;
  if (k != 0.0) {
    const Mat2 sigma_inv = p.sigma.inverse();
    Mat2 acc{};
    Vec2 hacc{};
    for (std::size_t i : members) {
      const auto& g = steps[i];
      const Mat2 vinv = detail::rotated_precision(sigma_inv, p.rho, g);
      const Vec2 target = g.d + k * g.s - p.rho * rotate(g.c, g.sn, p.eta);
      acc += vinv;
      hacc += vinv * target;
    }
    prec += (k * k) * acc;
    h += k * hacc;
  }
  const Mat2 cov = symmetrized(prec.inverse());
  return {cov * h, cov};
}

inline Gaussian2 eta_conditional(const StapParams& p, std::span<const StepGeometry> steps,
                                 std::span<const std::size_t> members, const PriorConfig& prior) {
  const Mat2 prior_prec = prior.W_eta.inverse();
  Mat2 prec = prior_prec;
  Vec2 h = prior_prec * prior.B_eta;
  if (p.rho != 0.0) {
    const Mat2 sigma_inv = p.sigma.inverse();
    const double k = (1.0 - p.rho) * p.tau;
    Mat2 acc{};
    Vec2 hacc{};
    for (std::size_t i : members) {
      const auto& g = steps[i];
      const Mat2 vinv = detail::rotated_precision(sigma_inv, p.rho, g);
      const Mat2 r = rotation(g.c, g.sn);
      const Mat2 rt_vinv = r.transpose() * vinv;
      acc += rt_vinv * r;
      hacc += rt_vinv * (g.d - k * (p.mu - g.s));
    }
    prec += (p.rho * p.rho) * acc;
    h += p.rho * hacc;
  }
  const Mat2 cov = symmetrized(prec.inverse());
  return {cov * h, cov};
}

/// Untruncated normal kernel of tau's conditional; nullopt when the
/// likelihood does not involve tau (no steps, or rho = 1).
inline std::optional<ScalarGaussian> tau_conditional(const StapParams& p, std::span<const StepGeometry> steps,
                                                     std::span<const std::size_t> members) {
  if (members.empty() || p.rho == 1.0) return std::nullopt;
  const Mat2 sigma_inv = p.sigma.inverse();
  double prec = 0.0;
  double h = 0.0;
  for (std::size_t i : members) {
    const auto& g = steps[i];
    const Mat2 vinv = detail::rotated_precision(sigma_inv, p.rho, g);
    const Vec2 u = p.mu - g.s;
    const Vec2 target = g.d - p.rho * rotate(g.c, g.sn, p.eta);
    prec += quad_form(vinv, u);
    h += dot(u, vinv * target);
  }
  const double k = 1.0 - p.rho;
  prec *= k * k;
  h *= k;
  if (!(prec > 0.0)) return std::nullopt;
  return ScalarGaussian{h / prec, 1.0 / prec};
}

inline InverseWishartParams sigma_conditional(const StapParams& p, std::span<const StepGeometry> steps,
                                              std::span<const std::size_t> members, const PriorConfig& prior) {
  const EmissionCache cache(p);
  Mat2 scale = prior.C_sigma;
  for (std::size_t i : members) {
    const auto& g = steps[i];
    const Vec2 e = cache.whitened_residual(g.d, g.s, g.phi_prev, g.c, g.sn);
    scale += outer(e, e);
  }
  return {prior.a_sigma + static_cast<double>(members.size()), symmetrized(scale)};
}

/// Sum of emission log-densities over the given steps.
inline double members_loglik(const StapParams& p, std::span<const StepGeometry> steps,
                             std::span<const std::size_t> members) {
  const EmissionCache cache(p);
  double ll = 0.0;
  for (std::size_t i : members) {
    const auto& g = steps[i];
    ll += cache.logdensity(g.d, g.s, g.phi_prev, g.c, g.sn);
  }
  return ll;
}

}  // namespace stap
