#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "stap/emission.hpp"
#include "stap/error.hpp"
#include "stap/geometry.hpp"
#include "stap/random.hpp"

namespace stap {

/// Mixture weights of the rho prior: atom at 0, atom at 1, uniform on (0,1).
struct RhoWeights {
  double w0 = 1.0 / 3.0;
  double w1 = 1.0 / 3.0;
  double w01 = 1.0 / 3.0;

  bool valid() const {
    return w0 >= 0.0 && w1 >= 0.0 && w01 >= 0.0 && std::abs(w0 + w1 + w01 - 1.0) < 1e-9;
  }
  /// Log prior mass (atoms) or density (interior) with respect to
  /// counting measure on {0,1} plus Lebesgue measure on (0,1).
  double log_mass(double rho) const {
    const double w = rho == 0.0 ? w0 : rho == 1.0 ? w1 : (rho > 0.0 && rho < 1.0 ? w01 : 0.0);
    return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
  }
};

struct PriorConfig {
  Vec2 B_mu{0.0, 0.0};
  Mat2 W_mu = Mat2::diag(1000.0, 1000.0);
  Vec2 B_eta{0.0, 0.0};
  Mat2 W_eta = Mat2::diag(1000.0, 1000.0);
  double a_sigma = 3.0;
  Mat2 C_sigma = Mat2::identity();
  RhoWeights rho_weights;
  double a1 = 0.1, b1 = 1.0;   // alpha + kappa ~ Gamma(a1, b1)
  double a2 = 10.0, b2 = 1.0;  // kappa / (alpha + kappa) ~ Beta(a2, b2)
  double a3 = 0.1, b3 = 1.0;   // gamma ~ Gamma(a3, b3)
  Domain domain;
  int L = 200;
  double mh_c = 0.1;
  double mh_s0_sd = 1.0;  // 0.1 x default domain width

  void validate() const {
    if (!is_spd(W_mu) || !is_spd(W_eta)) throw ConfigError("W_mu and W_eta must be SPD");
    if (!is_spd(C_sigma)) throw ConfigError("C_sigma must be SPD");
    if (!(a_sigma > 1.0)) throw ConfigError("a_sigma must exceed dimension - 1 = 1");
    if (!rho_weights.valid()) throw ConfigError("rho weights must be nonnegative and sum to 1");
    if (!(a1 > 0 && b1 > 0 && a2 > 0 && b2 > 0 && a3 > 0 && b3 > 0))
      throw ConfigError("hyperprior shapes and rates must be positive");
    if (!domain.valid()) throw ConfigError("domain must have xmax > xmin and ymax > ymin");
    if (L < 2) throw ConfigError("truncation level L must be at least 2");
    if (!(mh_c > 0.0)) throw ConfigError("mh_c must be positive");
    if (!(mh_s0_sd > 0.0)) throw ConfigError("mh_s0_sd must be positive");
  }
};

/// CDF of the mixed-type rho prior.
inline double rho_prior_cdf(double d, const RhoWeights& w) {
  if (d < 0.0) return 0.0;
  if (d == 0.0) return w.w0;
  if (d < 1.0) return w.w0 + w.w01 * d;
  return 1.0;
}

template <class Engine>
double sample_rho_prior(Engine& rng, const RhoWeights& w) {
  const double u = uniform01(rng);
  if (u < w.w0) return 0.0;
  if (u < w.w0 + w.w1) return 1.0;
  // Interior part; a fresh uniform keeps the continuous draw independent of u.
  return uniform01(rng);
}

template <class Engine>
StapParams sample_stap_prior(Engine& rng, const PriorConfig& cfg) {
  StapParams p;
  p.mu = mvnormal(rng, cfg.B_mu, cfg.W_mu);
  p.eta = mvnormal(rng, cfg.B_eta, cfg.W_eta);
  p.sigma = inverse_wishart(rng, cfg.a_sigma, cfg.C_sigma);
  p.tau = uniform01(rng);
  p.rho = sample_rho_prior(rng, cfg.rho_weights);
  return p;
}

struct HdpHyper {
  double alpha = 1.0;
  double kappa = 0.0;
  double gamma = 1.0;
};

template <class Engine>
HdpHyper sample_hdp_hyper_prior(Engine& rng, const PriorConfig& cfg) {
  const double total = gamma(rng, cfg.a1, cfg.b1);
  const double frac = beta(rng, cfg.a2, cfg.b2);
  const double g = gamma(rng, cfg.a3, cfg.b3);
  return {total * (1.0 - frac), total * frac, g};
}

}  // namespace stap
