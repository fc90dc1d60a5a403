#pragma once

// Forward simulation: STAP-HMM paths and wrapped-Cauchy correlated walks.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stap/diagnostics.hpp"
#include "stap/draws.hpp"
#include "stap/emission.hpp"
#include "stap/error.hpp"
#include "stap/geometry.hpp"
#include "stap/random.hpp"

namespace stap {

struct SimConfig {
  std::vector<StapParams> params;  // one per behaviour
  std::vector<double> pi;          // K x K row-major
  std::size_t T = 0;               // number of locations
  Vec2 s0{-1.0, 0.0};
  Vec2 s1{0.0, 0.0};
  std::uint64_t seed = 1;

  std::size_t K() const { return params.size(); }

  void validate() const {
    const std::size_t k = K();
    if (k == 0) throw ConfigError("simulation needs at least one behaviour");
    if (pi.size() != k * k) throw ConfigError("transition matrix must be K x K");
    for (std::size_t j = 0; j < k; ++j) {
      double row = 0.0;
      for (std::size_t l = 0; l < k; ++l) {
        if (!(pi[j * k + l] >= 0.0)) throw ConfigError("transition probabilities must be nonnegative");
        row += pi[j * k + l];
      }
      if (std::abs(row - 1.0) > 1e-9) throw ConfigError("row " + std::to_string(j + 1) + " of pi does not sum to 1");
    }
    if (T < 3) throw ConfigError("T must be at least 3");
    if (s0 == s1) throw ConfigError("s0 and s1 must differ");
    // tau = 0 and tau = 1 are allowed here (a pure correlated walk has no
    // attraction to speak of), unlike in the fitted model.
    for (const auto& p : params)
      if (!(is_spd(p.sigma) && p.tau >= 0.0 && p.tau <= 1.0 && p.rho >= 0.0 && p.rho <= 1.0))
        throw ConfigError("invalid STAP parameters in simulation config");
  }
};

struct SimulatedPath {
  Path path;
  std::vector<int> z;  // 0-based state of each step
};

template <class Engine>
SimulatedPath simulate_hmm(Engine& rng, const SimConfig& cfg) {
  cfg.validate();
  const std::size_t K = cfg.K();
  SimulatedPath out;
  out.path.s0 = cfg.s0;
  out.path.points.reserve(cfg.T);
  out.path.points.push_back(cfg.s1);
  out.z.reserve(cfg.T - 1);
  std::size_t state = 0;
  double prev = atan_star(cfg.s1 - cfg.s0);
  for (std::size_t i = 0; i + 1 < cfg.T; ++i) {
    state = categorical(rng, std::span<const double>(cfg.pi.data() + state * K, K));
    out.z.push_back(static_cast<int>(state));
    const Vec2 s = out.path.points.back();
    const Vec2 next = sample_step(rng, cfg.params[state], s, prev);
    prev = bearing_or(next - s, prev);
    out.path.points.push_back(next);
  }
  return out;
}

inline SimulatedPath simulate_hmm(const SimConfig& cfg) {
  Rng rng(cfg.seed);
  return simulate_hmm(rng, cfg);
}

/// Configuration built from posterior means over the modal-K sweeps.
inline SimConfig config_from_posterior(const PosteriorDraws& draws, std::size_t T, std::uint64_t seed) {
  if (draws.empty()) throw DataError("no retained draws");
  const Alignment a = align_labels(draws);
  SimConfig cfg;
  cfg.params = posterior_mean_params(draws, a);
  cfg.pi = posterior_mean_transitions(draws, a);
  cfg.T = T;
  cfg.seed = seed;
  Vec2 s0{};
  for (std::size_t b : a.sweeps) s0 += (1.0 / static_cast<double>(a.sweeps.size())) * draws.records[b].s0;
  cfg.s0 = s0;
  cfg.s1 = {0.0, 0.0};
  return cfg;
}

/// Simulates a path from the posterior means. `s1` is the first location
/// of the fitted path (in model coordinates).
inline SimulatedPath simulate_from_posterior(const PosteriorDraws& draws, std::size_t T, std::uint64_t seed,
                                             Vec2 s1) {
  SimConfig cfg = config_from_posterior(draws, T, seed);
  cfg.s1 = s1;
  if (cfg.s0 == cfg.s1) cfg.s0 = cfg.s1 - Vec2{1.0, 0.0};
  return simulate_hmm(cfg);
}

enum class WrappedCauchyConvention {
  mean_resultant_length,  // eps is the mean resultant length, Cauchy scale -log(eps)
  scale,                  // eps is the Cauchy scale itself
};

struct WcCrwConfig {
  double lambda = 0.0;  // circular mean of the turning angle
  double eps = 0.5;
  double a = 1.0;  // Weibull shape
  double b = 1.0;  // Weibull scale
  std::size_t T_star = 1000;
  std::size_t d = 1;
  std::uint64_t seed = 1;
  WrappedCauchyConvention convention = WrappedCauchyConvention::mean_resultant_length;

  void validate() const {
    if (convention == WrappedCauchyConvention::mean_resultant_length && !(eps > 0.0 && eps < 1.0))
      throw ConfigError("eps must lie in (0, 1)");
    if (convention == WrappedCauchyConvention::scale && !(eps > 0.0))
      throw ConfigError("wrapped-Cauchy scale must be positive");
    if (!(a > 0.0 && b > 0.0)) throw ConfigError("Weibull shape and scale must be positive");
    if (T_star < 3) throw ConfigError("T_star must be at least 3");
    if (d < 1) throw ConfigError("subsampling factor d must be at least 1");
  }
  /// Mean resultant length of the turning-angle distribution.
  double resultant() const { return convention == WrappedCauchyConvention::scale ? std::exp(-eps) : eps; }
};

/// Fine-scale correlated walk with Weibull steps and wrapped-Cauchy turns,
/// started from s0 = (-1, 0), s1 = (0, 0).
template <class Engine>
Path simulate_wc_crw(Engine& rng, const WcCrwConfig& cfg) {
  cfg.validate();
  const double rho = cfg.resultant();
  std::vector<double> theta(cfg.T_star - 1), r(cfg.T_star - 1);
  for (std::size_t i = 0; i + 1 < cfg.T_star; ++i) {
    theta[i] = wrapped_cauchy(rng, cfg.lambda, rho);
    r[i] = weibull(rng, cfg.a, cfg.b);
  }
  return metrics_to_path({0.0, 0.0}, 0.0, theta, r);
}

inline Path simulate_wc_crw(const WcCrwConfig& cfg) {
  Rng rng(cfg.seed);
  return simulate_wc_crw(rng, cfg);
}

/// Keeps s*_d, s*_2d, ... where s*_1 is the first location, i.e. 0-based
/// indices d-1, 2d-1, ... Timestamps and missing flags follow their points;
/// s0 (= s*_0) is kept.
inline Path subsample_path(const Path& path, std::size_t d) {
  if (d < 1) throw ConfigError("subsampling factor d must be at least 1");
  if (d == 1) return path;
  Path out;
  const std::size_t n = path.size() / d;
  out.points.reserve(n);
  if (!path.missing.empty()) out.missing.reserve(n);
  std::vector<double> ts;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t i = k * d - 1;
    out.points.push_back(path.points[i]);
    if (!path.missing.empty()) out.missing.push_back(path.missing[i]);
    if (path.timestamps) ts.push_back((*path.timestamps)[i]);
  }
  if (path.timestamps) out.timestamps = std::move(ts);
  out.s0 = path.s0;
  if (!out.points.empty() && out.s0 == out.points.front()) out.s0 = out.points.front() - Vec2{1.0, 0.0};
  return out;
}

}  // namespace stap
