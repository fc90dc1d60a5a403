#pragma once

// Weak-limit sticky HDP-HMM with STAP emissions: blocked Gibbs sampler with
// Metropolis steps for rho, missing locations and s0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stap/conditionals.hpp"
#include "stap/draws.hpp"
#include "stap/emission.hpp"
#include "stap/error.hpp"
#include "stap/ffbs.hpp"
#include "stap/geometry.hpp"
#include "stap/priors.hpp"
#include "stap/random.hpp"

namespace stap {

struct SamplerOptions {
  double rho_atom_mass = 0.1;  // proposal mass on each of {0} and {1}
  bool single_state = false;   // pin every step to state 0
  // Initial z: k-means over step features with this many clusters (capped
  // at L). 1 puts every step in state 0.
  std::size_t init_states = 10;
  // Step sd, on the logit scale, of the joint rho/eta/tau move that keeps
  // every step mean fixed. 0 turns the move off.
  double ridge_sd = 1.0;
  std::size_t log_every = 0;   // progress line period on stderr; 0 = silent
  std::ostream* log = &std::cerr;
};

struct HmmState {
  std::vector<int> z;         // state per step, 0-based; the chain starts from state 0
  std::vector<double> pi;     // L x L row-major
  std::vector<double> beta;   // L
  HdpHyper hyper;
  std::vector<StapParams> params;  // L
  Vec2 s0;
  std::vector<Vec2> locations;  // observed points with current imputations

  std::size_t L() const { return params.size(); }
  double transition(std::size_t j, std::size_t k) const { return pi[j * L() + k]; }
};

struct SufficientStats {
  std::size_t L = 0;
  std::vector<std::vector<std::size_t>> members;  // steps assigned to each state
  std::vector<std::int64_t> transitions;          // n_jk, includes the move out of the fixed initial state
  std::vector<std::int64_t> tables;               // m_jk
  std::vector<std::int64_t> overrides;            // w_j
  std::vector<std::int64_t> adjusted;             // m-bar_jk

  std::int64_t n(std::size_t j, std::size_t k) const { return transitions[j * L + k]; }
  std::int64_t row_total(std::size_t j) const {
    std::int64_t t = 0;
    for (std::size_t k = 0; k < L; ++k) t += transitions[j * L + k];
    return t;
  }
};

class StapHmmSampler {
 public:
  StapHmmSampler(Path path, PriorConfig prior, SamplerOptions options = {})
      : path_(std::move(path)), prior_(std::move(prior)), options_(options) {
    path_.validate();
    prior_.validate();
    if (!(options_.rho_atom_mass > 0.0 && options_.rho_atom_mass < 0.5))
      throw ConfigError("rho proposal atom mass must lie in (0, 0.5)");
    for (std::size_t i = 0; i < path_.size(); ++i)
      if (path_.is_missing(i)) missing_index_.push_back(i);
  }

  const Path& path() const { return path_; }
  const PriorConfig& prior() const { return prior_; }
  const HmmState& state() const { return state_; }
  /// Mutable access for tests and custom schedules; call refresh() after
  /// changing locations, s0 or z.
  HmmState& mutable_state() { return state_; }
  const SufficientStats& stats() const { return stats_; }
  const std::vector<StepGeometry>& steps() const { return steps_; }
  const std::vector<std::size_t>& missing_index() const { return missing_index_; }
  const AcceptanceCounts& acceptance() const { return acceptance_; }
  std::size_t L() const { return static_cast<std::size_t>(prior_.L); }
  std::size_t step_count() const { return path_.size() - 1; }

  template <class Engine>
  void initialize(Engine& rng) {
    const std::size_t L = this->L();
    state_.hyper = sample_hdp_hyper_prior(rng, prior_);
    std::vector<double> conc(L, state_.hyper.gamma / static_cast<double>(L));
    state_.beta = dirichlet(rng, std::span<const double>(conc));
    state_.pi.assign(L * L, 0.0);
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t k = 0; k < L; ++k)
        conc[k] = state_.hyper.alpha * state_.beta[k] + (j == k ? state_.hyper.kappa : 0.0);
      const auto row = dirichlet(rng, std::span<const double>(conc));
      std::copy(row.begin(), row.end(), state_.pi.begin() + static_cast<std::ptrdiff_t>(j * L));
    }
    state_.params.resize(L);
    for (auto& p : state_.params) p = sample_stap_prior(rng, prior_);
    state_.z.assign(step_count(), 0);
    state_.locations = path_.points;
    interpolate_missing();
    state_.s0 = initial_s0();
    refresh();
    const std::size_t k0 = options_.single_state ? 1 : std::min(options_.init_states, L);
    if (k0 > 1) state_.z = cluster_steps(rng, k0);
    recount();
    update_emissions(rng);
    // From a spread-out start the prior draws of pi would close off the
    // seeded states straight away, so condition them on z first.
    if (k0 > 1)
      for (int r = 0; r < 5; ++r) update_transitions(rng);
  }

  /// Recomputes step geometry and assignment lists from the current state.
  void refresh() {
    const std::size_t n = step_count();
    steps_.resize(n);
    const auto& loc = state_.locations;
    double prev = atan_star(loc[0] - state_.s0);
    for (std::size_t i = 0; i < n; ++i) {
      set_step(i, prev);
      prev = bearing_or(steps_[i].d, prev);
    }
    recount();
  }

  /// Rebuilds the per-state member lists and transition counts from z.
  void recount() {
    const std::size_t L = this->L();
    stats_.L = L;
    stats_.members.assign(L, {});
    stats_.transitions.assign(L * L, 0);
    std::size_t prev = 0;
    for (std::size_t i = 0; i < state_.z.size(); ++i) {
      const auto j = static_cast<std::size_t>(state_.z[i]);
      stats_.members[j].push_back(i);
      ++stats_.transitions[prev * L + j];
      prev = j;
    }
  }

  /// Row-major (steps x L) matrix of emission log-densities.
  const std::vector<double>& emission_logdensities() {
    const std::size_t L = this->L();
    const std::size_t n = step_count();
    log_emission_.resize(n * L);
    for (std::size_t j = 0; j < L; ++j) {
      const EmissionCache cache(state_.params[j]);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& g = steps_[i];
        log_emission_[i * L + j] = cache.logdensity(g.d, g.s, g.phi_prev, g.c, g.sn);
      }
    }
    return log_emission_;
  }

  template <class Engine>
  void sample_z(Engine& rng) {
    if (options_.single_state) {
      std::fill(state_.z.begin(), state_.z.end(), 0);
    } else {
      const auto& le = emission_logdensities();
      state_.z = ffbs_sample(rng, std::span<const double>(le), L(), std::span<const double>(state_.pi), 0, ffbs_work_);
    }
    recount();
  }

  template <class Engine>
  void update_mu(Engine& rng, std::size_t j) {
    auto& p = state_.params[j];
    const auto& idx = stats_.members[j];
    if (idx.empty()) {
      p.mu = mvnormal(rng, prior_.B_mu, prior_.W_mu);
      return;
    }
    const Gaussian2 g = mu_conditional(p, steps_, idx, prior_);
    p.mu = mvnormal(rng, g.mean, g.cov);
  }

  template <class Engine>
  void update_eta(Engine& rng, std::size_t j) {
    auto& p = state_.params[j];
    const auto& idx = stats_.members[j];
    if (idx.empty()) {
      p.eta = mvnormal(rng, prior_.B_eta, prior_.W_eta);
      return;
    }
    const Gaussian2 g = eta_conditional(p, steps_, idx, prior_);
    p.eta = mvnormal(rng, g.mean, g.cov);
  }

  template <class Engine>
  void update_tau(Engine& rng, std::size_t j) {
    auto& p = state_.params[j];
    const auto g = tau_conditional(p, steps_, stats_.members[j]);
    if (!g) {
      p.tau = uniform01(rng);
      return;
    }
    double t = truncated_normal(rng, g->mean, std::sqrt(g->var), 0.0, 1.0);
    // The support is open; nudge boundary round-off inside.
    if (t <= 0.0) t = std::numeric_limits<double>::min();
    if (t >= 1.0) t = std::nextafter(1.0, 0.0);
    p.tau = t;
  }

  template <class Engine>
  void update_sigma(Engine& rng, std::size_t j) {
    auto& p = state_.params[j];
    const auto cond = sigma_conditional(p, steps_, stats_.members[j], prior_);
    for (int attempt = 0; attempt < 2; ++attempt) {
      const Mat2 s = inverse_wishart(rng, cond.dof, cond.scale);
      if (is_spd(s) && std::isfinite(std::log(s.det()))) {
        p.sigma = s;
        return;
      }
    }
    throw NumericError("inverse-Wishart draw for state " + std::to_string(j) + " is not positive definite");
  }

  /// Metropolis-Hastings step for rho_j; returns whether the proposal was
  /// accepted. Empty states draw from the prior.
  template <class Engine>
  bool update_rho(Engine& rng, std::size_t j) {
    auto& p = state_.params[j];
    const auto& idx = stats_.members[j];
    if (idx.empty()) {
      p.rho = sample_rho_prior(rng, prior_.rho_weights);
      return true;
    }
    const double atom = options_.rho_atom_mass;
    const double c = prior_.mh_c;
    const double cur = p.rho;
    const double u = uniform01(rng);
    double prop;
    if (u < atom) {
      prop = 0.0;
    } else if (u < 2.0 * atom) {
      prop = 1.0;
    } else {
      const double lo = std::max(0.0, cur - c);
      const double hi = std::min(1.0, cur + c);
      prop = uniform(rng, lo, hi);
      if (prop <= 0.0 || prop >= 1.0) {
        ++acceptance_.rho_proposed;
        return false;
      }
    }
    ++acceptance_.rho_proposed;
    const double log_prior_new = prior_.rho_weights.log_mass(prop);
    if (log_prior_new == -std::numeric_limits<double>::infinity()) return false;
    const double log_fwd = rho_proposal_logmass(prop, cur);
    const double log_rev = rho_proposal_logmass(cur, prop);
    if (log_rev == -std::numeric_limits<double>::infinity()) return false;
    StapParams trial = p;
    trial.rho = prop;
    const double ll_new = members_loglik(trial, steps_, idx);
    const double ll_cur = members_loglik(p, steps_, idx);
    const double log_ratio = ll_new + log_prior_new + log_rev - ll_cur - prior_.rho_weights.log_mass(cur) - log_fwd;
    if (std::log(uniform01(rng)) < log_ratio) {
      p.rho = prop;
      ++acceptance_.rho_accepted;
      return true;
    }
    return false;
  }

  /// Joint move along the direction where the step means do not change:
  /// rho' = logistic(logit(rho) + N(0, ridge_sd^2)), eta' = rho eta / rho',
  /// tau' = (1 - rho) tau / (1 - rho'). Only the covariance rotation sees
  /// the difference, so single-parameter updates cross this ridge slowly.
  /// Needs rho in (0, 1) and an occupied state.
  template <class Engine>
  bool update_ridge(Engine& rng, std::size_t j) {
    auto& p = state_.params[j];
    const auto& idx = stats_.members[j];
    const double r = p.rho;
    if (idx.empty() || !(r > 0.0 && r < 1.0) || options_.ridge_sd <= 0.0) return false;
    const double l = std::log(r) - std::log1p(-r) + options_.ridge_sd * std_normal(rng);
    const double r2 = 1.0 / (1.0 + std::exp(-l));
    if (!(r2 > 0.0 && r2 < 1.0)) return false;
    StapParams trial = p;
    trial.rho = r2;
    trial.eta = (r / r2) * p.eta;
    trial.tau = (1.0 - r) * p.tau / (1.0 - r2);
    if (!(trial.tau > 0.0 && trial.tau < 1.0)) return false;
    const Mat2 wi = prior_.W_eta.inverse();
    const double log_prior = prior_.rho_weights.log_mass(r2) - prior_.rho_weights.log_mass(r) -
                             0.5 * quad_form(wi, trial.eta - prior_.B_eta) + 0.5 * quad_form(wi, p.eta - prior_.B_eta);
    // logit walk plus the Jacobian of (eta, tau) -> (eta', tau').
    const double log_jac = std::log(r2 * (1.0 - r2)) - std::log(r * (1.0 - r)) + 2.0 * std::log(r / r2) +
                           std::log((1.0 - r) / (1.0 - r2));
    const double log_ratio =
        members_loglik(trial, steps_, idx) - members_loglik(p, steps_, idx) + log_prior + log_jac;
    if (std::log(uniform01(rng)) < log_ratio) {
      p = trial;
      return true;
    }
    return false;
  }

  /// Log proposal mass/density of moving to `to` from `from`.
  double rho_proposal_logmass(double to, double from) const {
    const double atom = options_.rho_atom_mass;
    if (to == 0.0 || to == 1.0) return std::log(atom);
    const double lo = std::max(0.0, from - prior_.mh_c);
    const double hi = std::min(1.0, from + prior_.mh_c);
    if (!(to > lo && to < hi)) return -std::numeric_limits<double>::infinity();
    return std::log((1.0 - 2.0 * atom) / (hi - lo));
  }

  /// Metropolis step for the k-th missing location, proposing from its
  /// one-step conditional so only downstream terms enter the ratio.
  template <class Engine>
  bool update_missing(Engine& rng, std::size_t k) {
    const std::size_t m = missing_index_.at(k);
    auto& loc = state_.locations;
    const auto& g = steps_[m - 1];
    const StapParams& p = state_.params[static_cast<std::size_t>(state_.z[m - 1])];
    const Vec2 prop = sample_step(rng, p, g.s, g.phi_prev);
    ++acceptance_.missing_proposed;
    if (!prior_.domain.contains(prop)) return false;
    const Vec2 cur = loc[m];
    const double ll_cur = downstream_loglik(m);
    loc[m] = prop;
    const double ll_new = downstream_loglik(m);
    if (std::log(uniform01(rng)) < ll_new - ll_cur) {
      refresh_after_location(m);
      ++acceptance_.missing_accepted;
      return true;
    }
    loc[m] = cur;
    return false;
  }

  /// Random-walk Metropolis step for s0 under its uniform prior on the domain.
  template <class Engine>
  bool update_s0(Engine& rng) {
    const Vec2 prop = state_.s0 + prior_.mh_s0_sd * Vec2{std_normal(rng), std_normal(rng)};
    ++acceptance_.s0_proposed;
    if (!prior_.domain.contains(prop) || prop == state_.locations[0]) return false;
    const double ll_cur = s0_loglik(state_.s0);
    const double ll_new = s0_loglik(prop);
    if (std::log(uniform01(rng)) < ll_new - ll_cur) {
      state_.s0 = prop;
      refresh_after_s0();
      ++acceptance_.s0_accepted;
      return true;
    }
    return false;
  }

  /// Table counts m_jk and override counts w_j given the current beta,
  /// alpha and kappa.
  template <class Engine>
  void sample_auxiliary_tables(Engine& rng) {
    const std::size_t L = this->L();
    const auto& h = state_.hyper;
    const double total = h.alpha + h.kappa;
    const double frac = total > 0.0 ? h.kappa / total : 0.0;
    stats_.tables.assign(L * L, 0);
    stats_.overrides.assign(L, 0);
    stats_.adjusted.assign(L * L, 0);
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t k = 0; k < L; ++k) {
        const std::int64_t n = stats_.transitions[j * L + k];
        if (n == 0) continue;
        const double conc = h.alpha * state_.beta[k] + (j == k ? h.kappa : 0.0);
        stats_.tables[j * L + k] = conc > 0.0 ? crt(rng, n, conc) : 1;
      }
      const std::int64_t mjj = stats_.tables[j * L + j];
      const double denom = frac + state_.beta[j] * (1.0 - frac);
      stats_.overrides[j] = denom > 0.0 ? binomial(rng, mjj, frac / denom) : 0;
    }
    for (std::size_t j = 0; j < L; ++j)
      for (std::size_t k = 0; k < L; ++k)
        stats_.adjusted[j * L + k] = stats_.tables[j * L + k] - (j == k ? stats_.overrides[j] : 0);
  }

  /// alpha + kappa and kappa / (alpha + kappa) given the table counts.
  template <class Engine>
  void update_concentrations(Engine& rng) {
    const std::size_t L = this->L();
    auto& h = state_.hyper;
    const double total = h.alpha + h.kappa;
    std::int64_t m_all = 0, w_all = 0;
    for (auto m : stats_.tables) m_all += m;
    for (auto w : stats_.overrides) w_all += w;
    double sum_log_r = 0.0;
    std::int64_t sum_s = 0;
    for (std::size_t j = 0; j < L; ++j) {
      const std::int64_t nj = stats_.row_total(j);
      if (nj == 0) continue;
      sum_log_r += std::log(beta(rng, total + 1.0, static_cast<double>(nj)));
      sum_s += bernoulli(rng, static_cast<double>(nj) / (static_cast<double>(nj) + total)) ? 1 : 0;
    }
    const double new_total =
        gamma(rng, prior_.a1 + static_cast<double>(m_all - sum_s), prior_.b1 - sum_log_r);
    const double frac = beta(rng, prior_.a2 + static_cast<double>(w_all), prior_.b2 + static_cast<double>(m_all - w_all));
    h.alpha = new_total * (1.0 - frac);
    h.kappa = new_total * frac;
  }

  /// gamma given the adjusted table counts with beta integrated out. Under
  /// the weak limit the number of dish-level tables t_k ~ CRT(m-bar_k, gamma/L)
  /// plays the role that the count of used dishes plays for the untruncated
  /// process.
  template <class Engine>
  void update_gamma(Engine& rng) {
    const std::size_t L = this->L();
    auto& h = state_.hyper;
    std::int64_t m_all = 0;
    std::int64_t t_all = 0;
    const double conc = h.gamma / static_cast<double>(L);
    for (std::size_t k = 0; k < L; ++k) {
      std::int64_t mk = 0;
      for (std::size_t j = 0; j < L; ++j) mk += stats_.adjusted[j * L + k];
      m_all += mk;
      t_all += crt(rng, mk, conc);
    }
    if (m_all == 0) {
      h.gamma = gamma(rng, prior_.a3, prior_.b3);
      return;
    }
    const double eta = beta(rng, h.gamma + 1.0, static_cast<double>(m_all));
    const double rate = prior_.b3 - std::log(eta);
    const double shape = prior_.a3 + static_cast<double>(t_all);
    const double odds = (shape - 1.0) / (static_cast<double>(m_all) * rate);
    const bool upper = bernoulli(rng, odds / (1.0 + odds));
    h.gamma = gamma(rng, upper ? shape : shape - 1.0, rate);
  }

  template <class Engine>
  void update_beta(Engine& rng) {
    const std::size_t L = this->L();
    std::vector<double> conc(L, state_.hyper.gamma / static_cast<double>(L));
    for (std::size_t j = 0; j < L; ++j)
      for (std::size_t k = 0; k < L; ++k) conc[k] += static_cast<double>(stats_.adjusted[j * L + k]);
    state_.beta = dirichlet(rng, std::span<const double>(conc));
  }

  template <class Engine>
  void update_pi(Engine& rng) {
    const std::size_t L = this->L();
    const auto& h = state_.hyper;
    std::vector<double> conc(L);
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t k = 0; k < L; ++k)
        conc[k] = h.alpha * state_.beta[k] + (j == k ? h.kappa : 0.0) +
                  static_cast<double>(stats_.transitions[j * L + k]);
      const auto row = dirichlet(rng, std::span<const double>(conc));
      std::copy(row.begin(), row.end(), state_.pi.begin() + static_cast<std::ptrdiff_t>(j * L));
    }
  }

  /// Transition block: auxiliary tables, concentrations, gamma, beta, pi.
  template <class Engine>
  void update_transitions(Engine& rng) {
    sample_auxiliary_tables(rng);
    update_concentrations(rng);
    update_gamma(rng);
    update_beta(rng);
    update_pi(rng);
  }

  template <class Engine>
  void update_emissions(Engine& rng) {
    for (std::size_t j = 0; j < L(); ++j) {
      update_mu(rng, j);
      update_eta(rng, j);
      update_tau(rng, j);
      update_sigma(rng, j);
      update_rho(rng, j);
      update_ridge(rng, j);
    }
  }

  template <class Engine>
  void sweep(Engine& rng) {
    for (std::size_t k = 0; k < missing_index_.size(); ++k) update_missing(rng, k);
    sample_z(rng);
    update_emissions(rng);
    update_transitions(rng);
    update_s0(rng);
  }

  /// Complete-data emission log-likelihood given the current z.
  double loglik() const {
    double ll = 0.0;
    for (std::size_t j = 0; j < L(); ++j)
      if (!stats_.members[j].empty()) ll += members_loglik(state_.params[j], steps_, stats_.members[j]);
    return ll;
  }

  std::size_t occupied_states() const {
    std::size_t k = 0;
    for (const auto& m : stats_.members) k += m.empty() ? 0 : 1;
    return k;
  }

  DrawRecord record(std::size_t sweep) const {
    DrawRecord r;
    r.sweep = sweep;
    r.params = state_.params;
    r.pi = state_.pi;
    r.beta = state_.beta;
    r.alpha = state_.hyper.alpha;
    r.kappa = state_.hyper.kappa;
    r.gamma = state_.hyper.gamma;
    r.z = state_.z;
    r.s0 = state_.s0;
    r.imputed.reserve(missing_index_.size());
    for (std::size_t m : missing_index_) r.imputed.push_back(state_.locations[m]);
    r.loglik = loglik();
    return r;
  }

  /// Log-likelihood of the steps whose terms change when location m moves,
  /// excluding step m-1 (its term is the proposal density).
  double downstream_loglik(std::size_t m) const {
    const auto& loc = state_.locations;
    const std::size_t n = step_count();
    double prev = bearing_or(loc[m] - loc[m - 1], steps_[m - 1].phi_prev);
    double ll = 0.0;
    for (std::size_t k = m; k < n; ++k) {
      const Vec2 d = loc[k + 1] - loc[k];
      ll += step_logdensity(k, loc[k], d, prev);
      const bool moved = d.x != 0.0 || d.y != 0.0;
      if (k >= m + 1 && moved) break;
      prev = bearing_or(d, prev);
    }
    return ll;
  }

  /// Log-likelihood of the steps that depend on s0 through phi_0.
  double s0_loglik(Vec2 s0) const {
    const auto& loc = state_.locations;
    double prev = atan_star(loc[0] - s0);
    double ll = 0.0;
    for (std::size_t k = 0; k < step_count(); ++k) {
      const Vec2 d = loc[k + 1] - loc[k];
      ll += step_logdensity(k, loc[k], d, prev);
      if (d.x != 0.0 || d.y != 0.0) break;
      prev = bearing_or(d, prev);
    }
    return ll;
  }

 private:
  // Lloyd's k-means (k-means++ seeding) on standardized per-step features:
  // location, displacement and displacement in the heading frame.
  template <class Engine>
  std::vector<int> cluster_steps(Engine& rng, std::size_t k) const {
    constexpr std::size_t D = 6;
    const std::size_t n = steps_.size();
    std::vector<std::array<double, D>> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& g = steps_[i];
      x[i] = {g.s.x, g.s.y, g.d.x, g.d.y, g.c * g.d.x + g.sn * g.d.y, -g.sn * g.d.x + g.c * g.d.y};
    }
    for (std::size_t f = 0; f < D; ++f) {
      double m = 0.0, v = 0.0;
      for (const auto& r : x) m += r[f];
      m /= static_cast<double>(n);
      for (const auto& r : x) v += (r[f] - m) * (r[f] - m);
      const double sd = std::sqrt(v / static_cast<double>(n));
      for (auto& r : x) r[f] = sd > 0.0 ? (r[f] - m) / sd : 0.0;
    }
    auto dist = [&](const std::array<double, D>& a, const std::array<double, D>& b) {
      double d = 0.0;
      for (std::size_t f = 0; f < D; ++f) d += (a[f] - b[f]) * (a[f] - b[f]);
      return d;
    };
    k = std::min(k, n);
    std::vector<std::array<double, D>> centre;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    centre.push_back(x[pick(rng)]);
    std::vector<double> best(n);
    while (centre.size() < k) {
      for (std::size_t i = 0; i < n; ++i) {
        best[i] = std::numeric_limits<double>::infinity();
        for (const auto& c : centre) best[i] = std::min(best[i], dist(x[i], c));
      }
      centre.push_back(x[categorical(rng, std::span<const double>(best))]);
    }
    std::vector<int> z(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        int arg = 0;
        double lo = dist(x[i], centre[0]);
        for (std::size_t c = 1; c < k; ++c) {
          const double d = dist(x[i], centre[c]);
          if (d < lo) lo = d, arg = static_cast<int>(c);
        }
        if (arg != z[i]) z[i] = arg, moved = true;
      }
      if (!moved && iter > 0) break;
      std::vector<std::array<double, D>> sum(k, std::array<double, D>{});
      std::vector<std::size_t> cnt(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        ++cnt[static_cast<std::size_t>(z[i])];
        for (std::size_t f = 0; f < D; ++f) sum[static_cast<std::size_t>(z[i])][f] += x[i][f];
      }
      for (std::size_t c = 0; c < k; ++c)
        if (cnt[c] > 0)
          for (std::size_t f = 0; f < D; ++f) centre[c][f] = sum[c][f] / static_cast<double>(cnt[c]);
    }
    return z;
  }

  double step_logdensity(std::size_t k, Vec2 s, Vec2 d, double phi_prev) const {
    const StapParams& p = state_.params[static_cast<std::size_t>(state_.z[k])];
    const EmissionCache cache(p);
    return cache.logdensity(d, s, phi_prev, std::cos(phi_prev), std::sin(phi_prev));
  }

  void set_step(std::size_t i, double phi_prev) {
    auto& g = steps_[i];
    g.s = state_.locations[i];
    g.d = state_.locations[i + 1] - state_.locations[i];
    g.phi_prev = phi_prev;
    g.c = std::cos(phi_prev);
    g.sn = std::sin(phi_prev);
  }

  void refresh_after_location(std::size_t m) {
    const std::size_t n = step_count();
    set_step(m - 1, steps_[m - 1].phi_prev);
    for (std::size_t k = m; k < n; ++k) {
      const double prev = bearing_or(steps_[k - 1].d, steps_[k - 1].phi_prev);
      if (k > m + 1 && prev == steps_[k].phi_prev) break;
      set_step(k, prev);
    }
  }

  void refresh_after_s0() {
    const std::size_t n = step_count();
    set_step(0, atan_star(state_.locations[0] - state_.s0));
    for (std::size_t k = 1; k < n; ++k) {
      const double prev = bearing_or(steps_[k - 1].d, steps_[k - 1].phi_prev);
      if (prev == steps_[k].phi_prev) break;
      set_step(k, prev);
    }
  }

  void interpolate_missing() {
    auto& loc = state_.locations;
    const std::size_t n = loc.size();
    std::size_t last_obs = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (path_.is_missing(i)) continue;
      for (std::size_t k = last_obs + 1; k < i; ++k) {
        const double t = static_cast<double>(k - last_obs) / static_cast<double>(i - last_obs);
        loc[k] = loc[last_obs] + t * (loc[i] - loc[last_obs]);
      }
      last_obs = i;
    }
    // Trailing gap: continue the last observed displacement.
    Vec2 step{1e-3, 0.0};
    if (last_obs > 0) step = loc[last_obs] - loc[last_obs - 1];
    for (std::size_t k = last_obs + 1; k < n; ++k) loc[k] = loc[k - 1] + step;
    for (std::size_t m : missing_index_) {
      loc[m].x = std::clamp(loc[m].x, prior_.domain.xmin, prior_.domain.xmax);
      loc[m].y = std::clamp(loc[m].y, prior_.domain.ymin, prior_.domain.ymax);
    }
  }

  Vec2 initial_s0() const {
    const auto& loc = state_.locations;
    const auto& d = prior_.domain;
    Vec2 back = loc[0] - (loc[1] - loc[0]);
    back.x = std::clamp(back.x, d.xmin, d.xmax);
    back.y = std::clamp(back.y, d.ymin, d.ymax);
    if (back == loc[0]) back.x = back.x > 0.5 * (d.xmin + d.xmax) ? back.x - 1e-3 * d.width() : back.x + 1e-3 * d.width();
    return back;
  }

  Path path_;
  PriorConfig prior_;
  SamplerOptions options_;
  std::vector<std::size_t> missing_index_;
  HmmState state_;
  SufficientStats stats_;
  std::vector<StepGeometry> steps_;
  std::vector<double> log_emission_;
  std::vector<double> ffbs_work_;
  AcceptanceCounts acceptance_;
};

/// Runs a full chain. Sweep order: missing locations, z, emission
/// parameters, transition block, s0.
template <class Engine>
PosteriorDraws run_mcmc(Engine& rng, const Path& path, const PriorConfig& prior, const McmcSchedule& schedule,
                        const SamplerOptions& options = {}) {
  schedule.validate();
  StapHmmSampler sampler(path, prior, options);
  sampler.initialize(rng);
  PosteriorDraws out;
  out.schedule = schedule;
  out.L = prior.L;
  out.T = path.size();
  out.missing_index = sampler.missing_index();
  out.records.reserve(schedule.retained());
  for (std::size_t sweep = 1; sweep <= schedule.iterations; ++sweep) {
    try {
      sampler.sweep(rng);
    } catch (const NumericError& e) {
      throw NumericError("sweep " + std::to_string(sweep) + ": " + e.what());
    }
    if (schedule.keeps(sweep)) out.records.push_back(sampler.record(sweep));
    if (options.log_every > 0 && options.log && sweep % options.log_every == 0) {
      const auto& a = sampler.acceptance();
      *options.log << "sweep " << sweep << " loglik " << sampler.loglik() << " K " << sampler.occupied_states()
                   << " acc_rho " << a.rho_rate() << " acc_missing " << a.missing_rate() << " acc_s0 "
                   << a.s0_rate() << '\n';
    }
  }
  out.acceptance = sampler.acceptance();
  return out;
}

inline PosteriorDraws run_mcmc(const Path& path, const PriorConfig& prior, const McmcSchedule& schedule,
                               const SamplerOptions& options = {}) {
  Rng rng(schedule.seed);
  return run_mcmc(rng, path, prior, schedule, options);
}

}  // namespace stap
