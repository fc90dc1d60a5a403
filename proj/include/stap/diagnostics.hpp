#pragma once

// Post-processing of retained draws: number of behaviours, label alignment,
// MAP states, parameter summaries, model scores and predictive metrics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "stap/draws.hpp"
#include "stap/emission.hpp"
#include "stap/error.hpp"
#include "stap/geometry.hpp"
#include "stap/random.hpp"

namespace stap {

/// Number of distinct states used by one sweep's z.
inline int occupied_count(const std::vector<int>& z, int L) {
  std::vector<char> seen(static_cast<std::size_t>(L), 0);
  int k = 0;
  for (int s : z) {
    if (!seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = 1;
      ++k;
    }
  }
  return k;
}

struct KDistribution {
  std::map<int, double> prob;  // K -> posterior probability
  int mode = 0;                // most probable K; ties go to the smaller K
  double at(int k) const {
    const auto it = prob.find(k);
    return it == prob.end() ? 0.0 : it->second;
  }
};

inline KDistribution posterior_K(const PosteriorDraws& draws) {
  if (draws.empty()) throw DataError("no retained draws");
  std::map<int, std::size_t> counts;
  for (const auto& r : draws.records) ++counts[occupied_count(r.z, draws.L)];
  KDistribution out;
  std::size_t best = 0;
  for (const auto& [k, c] : counts) {
    out.prob[k] = static_cast<double>(c) / static_cast<double>(draws.size());
    if (c > best) {
      best = c;
      out.mode = k;
    }
  }
  return out;
}

/// Sweeps with the modal K and, for each, the raw label behind every
/// canonical state. Canonical states are numbered by first appearance in
/// the reference sweep (the last modal-K sweep); other sweeps are matched to
/// it greedily by how many time points their states share.
struct Alignment {
  int K = 0;
  std::vector<std::size_t> sweeps;               // indices into draws.records
  std::vector<std::vector<int>> labels;          // [sweep][canonical] -> raw label
  std::vector<std::vector<int>> to_canonical;    // [sweep][raw] -> canonical or -1
};

namespace detail {

inline std::vector<int> labels_by_first_use(const std::vector<int>& z, int L) {
  std::vector<char> seen(static_cast<std::size_t>(L), 0);
  std::vector<int> order;
  for (int s : z)
    if (!seen[static_cast<std::size_t>(s)]) {
      seen[static_cast<std::size_t>(s)] = 1;
      order.push_back(s);
    }
  return order;
}

}  // namespace detail

inline Alignment align_labels(const PosteriorDraws& draws) {
  const KDistribution kd = posterior_K(draws);
  Alignment a;
  a.K = kd.mode;
  for (std::size_t b = 0; b < draws.size(); ++b)
    if (occupied_count(draws.records[b].z, draws.L) == a.K) a.sweeps.push_back(b);
  const auto& ref = draws.records[a.sweeps.back()].z;
  const std::vector<int> ref_labels = detail::labels_by_first_use(ref, draws.L);
  std::vector<int> ref_canon(static_cast<std::size_t>(draws.L), -1);
  for (int k = 0; k < a.K; ++k) ref_canon[static_cast<std::size_t>(ref_labels[static_cast<std::size_t>(k)])] = k;

  const auto K = static_cast<std::size_t>(a.K);
  const auto L = static_cast<std::size_t>(draws.L);
  std::vector<std::size_t> overlap(K * L);
  for (std::size_t b : a.sweeps) {
    const auto& z = draws.records[b].z;
    std::fill(overlap.begin(), overlap.end(), 0);
    for (std::size_t i = 0; i < z.size(); ++i)
      ++overlap[static_cast<std::size_t>(ref_canon[static_cast<std::size_t>(ref[i])]) * L +
                static_cast<std::size_t>(z[i])];
    const std::vector<int> used = detail::labels_by_first_use(z, draws.L);
    std::vector<int> labels(K, -1);
    std::vector<int> canon(L, -1);
    for (std::size_t round = 0; round < K; ++round) {
      // Largest remaining overlap; ties go to the lower canonical index,
      // then to the earlier-used raw label.
      long best = -1;
      std::size_t bk = 0;
      int bl = -1;
      for (std::size_t k = 0; k < K; ++k) {
        if (labels[k] >= 0) continue;
        for (int l : used) {
          if (canon[static_cast<std::size_t>(l)] >= 0) continue;
          const long v = static_cast<long>(overlap[k * L + static_cast<std::size_t>(l)]);
          if (v > best) {
            best = v;
            bk = k;
            bl = l;
          }
        }
      }
      labels[bk] = bl;
      canon[static_cast<std::size_t>(bl)] = static_cast<int>(bk);
    }
    a.labels.push_back(std::move(labels));
    a.to_canonical.push_back(std::move(canon));
  }
  return a;
}

/// Per-time posterior mode of the aligned state (0-based canonical index).
inline std::vector<int> map_states(const PosteriorDraws& draws, const Alignment& a) {
  const std::size_t n = draws.records[a.sweeps.front()].z.size();
  const auto K = static_cast<std::size_t>(a.K);
  std::vector<std::size_t> counts(n * K, 0);
  for (std::size_t s = 0; s < a.sweeps.size(); ++s) {
    const auto& z = draws.records[a.sweeps[s]].z;
    for (std::size_t i = 0; i < n; ++i)
      ++counts[i * K + static_cast<std::size_t>(a.to_canonical[s][static_cast<std::size_t>(z[i])])];
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* row = counts.data() + i * K;
    out[i] = static_cast<int>(std::max_element(row, row + K) - row);  // first maximum = lowest index
  }
  return out;
}

inline std::vector<int> map_states(const PosteriorDraws& draws) { return map_states(draws, align_labels(draws)); }

/// Type-7 sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& x, double p) {
  if (x.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Mean and equal-tailed interval holding `level` of the draws.
inline Interval credible_interval(std::vector<double> x, double level = 0.95) {
  std::sort(x.begin(), x.end());
  Interval out;
  out.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  out.lo = quantile_sorted(x, 0.5 * (1.0 - level));
  out.hi = quantile_sorted(x, 1.0 - 0.5 * (1.0 - level));
  // Keep lo <= mean <= hi under round-off for constant samples.
  out.mean = std::clamp(out.mean, out.lo, out.hi);
  return out;
}

/// Summary of a mixed discrete/continuous rho. An interval end is written
/// closed when no draw lies beyond it, so "[0 0)" reads "all of the lower
/// tail sits on the atom at 0, some draws exceed 0".
struct RhoSummary {
  Interval ci;
  double p0 = 0.0;
  double p1 = 0.0;
  double p_interior = 0.0;
  bool closed_lo = false;
  bool closed_hi = false;

  std::string bracket(int precision = 3) const;
};

struct StateSummary {
  Interval mu_x, mu_y, eta_x, eta_y, tau, s11, s12, s22;
  RhoSummary rho;
  std::vector<Interval> pi;  // row of transition probabilities to each canonical state
  Interval beta;
  double occupancy = 0.0;    // share of MAP time points in this state
};

struct Summary {
  KDistribution k;
  int K = 0;
  std::size_t n_sweeps = 0;  // sweeps with K = modal K
  std::vector<StateSummary> states;
  Interval alpha, kappa, gamma;
  std::vector<int> map_z;  // 0-based canonical states
};

inline std::string format_number(double v, int precision = 3) {
  // Fixed precision, trailing zeros trimmed, negative zero printed as 0.
  const double scale = std::pow(10.0, precision);
  double r = std::round(v * scale) / scale;
  if (r == 0.0) r = 0.0;
  std::string s = std::to_string(r);
  if (s.find('.') != std::string::npos) {
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

inline std::string RhoSummary::bracket(int precision) const {
  return std::string(closed_lo ? "[" : "(") + format_number(ci.lo, precision) + " " +
         format_number(ci.hi, precision) + (closed_hi ? "]" : ")");
}

inline RhoSummary summarize_rho(const std::vector<double>& x, double level = 0.95) {
  RhoSummary r;
  r.ci = credible_interval(x, level);
  const double n = static_cast<double>(x.size());
  r.p0 = static_cast<double>(std::count(x.begin(), x.end(), 0.0)) / n;
  r.p1 = static_cast<double>(std::count(x.begin(), x.end(), 1.0)) / n;
  r.p_interior = std::max(0.0, 1.0 - r.p0 - r.p1);
  r.closed_lo = std::none_of(x.begin(), x.end(), [&](double v) { return v < r.ci.lo; });
  r.closed_hi = std::none_of(x.begin(), x.end(), [&](double v) { return v > r.ci.hi; });
  return r;
}

inline Summary summarize(const PosteriorDraws& draws, const Alignment& a, double level = 0.95) {
  Summary out;
  out.k = posterior_K(draws);
  out.K = a.K;
  out.n_sweeps = a.sweeps.size();
  out.map_z = map_states(draws, a);
  const auto K = static_cast<std::size_t>(a.K);
  const auto L = static_cast<std::size_t>(draws.L);
  const std::size_t n = a.sweeps.size();
  std::vector<double> col(n);
  auto over_sweeps = [&](auto&& get) {
    for (std::size_t s = 0; s < n; ++s) col[s] = get(s, draws.records[a.sweeps[s]]);
    return credible_interval(col, level);
  };
  out.states.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& st = out.states[k];
    auto param = [&](std::size_t s, const DrawRecord& r) -> const StapParams& {
      return r.params[static_cast<std::size_t>(a.labels[s][k])];
    };
    st.mu_x = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).mu.x; });
    st.mu_y = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).mu.y; });
    st.eta_x = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).eta.x; });
    st.eta_y = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).eta.y; });
    st.tau = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).tau; });
    st.s11 = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).sigma.a; });
    st.s12 = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).sigma.b; });
    st.s22 = over_sweeps([&](std::size_t s, const DrawRecord& r) { return param(s, r).sigma.d; });
    for (std::size_t s = 0; s < n; ++s) col[s] = param(s, draws.records[a.sweeps[s]]).rho;
    st.rho = summarize_rho(col, level);
    st.beta = over_sweeps([&](std::size_t s, const DrawRecord& r) {
      return r.beta[static_cast<std::size_t>(a.labels[s][k])];
    });
    for (std::size_t k2 = 0; k2 < K; ++k2)
      st.pi.push_back(over_sweeps([&](std::size_t s, const DrawRecord& r) {
        return r.pi[static_cast<std::size_t>(a.labels[s][k]) * L + static_cast<std::size_t>(a.labels[s][k2])];
      }));
  }
  for (int z : out.map_z) out.states[static_cast<std::size_t>(z)].occupancy += 1.0 / static_cast<double>(out.map_z.size());
  out.alpha = over_sweeps([](std::size_t, const DrawRecord& r) { return r.alpha; });
  out.kappa = over_sweeps([](std::size_t, const DrawRecord& r) { return r.kappa; });
  out.gamma = over_sweeps([](std::size_t, const DrawRecord& r) { return r.gamma; });
  return out;
}

inline Summary summarize(const PosteriorDraws& draws, double level = 0.95) {
  return summarize(draws, align_labels(draws), level);
}

/// Posterior-mean parameters of each canonical state.
inline std::vector<StapParams> posterior_mean_params(const PosteriorDraws& draws, const Alignment& a) {
  const auto K = static_cast<std::size_t>(a.K);
  std::vector<StapParams> out(K);
  for (auto& p : out) {
    p.mu = {};
    p.eta = {};
    p.sigma = {};
    p.tau = 0.0;
    p.rho = 0.0;
  }
  const double w = 1.0 / static_cast<double>(a.sweeps.size());
  for (std::size_t s = 0; s < a.sweeps.size(); ++s) {
    const auto& r = draws.records[a.sweeps[s]];
    for (std::size_t k = 0; k < K; ++k) {
      const auto& q = r.params[static_cast<std::size_t>(a.labels[s][k])];
      out[k].mu += w * q.mu;
      out[k].eta += w * q.eta;
      out[k].sigma += w * q.sigma;
      out[k].tau += w * q.tau;
      out[k].rho += w * q.rho;
    }
  }
  for (auto& p : out) {
    p.sigma = symmetrized(p.sigma);
    p.tau = std::clamp(p.tau, 0.0, 1.0);
    p.rho = std::clamp(p.rho, 0.0, 1.0);
  }
  return out;
}

/// Posterior-mean transition matrix among canonical states, rows renormalized.
inline std::vector<double> posterior_mean_transitions(const PosteriorDraws& draws, const Alignment& a) {
  const auto K = static_cast<std::size_t>(a.K);
  const auto L = static_cast<std::size_t>(draws.L);
  std::vector<double> pi(K * K, 0.0);
  for (std::size_t s = 0; s < a.sweeps.size(); ++s) {
    const auto& r = draws.records[a.sweeps[s]];
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t k = 0; k < K; ++k)
        pi[j * K + k] += r.pi[static_cast<std::size_t>(a.labels[s][j]) * L + static_cast<std::size_t>(a.labels[s][k])];
  }
  for (std::size_t j = 0; j < K; ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < K; ++k) row += pi[j * K + k];
    for (std::size_t k = 0; k < K; ++k) pi[j * K + k] = row > 0.0 ? pi[j * K + k] / row : 1.0 / static_cast<double>(K);
  }
  return pi;
}

/// Locations with a sweep's imputations filled in.
inline std::vector<Vec2> completed_locations(const Path& path, const PosteriorDraws& draws, const DrawRecord& r) {
  std::vector<Vec2> pts = path.points;
  for (std::size_t m = 0; m < draws.missing_index.size(); ++m) pts[draws.missing_index[m]] = r.imputed[m];
  return pts;
}

/// Movement-metric log-likelihood sum_i metric_loglik(r_i, phi_i | state z_i).
/// Zero-length steps have no polar density and are left out.
inline double metric_path_loglik(const std::vector<Vec2>& pts, Vec2 s0, const std::vector<int>& z,
                                 const std::vector<StapParams>& params) {
  double ll = 0.0;
  double prev = atan_star(pts[0] - s0);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 d = pts[i + 1] - pts[i];
    if (d.x == 0.0 && d.y == 0.0) continue;
    const double phi = atan_star(d);
    ll += metric_loglik(norm(d), phi, pts[i], prev, params[static_cast<std::size_t>(z[i])]);
    prev = phi;
  }
  return ll;
}

/// Per-sweep complete-data log-likelihood in movement-metric form.
inline std::vector<double> loglik_metrics(const PosteriorDraws& draws, const Path& path) {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& r : draws.records)
    out.push_back(metric_path_loglik(completed_locations(path, draws, r), r.s0, r.z, r.params));
  return out;
}

/// Log-likelihood at the plug-in: modal-K sweeps, MAP z, posterior-mean
/// parameters, posterior-mean imputations and s0.
inline double plugin_loglik(const PosteriorDraws& draws, const Path& path, const Alignment& a) {
  const auto params = posterior_mean_params(draws, a);
  const auto z = map_states(draws, a);
  std::vector<Vec2> pts = path.points;
  Vec2 s0{};
  const double w = 1.0 / static_cast<double>(a.sweeps.size());
  for (std::size_t m : draws.missing_index) pts[m] = {};
  for (std::size_t b : a.sweeps) {
    const auto& r = draws.records[b];
    s0 += w * r.s0;
    for (std::size_t m = 0; m < draws.missing_index.size(); ++m) pts[draws.missing_index[m]] += w * r.imputed[m];
  }
  if (s0 == pts[0]) s0 = draws.records[a.sweeps.back()].s0;
  return metric_path_loglik(pts, s0, z, params);
}

struct ModelScores {
  double mean_loglik = 0.0;
  double plugin_loglik = 0.0;
  double dic5 = 0.0;  // lower is better
  double icl = 0.0;   // higher is better
  int K = 0;
  int free_parameters = 0;
};

/// Free parameters for K states: nine emission parameters each and K - 1
/// free transition probabilities per row.
inline int free_parameter_count(int K) { return 9 * K + K * (K - 1); }

inline ModelScores model_scores(const PosteriorDraws& draws, const Path& path) {
  const Alignment a = align_labels(draws);
  const auto ll = loglik_metrics(draws, path);
  ModelScores s;
  s.mean_loglik = std::accumulate(ll.begin(), ll.end(), 0.0) / static_cast<double>(ll.size());
  s.plugin_loglik = plugin_loglik(draws, path, a);
  s.K = a.K;
  s.free_parameters = free_parameter_count(a.K);
  s.dic5 = -4.0 * s.mean_loglik + 2.0 * s.plugin_loglik;
  s.icl = s.plugin_loglik - 0.5 * s.free_parameters * std::log(static_cast<double>(path.size() - 1));
  return s;
}

inline double dic5(const PosteriorDraws& draws, const Path& path) { return model_scores(draws, path).dic5; }
inline double icl(const PosteriorDraws& draws, const Path& path) { return model_scores(draws, path).icl; }

struct PredictiveSample {
  std::vector<double> theta;
  std::vector<double> log_r;
};

/// Turning angle and log step length of y ~ N(eta_j, Sigma_j), the
/// heading-frame step of a pure correlated walk, cycling over the aligned
/// sweeps. Requires P(rho_j = 1) > 0.5 unless `force` is set.
template <class Engine>
PredictiveSample predictive_metrics(Engine& rng, const PosteriorDraws& draws, const Alignment& a, int j,
                                    std::size_t n_samples, bool force = false) {
  if (j < 0 || j >= a.K) throw ConfigError("state " + std::to_string(j + 1) + " is not among the modal-K states");
  const auto k = static_cast<std::size_t>(j);
  if (!force) {
    double p1 = 0.0;
    for (std::size_t s = 0; s < a.sweeps.size(); ++s)
      p1 += draws.records[a.sweeps[s]].params[static_cast<std::size_t>(a.labels[s][k])].rho == 1.0 ? 1.0 : 0.0;
    if (p1 / static_cast<double>(a.sweeps.size()) <= 0.5)
      throw ConfigError("state " + std::to_string(j + 1) + " is not predominantly a correlated walk");
  }
  PredictiveSample out;
  out.theta.reserve(n_samples);
  out.log_r.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t s = i % a.sweeps.size();
    const auto& p = draws.records[a.sweeps[s]].params[static_cast<std::size_t>(a.labels[s][k])];
    Vec2 y = mvnormal(rng, p.eta, p.sigma);
    while (y.x == 0.0 && y.y == 0.0) y = mvnormal(rng, p.eta, p.sigma);
    out.theta.push_back(atan_star(y));
    out.log_r.push_back(std::log(norm(y)));
  }
  return out;
}

struct LabelMatch {
  double accuracy = 0.0;
  std::map<int, int> mapping;  // label in the first sequence -> label in the second
};

/// Best one-to-one relabeling of `a` onto `b`: exhaustive over permutations
/// for up to 8 labels, greedy beyond.
inline LabelMatch best_label_match(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("state sequences differ in length");
  if (a.empty()) return {1.0, {}};
  std::vector<int> la(a), lb(b);
  std::sort(la.begin(), la.end());
  la.erase(std::unique(la.begin(), la.end()), la.end());
  std::sort(lb.begin(), lb.end());
  lb.erase(std::unique(lb.begin(), lb.end()), lb.end());
  auto index = [](const std::vector<int>& labels, int v) {
    return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), v) - labels.begin());
  };
  const std::size_t na = la.size(), nb = lb.size();
  std::vector<std::size_t> conf(na * nb, 0);
  for (std::size_t i = 0; i < a.size(); ++i) ++conf[index(la, a[i]) * nb + index(lb, b[i])];

  std::vector<int> best_assign(na, -1);
  std::size_t best_hits = 0;
  const std::size_t m = std::max(na, nb);
  if (m <= 8) {
    // Permute the larger side's slots; slots beyond a side's size are dummies.
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    bool first = true;
    do {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < na; ++i)
        if (perm[i] < nb) hits += conf[i * nb + perm[i]];
      if (first || hits > best_hits) {
        first = false;
        best_hits = hits;
        for (std::size_t i = 0; i < na; ++i) best_assign[i] = perm[i] < nb ? static_cast<int>(perm[i]) : -1;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<char> used_a(na, 0), used_b(nb, 0);
    for (std::size_t round = 0; round < std::min(na, nb); ++round) {
      std::size_t bi = 0, bj = 0, bv = 0;
      bool found = false;
      for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j)
          if (!used_a[i] && !used_b[j] && (!found || conf[i * nb + j] > bv)) {
            found = true;
            bv = conf[i * nb + j];
            bi = i;
            bj = j;
          }
      used_a[bi] = used_b[bj] = 1;
      best_assign[bi] = static_cast<int>(bj);
      best_hits += bv;
    }
  }
  LabelMatch out;
  out.accuracy = static_cast<double>(best_hits) / static_cast<double>(a.size());
  for (std::size_t i = 0; i < na; ++i)
    if (best_assign[i] >= 0) out.mapping[la[i]] = lb[static_cast<std::size_t>(best_assign[i])];
  return out;
}

/// Fraction of agreeing time points under the best relabeling.
inline double accuracy(const std::vector<int>& map_z, const std::vector<int>& true_z) {
  return best_label_match(map_z, true_z).accuracy;
}

}  // namespace stap
