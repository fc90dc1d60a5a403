#pragma once

// Summary report and CSV outputs written by `summarize`.

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stap/diagnostics.hpp"
#include "stap/draws_io.hpp"
#include "stap/emission.hpp"
#include "stap/geometry.hpp"
#include "stap/random.hpp"

namespace stap {

struct ReportOptions {
  double level = 0.95;
  std::size_t predictive_samples = 2000;
  std::uint64_t seed = 1;
  std::optional<std::vector<int>> true_z;  // 0-based, for accuracy
};

/// Table-2 layout: a row of posterior means and a row of intervals per
/// parameter, one column per state.
inline std::string table2_csv(const Summary& s) {
  std::ostringstream o;
  const auto K = s.states.size();
  o << "parameter,row";
  for (std::size_t j = 1; j <= K; ++j) o << ",state" << j;
  o << '\n';
  auto pair = [&](const std::string& name, auto&& get) {
    o << name << ",estimate";
    for (const auto& st : s.states) o << ',' << format_number(get(st).mean);
    o << '\n' << name << ",ci";
    for (const auto& st : s.states) o << ",(" << format_number(get(st).lo) << ' ' << format_number(get(st).hi) << ')';
    o << '\n';
  };
  pair("mu_1", [](const StateSummary& st) { return st.mu_x; });
  pair("mu_2", [](const StateSummary& st) { return st.mu_y; });
  pair("eta_1", [](const StateSummary& st) { return st.eta_x; });
  pair("eta_2", [](const StateSummary& st) { return st.eta_y; });
  pair("tau", [](const StateSummary& st) { return st.tau; });
  o << "rho,estimate";
  for (const auto& st : s.states) o << ',' << format_number(st.rho.ci.mean);
  o << "\nrho,ci";
  for (const auto& st : s.states) o << ',' << st.rho.bracket();
  o << '\n';
  pair("sigma_11", [](const StateSummary& st) { return st.s11; });
  pair("sigma_12", [](const StateSummary& st) { return st.s12; });
  pair("sigma_22", [](const StateSummary& st) { return st.s22; });
  for (std::size_t i = 0; i < K; ++i) {
    // pi_{i,j} across the columns j
    o << "pi_" << i + 1 << ",estimate";
    for (std::size_t j = 0; j < K; ++j) o << ',' << format_number(s.states[i].pi[j].mean);
    o << "\npi_" << i + 1 << ",ci";
    for (std::size_t j = 0; j < K; ++j)
      o << ",(" << format_number(s.states[i].pi[j].lo) << ' ' << format_number(s.states[i].pi[j].hi) << ')';
    o << '\n';
  }
  pair("beta", [](const StateSummary& st) { return st.beta; });
  return o.str();
}

/// Numeric long form: one row per (parameter, state).
inline std::string summary_long_csv(const Summary& s) {
  std::ostringstream o;
  o << "parameter,state,mean,lo,hi,p0,p1\n";
  auto row = [&](const std::string& name, std::size_t j, const Interval& v, double p0 = 0.0, double p1 = 0.0) {
    o << name << ',' << j << ',' << format_double(v.mean) << ',' << format_double(v.lo) << ',' << format_double(v.hi)
      << ',' << format_double(p0) << ',' << format_double(p1) << '\n';
  };
  for (std::size_t k = 0; k < s.states.size(); ++k) {
    const auto& st = s.states[k];
    const std::size_t j = k + 1;
    row("mu_1", j, st.mu_x);
    row("mu_2", j, st.mu_y);
    row("eta_1", j, st.eta_x);
    row("eta_2", j, st.eta_y);
    row("tau", j, st.tau);
    row("rho", j, st.rho.ci, st.rho.p0, st.rho.p1);
    row("sigma_11", j, st.s11);
    row("sigma_12", j, st.s12);
    row("sigma_22", j, st.s22);
    for (std::size_t l = 0; l < st.pi.size(); ++l) row("pi_" + std::to_string(l + 1), j, st.pi[l]);
    row("beta", j, st.beta);
  }
  row("alpha", 0, s.alpha);
  row("kappa", 0, s.kappa);
  row("gamma", 0, s.gamma);
  return o.str();
}

/// Where the expected-movement arrows are drawn: a 3 x 3 grid over the
/// observed extent crossed with four previous bearings.
struct GeometryCase {
  Vec2 s;
  double phi_prev = 0.0;
};

inline std::vector<GeometryCase> geometry_cases(const Path& path) {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool first = true;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path.is_missing(i)) continue;
    const Vec2 p = path.points[i];
    if (first) {
      x0 = x1 = p.x;
      y0 = y1 = p.y;
      first = false;
    }
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  std::vector<GeometryCase> out;
  for (double fy : {0.2, 0.5, 0.8})
    for (double fx : {0.2, 0.5, 0.8})
      for (double phi : {0.0, kPi / 2, -kPi, -kPi / 2}) out.push_back({{x0 + fx * (x1 - x0), y0 + fy * (y1 - y0)}, phi});
  return out;
}

inline std::string ellipses_csv(const std::vector<StapParams>& params, const std::vector<GeometryCase>& cases,
                                double level) {
  std::ostringstream o;
  o << "state,case,center_x,center_y,s11,s12,s22,level,radius_sq\n";
  for (std::size_t j = 0; j < params.size(); ++j)
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const auto m = stap_moments(params[j], cases[c].s, cases[c].phi_prev);
      const Ellipse e = ellipse_contour(cases[c].s + m.mean, m.cov, level);
      o << j + 1 << ',' << c + 1 << ',' << format_double(e.center.x) << ',' << format_double(e.center.y) << ','
        << format_double(e.shape.a) << ',' << format_double(e.shape.b) << ',' << format_double(e.shape.d) << ','
        << format_double(e.level) << ',' << format_double(e.radius_sq) << '\n';
    }
  return o.str();
}

/// "previous" arrows run from s - u(phi_prev) to s, "expected" arrows from
/// s to s + M.
inline std::string arrows_csv(const std::vector<StapParams>& params, const std::vector<GeometryCase>& cases) {
  std::ostringstream o;
  o << "state,case,kind,tail_x,tail_y,head_x,head_y\n";
  for (std::size_t j = 0; j < params.size(); ++j)
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const Vec2 s = cases[c].s;
      const Vec2 back = s - Vec2{std::cos(cases[c].phi_prev), std::sin(cases[c].phi_prev)};
      const Vec2 head = s + stap_moments(params[j], s, cases[c].phi_prev).mean;
      auto line = [&](const char* kind, Vec2 a, Vec2 b) {
        o << j + 1 << ',' << c + 1 << ',' << kind << ',' << format_double(a.x) << ',' << format_double(a.y) << ','
          << format_double(b.x) << ',' << format_double(b.y) << '\n';
      };
      line("previous", back, s);
      line("expected", s, head);
    }
  return o.str();
}

inline std::string map_states_csv(const Path& path, const std::vector<int>& map_z) {
  std::ostringstream o;
  o << "index,time,x,y,state\n";
  for (std::size_t i = 0; i < map_z.size(); ++i) {
    o << i + 1 << ',' << (path.timestamps ? format_double((*path.timestamps)[i]) : std::to_string(i)) << ',';
    if (path.is_missing(i)) o << ',';
    else o << format_double(path.points[i].x) << ',' << format_double(path.points[i].y);
    o << ',' << map_z[i] + 1 << '\n';
  }
  return o.str();
}

inline std::string report_text(const Summary& s, const ModelScores& sc, const PosteriorDraws& d,
                               std::optional<double> acc) {
  std::ostringstream o;
  o << "retained sweeps: " << d.size() << "\n";
  o << "posterior of K:";
  for (const auto& [k, p] : s.k.prob) o << "  P(K=" << k << ")=" << format_number(p);
  o << "\nmodal K: " << s.K << " (" << s.n_sweeps << " sweeps)\n\n";
  for (std::size_t j = 0; j < s.states.size(); ++j) {
    const auto& st = s.states[j];
    auto iv = [](const Interval& v) {
      return format_number(v.mean) + " (" + format_number(v.lo) + " " + format_number(v.hi) + ")";
    };
    o << "state " << j + 1 << "  occupancy " << format_number(st.occupancy) << "\n";
    o << "  mu     " << iv(st.mu_x) << "  " << iv(st.mu_y) << "\n";
    o << "  eta    " << iv(st.eta_x) << "  " << iv(st.eta_y) << "\n";
    o << "  tau    " << iv(st.tau) << "\n";
    o << "  rho    " << format_number(st.rho.ci.mean) << " " << st.rho.bracket() << "  P(0)=" << format_number(st.rho.p0)
      << " P(1)=" << format_number(st.rho.p1) << "\n";
    o << "  sigma  " << iv(st.s11) << "  " << iv(st.s12) << "  " << iv(st.s22) << "\n";
  }
  o << "\nalpha " << format_number(s.alpha.mean) << "  kappa " << format_number(s.kappa.mean) << "  gamma "
    << format_number(s.gamma.mean) << "\n";
  o << "DIC5 " << format_number(sc.dic5) << "  ICL " << format_number(sc.icl) << "\n";
  o << "acceptance: rho " << format_number(d.acceptance.rho_rate()) << "  missing "
    << format_number(d.acceptance.missing_rate()) << "  s0 " << format_number(d.acceptance.s0_rate()) << "\n";
  if (acc) o << "accuracy " << format_number(*acc) << "\n";
  return o.str();
}

/// Writes every summarize output into `dir`.
inline void write_report(const PosteriorDraws& d, const Path& path, const std::filesystem::path& dir,
                         const ReportOptions& opt = {}) {
  std::filesystem::create_directories(dir);
  const Alignment a = align_labels(d);
  const Summary s = summarize(d, a, opt.level);
  const ModelScores sc = model_scores(d, path);
  std::optional<double> acc;
  if (opt.true_z) acc = accuracy(s.map_z, *opt.true_z);

  write_file(dir / "summary.txt", report_text(s, sc, d, acc));
  write_file(dir / "table2.csv", table2_csv(s));
  write_file(dir / "summary.csv", summary_long_csv(s));
  {
    std::ostringstream o;
    o << "K,probability\n";
    for (const auto& [k, p] : s.k.prob) o << k << ',' << format_double(p) << '\n';
    write_file(dir / "k_distribution.csv", o.str());
  }
  {
    std::ostringstream o;
    o << "name,value\n";
    o << "mean_loglik," << format_double(sc.mean_loglik) << '\n';
    o << "plugin_loglik," << format_double(sc.plugin_loglik) << '\n';
    o << "dic5," << format_double(sc.dic5) << '\n';
    o << "icl," << format_double(sc.icl) << '\n';
    o << "K," << sc.K << '\n';
    o << "free_parameters," << sc.free_parameters << '\n';
    if (acc) o << "accuracy," << format_double(*acc) << '\n';
    write_file(dir / "scores.csv", o.str());
  }
  write_file(dir / "map_states.csv", map_states_csv(path, s.map_z));
  {
    Rng rng(opt.seed);
    std::ostringstream o;
    o << "state,theta,log_r\n";
    for (int j = 0; j < a.K; ++j) {
      if (s.states[static_cast<std::size_t>(j)].rho.p1 <= 0.5) continue;
      const auto p = predictive_metrics(rng, d, a, j, opt.predictive_samples);
      for (std::size_t i = 0; i < p.theta.size(); ++i)
        o << j + 1 << ',' << format_double(p.theta[i]) << ',' << format_double(p.log_r[i]) << '\n';
    }
    write_file(dir / "predictive.csv", o.str());
  }
  const auto params = posterior_mean_params(d, a);
  const auto cases = geometry_cases(path);
  write_file(dir / "ellipses.csv", ellipses_csv(params, cases, opt.level));
  write_file(dir / "arrows.csv", arrows_csv(params, cases));
}

}  // namespace stap
