// Acceptance runner: one PASS/FAIL line per criterion.
//
// Default is the reduced scale that fits in CI; --full runs the 7000-point,
// 50k-sweep fit for criterion 1 (and reuses it for 2 and 3).
//
// Exit status is 0 when every criterion passes or fails only where listed
// in kKnownFailures; --strict makes any FAIL fatal. A known failure that
// starts passing is also reported as an error so the list gets updated.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gir.hpp"
#include "oracles.hpp"
#include "stap/stap.hpp"

namespace fs = std::filesystem;
using namespace stap;

namespace {

// Set 2 of the subsampling study has one dominant turning mode; see the
// notes in README.md.
const std::set<int> kKnownFailures{9};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  bool full = false;
  std::string cli;
  fs::path work;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) { return format_number(v, precision); }

// ---- fits on the simulated datasets, shared by criteria 1-3 ----

struct DatasetFit {
  SimulatedPath sim;
  PosteriorDraws draws;
  Summary summary;
  double seconds = 0.0;
};

struct Scale {
  std::size_t T, iterations;
};

Scale fit_scale(const Options& o) { return o.full ? Scale{7000, 50000} : Scale{2000, 15000}; }

const DatasetFit& dataset_fit(int set, const Options& o) {
  static std::map<int, DatasetFit> cache;
  auto it = cache.find(set);
  if (it != cache.end()) return it->second;
  const Scale sc = fit_scale(o);
  DatasetFit f;
  f.sim = simulate_hmm(oracles::test_dataset(set, sc.T, 1));
  const PriorConfig prior = oracles::padded_prior(f.sim.path, 50);
  McmcSchedule sch;
  sch.iterations = sc.iterations;
  sch.burnin = sc.iterations * 3 / 5;
  sch.thin = 10;
  sch.seed = 1;
  const auto t0 = std::chrono::steady_clock::now();
  f.draws = run_mcmc(f.sim.path, prior, sch, SamplerOptions{});
  f.seconds = seconds_since(t0);
  f.summary = summarize(f.draws);
  return cache.emplace(set, std::move(f)).first->second;
}

Outcome criterion1(const Options& o) {
  const Scale sc = fit_scale(o);
  const auto& f = dataset_fit(1, o);
  const double p3 = f.summary.k.at(3);
  const double limit = o.full ? 3600.0 : 600.0;
  Outcome out;
  out.pass = f.summary.k.mode == 3 && p3 >= 0.8 && f.seconds < limit;
  out.detail = "modal K " + std::to_string(f.summary.k.mode) + ", P(K=3) " + fmt(p3) + " (T=" +
               std::to_string(sc.T) + ", " + std::to_string(sc.iterations) + " sweeps, " + fmt(f.seconds, 1) +
               " s, limit " + fmt(limit, 0) + " s)";
  return out;
}

Outcome criterion2(const Options& o) {
  const auto& f = dataset_fit(1, o);
  const auto& s = f.summary;
  Outcome out;
  if (s.K != 3) {
    out.detail = "modal K is " + std::to_string(s.K) + ", cannot match states";
    return out;
  }
  const auto match = best_label_match(s.map_z, f.sim.z);  // fitted -> true
  std::map<int, int> fitted_of;
  for (auto [fitted, truth] : match.mapping) fitted_of[truth] = fitted;
  if (fitted_of.size() != 3) {
    out.detail = "fitted states do not cover the three true behaviours";
    return out;
  }
  const auto cfg = oracles::test_dataset(1, 3, 1);
  int inside = 0, total = 0;
  std::string missed;
  for (int j = 0; j < 3; ++j) {
    const auto& st = s.states[static_cast<std::size_t>(fitted_of[j])];
    const auto& p = cfg.params[static_cast<std::size_t>(j)];
    const std::vector<std::pair<std::string, bool>> checks{
        {"mu.x", st.mu_x.contains(p.mu.x)},       {"mu.y", st.mu_y.contains(p.mu.y)},
        {"eta.x", st.eta_x.contains(p.eta.x)},    {"eta.y", st.eta_y.contains(p.eta.y)},
        {"tau", st.tau.contains(p.tau)},          {"rho", st.rho.ci.contains(p.rho)},
        {"sigma.11", st.s11.contains(p.sigma.a)}, {"sigma.12", st.s12.contains(p.sigma.b)},
        {"sigma.22", st.s22.contains(p.sigma.d)},
    };
    for (const auto& [name, ok] : checks) {
      ++total;
      inside += ok;
      if (!ok) missed += (missed.empty() ? "" : " ") + name + "_" + std::to_string(j + 1);
    }
  }
  const double cover = static_cast<double>(inside) / total;
  const double p0 = s.states[static_cast<std::size_t>(fitted_of[0])].rho.p0;
  const double p1 = s.states[static_cast<std::size_t>(fitted_of[2])].rho.p1;
  out.pass = cover >= 0.8 && p0 >= 0.9 && p1 >= 0.9;
  out.detail = std::to_string(inside) + "/" + std::to_string(total) + " inside 95% CIs (" + fmt(cover) +
               "), P(rho1=0) " + fmt(p0) + ", P(rho3=1) " + fmt(p1) + (missed.empty() ? "" : ", outside: " + missed);
  return out;
}

Outcome criterion3(const Options& o) {
  Outcome out;
  out.pass = true;
  for (int set = 1; set <= 3; ++set) {
    const auto& f = dataset_fit(set, o);
    const double acc = accuracy(f.summary.map_z, f.sim.z);
    const double need = set == 1 ? 0.90 : 0.85;
    out.pass = out.pass && acc >= need;
    out.detail += (set > 1 ? ", " : "") + std::string("dataset ") + std::to_string(set) + " " + fmt(acc) +
                  (acc >= need ? " >= " : " < ") + fmt(need, 2);
  }
  return out;
}

Outcome criterion4(const Options&) {
  const oracles::FfbsFixture f;
  const double tv = oracles::ffbs_tv(f.le, f.L, f.pi, f.n, 100000, 17);
  return {tv < 0.02, "TV distance " + fmt(tv, 4) + " over 1e5 draws (need < 0.02)"};
}

Outcome criterion5(const Options&) {
  const oracles::ConjugateFixture f;
  bool in_range = false;
  std::vector<oracles::MeanCheck> checks;
  for (const auto& part : {oracles::check_mu(f, 1), oracles::check_eta(f, 2), oracles::check_tau(f, 3, in_range),
                           oracles::check_sigma(f, 4)})
    checks.insert(checks.end(), part.begin(), part.end());
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : checks)
    if (c.rel_error() > worst) worst = c.rel_error(), worst_name = c.name;
  bool prior_ok = true;
  std::string rejected;
  for (const auto& st : oracles::check_empty_state(f, 5))
    if (!st.pass()) prior_ok = false, rejected += " " + st.name;
  Outcome out;
  out.pass = worst < 0.01 && in_range && prior_ok;
  out.detail = "largest relative error " + fmt(worst * 100, 3) + "% (" + worst_name + "), empty-state draws " +
               (prior_ok ? "match the prior" : "rejected:" + rejected);
  if (!in_range) out.detail += ", tau left (0,1)";
  return out;
}

Outcome criterion6(const Options&) {
  Outcome out;
  out.pass = true;
  for (const auto& m : gir::run(100000, 20, 2718)) {
    out.pass = out.pass && m.pass();
    out.detail += (out.detail.empty() ? "" : ", ") + m.name + " " + fmt(m.statistic, 2);
  }
  out.detail += " (critical KS 1.949, |z| 3.29)";
  return out;
}

Outcome criterion7(const Options&) {
  const double err = oracles::jacobian_max_error(10000, 7);
  const double integral = oracles::metric_density_integral();
  Outcome out;
  out.pass = err <= 1e-12 && std::abs(integral - 1.0) <= 1e-4;
  std::ostringstream d;
  d << "max |difference| " << err << " over 1e4 inputs, |integral - 1| " << std::abs(integral - 1.0);
  out.detail = d.str();
  return out;
}

Outcome criterion8(const Options&) {
  const double cover = oracles::ellipse_coverage({1.0, -2.0}, Mat2::sym(2.0, 0.7, 0.5), 0.95, 1000000, 8);
  const bool exact = chi2_2df_quantile(0.95) == -2.0 * std::log(0.05);
  Outcome out;
  out.pass = std::abs(cover - 0.95) <= 0.002 && exact;
  out.detail = "coverage " + fmt(cover, 4) + " of 1e6 draws, c " + (exact ? "equals" : "differs from") +
               " -2 ln 0.05";
  return out;
}

Outcome criterion9(const Options&) {
  Outcome out;
  out.pass = true;
  for (int set = 1; set <= 3; ++set) {
    const WcCrwConfig cfg = oracles::subsampling_set(set, 100000, static_cast<std::uint64_t>(set));
    const Path p = subsample_path(simulate_wc_crw(cfg), cfg.d);
    const auto theta = path_to_metrics(p).theta;
    const auto h = oracles::angle_histogram(theta, 36);
    bool ok = false;
    std::string what;
    if (set < 3) {
      ok = oracles::bimodal_zero_and_pi(h);
      double top = 0.0;
      std::size_t top_bin = 0;
      for (std::size_t b = 0; b < h.count.size(); ++b)
        if (h.count[b] > top) top = h.count[b], top_bin = b;
      what = ok ? "bimodal" : "not bimodal, highest bin at " + fmt(h.center(top_bin), 2) + " rad";
    } else {
      const double g1 = oracles::skewness(theta);
      ok = std::abs(g1) > 0.2;
      what = "skewness " + fmt(g1);
    }
    out.pass = out.pass && ok;
    out.detail += (set > 1 ? ", " : "") + std::string("set") + std::to_string(set) + " d=" +
                  std::to_string(cfg.d) + " " + what + (ok ? "" : " (FAIL)");
  }
  return out;
}

// ---- criteria that go through the command-line tool ----

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string sim_config_text(const SimConfig& c) {
  std::ostringstream o;
  auto num = [](double v) { return format_double(v); };
  o << "model = hmm\nK = " << c.K() << "\nT = " << c.T << "\nseed = " << c.seed << "\n";
  o << "s0 = " << num(c.s0.x) << " " << num(c.s0.y) << "\ns1 = " << num(c.s1.x) << " " << num(c.s1.y) << "\n";
  o << "pi =";
  for (double v : c.pi) o << " " << num(v);
  o << "\n";
  for (std::size_t j = 0; j < c.K(); ++j) {
    const auto& p = c.params[j];
    const std::string n = std::to_string(j + 1);
    o << "mu." << n << " = " << num(p.mu.x) << " " << num(p.mu.y) << "\n";
    o << "eta." << n << " = " << num(p.eta.x) << " " << num(p.eta.y) << "\n";
    o << "sigma." << n << " = " << num(p.sigma.a) << " " << num(p.sigma.b) << " " << num(p.sigma.d) << "\n";
    o << "tau." << n << " = " << num(p.tau) << "\nrho." << n << " = " << num(p.rho) << "\n";
  }
  return o.str();
}

// Simulated track plus a run config, written once to the work directory.
struct CliInputs {
  fs::path data, config;
};

const CliInputs& cli_inputs(const Options& o) {
  static std::optional<CliInputs> in;
  if (in) return *in;
  fs::create_directories(o.work);
  const fs::path sim_cfg = o.work / "sim.txt", sim_dir = o.work / "sim";
  write_file(sim_cfg, sim_config_text(oracles::test_dataset(1, 400, 5)));
  if (run(o.cli + " simulate --config " + sim_cfg.string() + " --out " + sim_dir.string()) != 0)
    throw DataError("simulate failed");
  RunConfig rc;
  rc.prior.L = 10;
  rc.prior.domain = {-8, 8, -8, 8};  // model units after centering and scaling
  rc.prior.mh_s0_sd = 1.6;
  rc.schedule = {1500, 500, 5, 42};
  rc.log_every = 0;
  write_file(o.work / "fit.txt", to_config_text(rc));
  in = CliInputs{sim_dir / "path.csv", o.work / "fit.txt"};
  return *in;
}

std::string fit_cmd(const Options& o, const fs::path& out, const std::string& extra = "") {
  const auto& in = cli_inputs(o);
  return o.cli + " fit --data " + in.data.string() + " --config " + in.config.string() + " --out " + out.string() +
         extra;
}

// Paths and contents of every regular file under `dir`.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return out;
}

Outcome criterion10(const Options& o) {
  const fs::path a = o.work / "det_a", b = o.work / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  if (run(fit_cmd(o, a)) != 0 || run(fit_cmd(o, b)) != 0) return {false, "fit exited with an error"};
  const auto sa = snapshot(a), sb = snapshot(b);
  std::string differ;
  for (const auto& [name, bytes] : sa) {
    const auto it = sb.find(name);
    if (it == sb.end() || it->second != bytes) differ += " " + name;
  }
  for (const auto& [name, bytes] : sb)
    if (!sa.count(name)) differ += " " + name;
  return {differ.empty() && !sa.empty(), std::to_string(sa.size()) + " files compared" +
                                             (differ.empty() ? ", all byte-identical" : ", differ:" + differ)};
}

Outcome criterion12(const Options& o) {
  Outcome out;
  out.pass = true;
  for (const auto& [variant, want] : {std::pair<std::string, double>{"crw_only", 1.0}, {"brw_only", 0.0}}) {
    const fs::path dir = o.work / variant;
    fs::remove_all(dir);
    if (run(fit_cmd(o, dir, " --variant " + variant)) != 0) return {false, variant + " fit exited with an error"};
    const PosteriorDraws d = read_draws(dir);
    std::size_t bad = 0, n = 0;
    for (const auto& r : d.records)
      for (const auto& p : r.params) {
        ++n;
        bad += p.rho != want;
      }
    out.pass = out.pass && bad == 0 && !d.empty();
    out.detail += (out.detail.empty() ? "" : ", ") + variant + ": " + std::to_string(n - bad) + "/" +
                  std::to_string(n) + " rho = " + fmt(want, 0) + " over " + std::to_string(d.size()) + " sweeps";
  }
  return out;
}

// ---- model ranking ----

Outcome criterion11(const Options&) {
  int wins = 0;
  std::string detail;
  for (int r = 1; r <= 10; ++r) {
    const auto sim = simulate_hmm(oracles::test_dataset(1, 1000, 100 + static_cast<std::uint64_t>(r)));
    const PriorConfig prior = oracles::padded_prior(sim.path, 20);
    McmcSchedule sch{5000, 2500, 5, static_cast<std::uint64_t>(r)};
    SamplerOptions full, single;
    single.single_state = true;
    const auto sf = model_scores(run_mcmc(sim.path, prior, sch, full), sim.path);
    const auto ss = model_scores(run_mcmc(sim.path, prior, sch, single), sim.path);
    const bool win = sf.dic5 < ss.dic5 && sf.icl > ss.icl;
    wins += win;
    if (!win) detail += " " + std::to_string(r);
  }
  return {wins >= 9, std::to_string(wins) + "/10 replicates favour the full model on both DIC5 and ICL" +
                         (detail.empty() ? "" : " (lost:" + detail + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the STAP-HMM library and tool"};
  Options o;
  bool strict = false;
  std::vector<int> only;
  std::string work = "acceptance_work";
#ifdef STAP_CLI_PATH
  o.cli = STAP_CLI_PATH;
#endif
  app.add_flag("--full", o.full, "run criterion 1 at T=7000 with 50k sweeps");
  app.add_flag("--strict", strict, "exit nonzero on any FAIL, known failures included");
  app.add_option("--only", only, "run only these criteria")->check(CLI::Range(1, 12));
  app.add_option("--cli", o.cli, "path to the stap executable");
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  o.work = work;

  const std::vector<std::function<Outcome(const Options&)>> criteria{
      criterion1, criterion2, criterion3,  criterion4,  criterion5,  criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
  const std::set<int> chosen(only.begin(), only.end());
  int failed = 0, unexpected = 0, passed = 0;
  for (int i = 1; i <= 12; ++i) {
    if (!chosen.empty() && !chosen.count(i)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[static_cast<std::size_t>(i - 1)](o);
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const bool known = kKnownFailures.count(i) > 0;
    std::printf("criterion %2d %s  %s [%.1f s]%s\n", i, r.pass ? "PASS" : "FAIL", r.detail.c_str(),
                seconds_since(t0), !r.pass && known ? " (known failure)" : "");
    std::fflush(stdout);
    if (r.pass) {
      ++passed;
      if (known) {
        std::printf("  criterion %d is listed as a known failure but passed; update the list\n", i);
        ++unexpected;
      }
    } else {
      ++failed;
      if (!known) ++unexpected;
    }
  }
  std::printf("%d passed, %d failed\n", passed, failed);
  if (strict) return failed == 0 ? 0 : 1;
  return unexpected == 0 ? 0 : 1;
}
