// stap: simulate, fit, summarize and subsample animal tracks.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "stap/stap.hpp"

namespace fs = std::filesystem;
using namespace stap;

namespace {

std::vector<int> load_states(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read " + file);
  std::string line;
  std::getline(in, line);
  if (detail::trim(line) != "index,state") throw DataError(file + ": expected header 'index,state'");
  std::vector<int> z;
  std::size_t ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (detail::trim(line).empty()) continue;
    const auto c = detail::split(detail::trim(line), ',');
    const auto v = c.size() == 2 ? detail::parse_double(c[1]) : std::nullopt;
    if (!v || *v < 1) throw DataError(file + ":" + std::to_string(ln) + ": bad state");
    z.push_back(static_cast<int>(*v) - 1);
  }
  return z;
}

std::string states_csv(const std::vector<int>& z) {
  std::ostringstream o;
  o << "index,state\n";
  for (std::size_t i = 0; i < z.size(); ++i) o << i + 1 << ',' << z[i] + 1 << '\n';
  return o.str();
}

std::string track_text(const Path& p) {
  std::ostringstream o;
  write_track_csv(o, p);
  return o.str();
}

int cmd_simulate(const std::string& config, const fs::path& out) {
  const std::string text = read_file(config);
  const SimulationSpec spec = parse_simulation_spec(KeyValues::parse_text(text, config));
  fs::create_directories(out);
  std::ostringstream man;
  man << "command = simulate\n";
  man << "config_hash = " << hex64(fnv1a(text)) << "\n";
  if (spec.model == SimulationSpec::Model::hmm) {
    const auto sim = simulate_hmm(spec.hmm);
    write_file(out / "path.csv", track_text(sim.path));
    write_file(out / "states.csv", states_csv(sim.z));
    man << "model = hmm\nseed = " << spec.hmm.seed << "\n";
  } else {
    Path p = simulate_wc_crw(spec.crw);
    p = subsample_path(p, spec.crw.d);
    write_file(out / "path.csv", track_text(p));
    man << "model = wc_crw\nseed = " << spec.crw.seed << "\n";
  }
  write_file(out / "config.txt", text);
  man << "file.path.csv = " << file_hash(out / "path.csv") << "\n";
  write_file(out / "manifest.txt", man.str());
  return 0;
}

int cmd_fit(const std::string& data, const std::string& config, const fs::path& out,
            const std::optional<std::string>& variant, const std::optional<std::uint64_t>& seed, bool single_state) {
  const std::string cfg_text = read_file(config);
  RunConfig rc = parse_run_config(KeyValues::parse_text(cfg_text, config));
  if (variant) rc.set_variant(parse_variant(*variant));
  if (seed) rc.schedule.seed = *seed;
  if (single_state) rc.single_state = true;
  rc.validate();

  const std::string data_text = read_file(data);
  std::istringstream din(data_text);
  const Preprocessed prep = preprocess(parse_track(din, data), rc.center_scale);

  const PosteriorDraws draws = run_mcmc(prep.path, rc.prior, rc.schedule, rc.sampler_options());

  fs::create_directories(out);
  const std::string resolved = to_config_text(rc);
  write_file(out / "config.txt", resolved);
  write_file(out / "path.csv", track_text(prep.path));
  ManifestExtras extra = {
      {"meta.config_hash", hex64(fnv1a(cfg_text))},
      {"meta.data_hash", hex64(fnv1a(data_text))},
      {"meta.variant", to_string(rc.variant)},
      {"meta.center", format_double(prep.center.x) + " " + format_double(prep.center.y)},
      {"meta.scale", format_double(prep.scale)},
      {"meta.interval", format_double(prep.interval)},
      {"meta.leading_trimmed", std::to_string(prep.leading_trimmed)},
      {"meta.trailing_trimmed", std::to_string(prep.trailing_trimmed)},
      {"file.config.txt", file_hash(out / "config.txt")},
      {"file.path.csv", file_hash(out / "path.csv")},
  };
  write_draws(draws, out, extra);
  const auto kd = posterior_K(draws);
  std::cerr << "modal K " << kd.mode << " with probability " << format_number(kd.at(kd.mode)) << "\n";
  return 0;
}

int cmd_summarize(const fs::path& draws_dir, const fs::path& out, const std::optional<std::string>& truth,
                  double level, std::size_t samples, std::uint64_t seed) {
  const PosteriorDraws d = read_draws(draws_dir);
  if (d.empty()) throw DataError("no retained draws in " + draws_dir.string());
  const Path path = track_to_path(load_track((draws_dir / "path.csv").string()));
  if (path.size() != d.T) throw DataError("path.csv length does not match the draws");
  ReportOptions opt;
  opt.level = level;
  opt.predictive_samples = samples;
  opt.seed = seed;
  if (truth) {
    opt.true_z = load_states(*truth);
    if (opt.true_z->size() != d.T - 1)
      throw DataError(*truth + ": expected " + std::to_string(d.T - 1) + " states, found " +
                      std::to_string(opt.true_z->size()));
  }
  write_report(d, path, out, opt);
  std::cout << read_file(out / "summary.txt");
  return 0;
}

int cmd_subsample(const std::string& data, std::size_t d, const std::string& out) {
  if (d < 1) throw ConfigError("--d must be at least 1");
  const RawTrack t = load_track(data);
  std::ostringstream o;
  o << "time,x,y\n";
  for (std::size_t i = d - 1; i < t.size(); i += d) {
    o << format_double(t.time[i]) << ',';
    if (t.missing[i]) o << ',';
    else o << format_double(t.x[i]) << ',' << format_double(t.y[i]);
    o << '\n';
  }
  write_file(out, o.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit and simulate STAP hidden Markov models of animal movement"};
  app.require_subcommand(1);

  std::string config, data, out, draws_dir, truth_file, variant;
  std::uint64_t seed = 0, report_seed = 1;
  std::size_t d = 1, samples = 2000;
  double level = 0.95;
  bool single_state = false;

  auto* sim = app.add_subcommand("simulate", "Simulate a path from a model config");
  sim->add_option("--config", config, "simulation config file")->required();
  sim->add_option("--out", out, "output directory")->required();

  auto* fit = app.add_subcommand("fit", "Run the MCMC sampler on a track");
  fit->add_option("--data", data, "track CSV with header time,x,y")->required();
  fit->add_option("--config", config, "run config file")->required();
  fit->add_option("--out", out, "output directory for draws")->required();
  auto* var_opt = fit->add_option("--variant", variant, "full, crw_only or brw_only")
                      ->check(CLI::IsMember({"full", "crw_only", "brw_only"}));
  auto* seed_opt = fit->add_option("--seed", seed, "override the config seed");
  fit->add_flag("--single-state", single_state, "force every step into one behaviour");

  auto* sum = app.add_subcommand("summarize", "Summaries, scores and plot geometry from a draw directory");
  sum->add_option("--draws", draws_dir, "draw directory written by fit")->required();
  sum->add_option("--out", out, "output directory")->required();
  auto* truth_opt = sum->add_option("--truth", truth_file, "true states (index,state) for accuracy");
  sum->add_option("--level", level, "credible level")->check(CLI::Range(0.5, 0.999999));
  sum->add_option("--samples", samples, "predictive samples per correlated-walk state");
  sum->add_option("--seed", report_seed, "seed for predictive samples");

  auto* sub = app.add_subcommand("subsample", "Keep every d-th row of a track");
  sub->add_option("--data", data, "track CSV")->required();
  sub->add_option("--d", d, "subsampling factor")->required()->check(CLI::PositiveNumber);
  sub->add_option("--out", out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(config, out);
    if (*fit)
      return cmd_fit(data, config, out, *var_opt ? std::optional<std::string>(variant) : std::nullopt,
                     *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt, single_state);
    if (*sum)
      return cmd_summarize(draws_dir, out, *truth_opt ? std::optional<std::string>(truth_file) : std::nullopt, level,
                           samples, report_seed);
    if (*sub) return cmd_subsample(data, d, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
