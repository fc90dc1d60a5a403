#pragma once

// Flat `key = value` configuration files. `#` starts a comment, numbers may
// be written as fractions (`1/3`), vectors and matrices are space separated,
// and any key that is not recognised is an error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "stap/draws.hpp"
#include "stap/error.hpp"
#include "stap/priors.hpp"
#include "stap/sampler.hpp"
#include "stap/simulator.hpp"
#include "stap/track_io.hpp"

namespace stap {

class KeyValues {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
  };

  static KeyValues parse(std::istream& in, const std::string& source) {
    KeyValues kv;
    kv.source_ = source;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      const auto hash = line.find('#');
      const auto s = detail::trim(std::string_view(line).substr(0, hash));
      if (s.empty()) continue;
      const auto eq = s.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(source + ":" + std::to_string(ln) + ": expected 'key = value'");
      const std::string key(detail::trim(s.substr(0, eq)));
      const std::string value(detail::trim(s.substr(eq + 1)));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(ln) + ": empty key");
      if (kv.entries_.count(key))
        throw ConfigError(source + ":" + std::to_string(ln) + ": duplicate key '" + key + "'");
      kv.entries_[key] = {value, ln, false};
    }
    return kv;
  }

  static KeyValues parse_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    return parse(in, source);
  }

  static KeyValues load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read " + file);
    return parse(in, file);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const std::string* raw(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second.value;
  }

  std::vector<double> numbers(const std::string& key, std::size_t n) {
    const std::string* v = raw(key);
    std::vector<double> out;
    std::istringstream in(*v);
    std::string tok;
    while (in >> tok) {
      const auto parsed = parse_number(tok);
      if (!parsed) fail(key, "malformed number '" + tok + "'");
      out.push_back(*parsed);
    }
    if (n > 0 && out.size() != n) fail(key, "expected " + std::to_string(n) + " numbers, found " + std::to_string(out.size()));
    return out;
  }

  void get(const std::string& key, double& out) {
    if (has(key)) out = numbers(key, 1)[0];
  }
  void get(const std::string& key, Vec2& out) {
    if (!has(key)) return;
    const auto v = numbers(key, 2);
    out = {v[0], v[1]};
  }
  // 2x2 symmetric matrices: "a b d" (upper triangle) or "a b c d" with b == c.
  void get(const std::string& key, Mat2& out) {
    if (!has(key)) return;
    const auto v = numbers(key, 0);
    if (v.size() == 3) out = Mat2::sym(v[0], v[1], v[2]);
    else if (v.size() == 4 && v[1] == v[2]) out = Mat2::sym(v[0], v[1], v[3]);
    else fail(key, "expected a symmetric 2x2 matrix as 'a b d' or 'a b b d'");
  }
  template <class Int>
    requires std::is_integral_v<Int>
  void get(const std::string& key, Int& out) {
    if (!has(key)) return;
    const double v = numbers(key, 1)[0];
    if (v != std::floor(v) || v < 0 || v > 9.0e15) fail(key, "expected a nonnegative integer");
    out = static_cast<Int>(v);
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const std::string v = *raw(key);
    if (v == "true" || v == "1" || v == "yes") out = true;
    else if (v == "false" || v == "0" || v == "no") out = false;
    else fail(key, "expected true or false");
  }
  void get(const std::string& key, std::string& out) {
    if (has(key)) out = *raw(key);
  }

  /// Throws on the first key nobody asked for.
  void reject_unused() const {
    const Entry* first = nullptr;
    std::string name;
    for (const auto& [k, e] : entries_)
      if (!e.used && (!first || e.line < first->line)) {
        first = &e;
        name = k;
      }
    if (first) throw ConfigError(source_ + ":" + std::to_string(first->line) + ": unknown key '" + name + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const auto it = entries_.find(key);
    throw ConfigError(source_ + ":" + std::to_string(it == entries_.end() ? 0 : it->second.line) + ": " + key +
                      ": " + msg);
  }

  static std::optional<double> parse_number(std::string_view tok) {
    const auto slash = tok.find('/');
    if (slash == std::string_view::npos) return detail::parse_double(tok);
    const auto a = detail::parse_double(tok.substr(0, slash));
    const auto b = detail::parse_double(tok.substr(slash + 1));
    if (!a || !b || *b == 0.0) return std::nullopt;
    return *a / *b;
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

enum class Variant { full, crw_only, brw_only };

inline Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "crw_only") return Variant::crw_only;
  if (s == "brw_only") return Variant::brw_only;
  throw ConfigError("unknown variant '" + s + "' (expected full, crw_only or brw_only)");
}

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::crw_only: return "crw_only";
    case Variant::brw_only: return "brw_only";
    default: return "full";
  }
}

/// rho prior weights (w0, w1, w01) implied by a variant.
inline RhoWeights variant_weights(Variant v) {
  RhoWeights w;
  if (v == Variant::crw_only) w = {0.0, 1.0, 0.0};
  if (v == Variant::brw_only) w = {1.0, 0.0, 0.0};
  return w;
}

struct RunConfig {
  PriorConfig prior;
  McmcSchedule schedule;
  bool center_scale = true;
  Variant variant = Variant::full;
  std::size_t init_states = 10;
  double rho_atom_mass = 0.1;
  std::size_t log_every = 1000;
  bool single_state = false;
  double ridge_sd = 1.0;

  SamplerOptions sampler_options() const {
    SamplerOptions o;
    o.rho_atom_mass = rho_atom_mass;
    o.init_states = init_states;
    o.log_every = log_every;
    o.single_state = single_state;
    o.ridge_sd = ridge_sd;
    return o;
  }

  /// Applies the variant to the rho prior weights.
  void set_variant(Variant v) {
    variant = v;
    if (v != Variant::full) prior.rho_weights = variant_weights(v);
  }

  void validate() const {
    prior.validate();
    schedule.validate();
    if (!(rho_atom_mass > 0.0 && rho_atom_mass < 0.5)) throw ConfigError("rho_atom_mass must lie in (0, 0.5)");
    if (init_states < 1) throw ConfigError("init_states must be at least 1");
    if (!(ridge_sd >= 0.0)) throw ConfigError("ridge_sd must be nonnegative");
  }
};

inline RunConfig parse_run_config(KeyValues kv) {
  RunConfig c;
  auto& p = c.prior;
  kv.get("B_mu", p.B_mu);
  kv.get("W_mu", p.W_mu);
  kv.get("B_eta", p.B_eta);
  kv.get("W_eta", p.W_eta);
  kv.get("a_sigma", p.a_sigma);
  kv.get("C_sigma", p.C_sigma);
  if (kv.has("rho_weights")) {
    const auto w = kv.numbers("rho_weights", 3);
    p.rho_weights = {w[0], w[1], w[2]};
  }
  kv.get("a1", p.a1);
  kv.get("b1", p.b1);
  kv.get("a2", p.a2);
  kv.get("b2", p.b2);
  kv.get("a3", p.a3);
  kv.get("b3", p.b3);
  if (kv.has("domain")) {
    const auto d = kv.numbers("domain", 4);
    p.domain = {d[0], d[1], d[2], d[3]};
  }
  kv.get("L", p.L);
  kv.get("mh_c", p.mh_c);
  p.mh_s0_sd = 0.1 * p.domain.width();
  kv.get("mh_s0_sd", p.mh_s0_sd);
  kv.get("iterations", c.schedule.iterations);
  kv.get("burnin", c.schedule.burnin);
  kv.get("thin", c.schedule.thin);
  kv.get("seed", c.schedule.seed);
  kv.get("center_scale", c.center_scale);
  kv.get("init_states", c.init_states);
  kv.get("rho_atom_mass", c.rho_atom_mass);
  kv.get("log_every", c.log_every);
  kv.get("single_state", c.single_state);
  kv.get("ridge_sd", c.ridge_sd);
  if (kv.has("variant")) {
    const std::string v = *kv.raw("variant");
    try {
      c.set_variant(parse_variant(v));
    } catch (const ConfigError& e) {
      kv.fail("variant", e.what());
    }
  }
  kv.reject_unused();
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& file) { return parse_run_config(KeyValues::load(file)); }

/// Text form that parses back to the same configuration.
inline std::string to_config_text(const RunConfig& c) {
  const auto& p = c.prior;
  std::ostringstream o;
  auto num = [](double v) { return format_double(v); };
  auto vec = [&](Vec2 v) { return num(v.x) + " " + num(v.y); };
  auto mat = [&](const Mat2& m) { return num(m.a) + " " + num(m.b) + " " + num(m.d); };
  o << "B_mu = " << vec(p.B_mu) << "\n";
  o << "W_mu = " << mat(p.W_mu) << "\n";
  o << "B_eta = " << vec(p.B_eta) << "\n";
  o << "W_eta = " << mat(p.W_eta) << "\n";
  o << "a_sigma = " << num(p.a_sigma) << "\n";
  o << "C_sigma = " << mat(p.C_sigma) << "\n";
  o << "rho_weights = " << num(p.rho_weights.w0) << " " << num(p.rho_weights.w1) << " " << num(p.rho_weights.w01)
    << "\n";
  o << "a1 = " << num(p.a1) << "\nb1 = " << num(p.b1) << "\n";
  o << "a2 = " << num(p.a2) << "\nb2 = " << num(p.b2) << "\n";
  o << "a3 = " << num(p.a3) << "\nb3 = " << num(p.b3) << "\n";
  o << "domain = " << num(p.domain.xmin) << " " << num(p.domain.xmax) << " " << num(p.domain.ymin) << " "
    << num(p.domain.ymax) << "\n";
  o << "L = " << p.L << "\n";
  o << "mh_c = " << num(p.mh_c) << "\n";
  o << "mh_s0_sd = " << num(p.mh_s0_sd) << "\n";
  o << "iterations = " << c.schedule.iterations << "\n";
  o << "burnin = " << c.schedule.burnin << "\n";
  o << "thin = " << c.schedule.thin << "\n";
  o << "seed = " << c.schedule.seed << "\n";
  o << "center_scale = " << (c.center_scale ? "true" : "false") << "\n";
  o << "init_states = " << c.init_states << "\n";
  o << "rho_atom_mass = " << num(c.rho_atom_mass) << "\n";
  o << "log_every = " << c.log_every << "\n";
  o << "single_state = " << (c.single_state ? "true" : "false") << "\n";
  o << "ridge_sd = " << num(c.ridge_sd) << "\n";
  // The weights above already carry the variant; listing it again is harmless.
  o << "variant = " << to_string(c.variant) << "\n";
  return o.str();
}

/// What `simulate` produces: an HMM path or a wrapped-Cauchy walk.
struct SimulationSpec {
  enum class Model { hmm, wc_crw } model = Model::hmm;
  SimConfig hmm;
  WcCrwConfig crw;
};

inline SimulationSpec parse_simulation_spec(KeyValues kv) {
  SimulationSpec s;
  std::string model = "hmm";
  kv.get("model", model);
  if (model == "hmm") {
    s.model = SimulationSpec::Model::hmm;
    std::size_t K = 0;
    kv.get("K", K);
    if (K < 1) kv.fail("K", "need K >= 1");
    kv.get("T", s.hmm.T);
    kv.get("seed", s.hmm.seed);
    kv.get("s0", s.hmm.s0);
    kv.get("s1", s.hmm.s1);
    if (!kv.has("pi")) kv.fail("pi", "missing transition matrix 'pi'");
    s.hmm.pi = kv.numbers("pi", K * K);
    s.hmm.params.resize(K);
    for (std::size_t j = 0; j < K; ++j) {
      const std::string n = std::to_string(j + 1);
      auto& p = s.hmm.params[j];
      for (const char* key : {"mu.", "eta.", "sigma.", "tau.", "rho."})
        if (!kv.has(key + n)) throw ConfigError("simulation config: missing '" + std::string(key) + n + "'");
      kv.get("mu." + n, p.mu);
      kv.get("eta." + n, p.eta);
      kv.get("sigma." + n, p.sigma);
      kv.get("tau." + n, p.tau);
      kv.get("rho." + n, p.rho);
    }
    kv.reject_unused();
    s.hmm.validate();
  } else if (model == "wc_crw") {
    s.model = SimulationSpec::Model::wc_crw;
    auto& c = s.crw;
    kv.get("lambda", c.lambda);
    kv.get("eps", c.eps);
    kv.get("shape", c.a);
    kv.get("scale", c.b);
    kv.get("T_star", c.T_star);
    kv.get("d", c.d);
    kv.get("seed", c.seed);
    std::string conv = "mean_resultant_length";
    kv.get("convention", conv);
    if (conv == "mean_resultant_length") c.convention = WrappedCauchyConvention::mean_resultant_length;
    else if (conv == "scale") c.convention = WrappedCauchyConvention::scale;
    else kv.fail("convention", "expected mean_resultant_length or scale");
    kv.reject_unused();
    c.validate();
  } else {
    kv.fail("model", "expected hmm or wc_crw");
  }
  return s;
}

inline SimulationSpec load_simulation_spec(const std::string& file) {
  return parse_simulation_spec(KeyValues::load(file));
}

}  // namespace stap
