#pragma once

// Draw directories: one CSV per parameter family plus manifest.txt, which
// carries the schedule, dimensions and a 64-bit FNV-1a hash of every file.
// Doubles are written in shortest round-trip form, so reading back gives
// the same bits. Nothing time-dependent is written.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stap/config.hpp"
#include "stap/draws.hpp"
#include "stap/error.hpp"
#include "stap/track_io.hpp"

namespace stap {

inline constexpr const char* kDrawSchema = "stap-draws/1";

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15];
  return s;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
  if (!out) throw DataError("write failed for " + p.string());
}

inline std::string file_hash(const std::filesystem::path& p) { return hex64(fnv1a(read_file(p))); }

/// Draw families and their files, in manifest order.
inline const std::vector<std::pair<std::string, std::string>>& draw_families() {
  static const std::vector<std::pair<std::string, std::string>> f = {
      {"hyper", "hyper.csv"}, {"mu", "mu.csv"},     {"eta", "eta.csv"},   {"sigma", "sigma.csv"},
      {"tau", "tau.csv"},     {"rho", "rho.csv"},   {"beta", "beta.csv"}, {"pi", "pi.csv"},
      {"z", "z.csv"},         {"imputed", "imputed.csv"}};
  return f;
}

/// Extra manifest lines (e.g. config and data hashes, preprocessing
/// constants). Keys must start with "meta." or "file."; "file." entries
/// name a file in the directory whose hash is checked on read.
using ManifestExtras = std::vector<std::pair<std::string, std::string>>;

inline void write_draws(const PosteriorDraws& d, const std::filesystem::path& dir, const ManifestExtras& extra = {}) {
  std::filesystem::create_directories(dir);
  const auto L = static_cast<std::size_t>(d.L);
  std::map<std::string, std::ostringstream> out;
  auto f = [](double v) { return format_double(v); };
  out["hyper"] << "sweep,alpha,kappa,gamma,loglik,s0_x,s0_y\n";
  out["mu"] << "sweep,state,x,y\n";
  out["eta"] << "sweep,state,x,y\n";
  out["sigma"] << "sweep,state,s11,s12,s22\n";
  out["tau"] << "sweep,state,tau\n";
  out["rho"] << "sweep,state,rho\n";
  out["beta"] << "sweep,state,beta\n";
  out["pi"] << "sweep,from,to,p\n";
  out["imputed"] << "sweep,index,x,y\n";
  auto& z = out["z"];
  z << "sweep";
  for (std::size_t i = 1; i < d.T; ++i) z << ",z" << i;
  z << "\n";
  for (const auto& r : d.records) {
    if (r.params.size() != L || r.pi.size() != L * L || r.beta.size() != L || r.z.size() + 1 != d.T ||
        r.imputed.size() != d.missing_index.size())
      throw DataError("draw record of sweep " + std::to_string(r.sweep) + " has inconsistent dimensions");
    const std::string sw = std::to_string(r.sweep);
    out["hyper"] << sw << ',' << f(r.alpha) << ',' << f(r.kappa) << ',' << f(r.gamma) << ',' << f(r.loglik) << ','
                 << f(r.s0.x) << ',' << f(r.s0.y) << '\n';
    for (std::size_t j = 0; j < L; ++j) {
      const auto& p = r.params[j];
      const std::string st = sw + ',' + std::to_string(j + 1) + ',';
      out["mu"] << st << f(p.mu.x) << ',' << f(p.mu.y) << '\n';
      out["eta"] << st << f(p.eta.x) << ',' << f(p.eta.y) << '\n';
      out["sigma"] << st << f(p.sigma.a) << ',' << f(p.sigma.b) << ',' << f(p.sigma.d) << '\n';
      out["tau"] << st << f(p.tau) << '\n';
      out["rho"] << st << f(p.rho) << '\n';
      out["beta"] << st << f(r.beta[j]) << '\n';
      for (std::size_t k = 0; k < L; ++k) out["pi"] << st << (k + 1) << ',' << f(r.pi[j * L + k]) << '\n';
    }
    z << sw;
    for (int s : r.z) z << ',' << (s + 1);
    z << '\n';
    for (std::size_t m = 0; m < r.imputed.size(); ++m)
      out["imputed"] << sw << ',' << (d.missing_index[m] + 1) << ',' << f(r.imputed[m].x) << ','
                     << f(r.imputed[m].y) << '\n';
  }

  std::ostringstream man;
  man << "schema = " << kDrawSchema << "\n";
  man << "seed = " << d.schedule.seed << "\n";
  man << "iterations = " << d.schedule.iterations << "\n";
  man << "burnin = " << d.schedule.burnin << "\n";
  man << "thin = " << d.schedule.thin << "\n";
  man << "L = " << d.L << "\n";
  man << "T = " << d.T << "\n";
  man << "records = " << d.records.size() << "\n";
  man << "missing_index =";
  for (std::size_t m : d.missing_index) man << ' ' << (m + 1);
  man << "\n";
  const auto& a = d.acceptance;
  man << "accept.rho = " << a.rho_accepted << ' ' << a.rho_proposed << "\n";
  man << "accept.missing = " << a.missing_accepted << ' ' << a.missing_proposed << "\n";
  man << "accept.s0 = " << a.s0_accepted << ' ' << a.s0_proposed << "\n";
  for (const auto& [family, file] : draw_families()) {
    const std::string text = out[family].str();
    write_file(dir / file, text);
    man << "file." << file << " = " << hex64(fnv1a(text)) << "\n";
  }
  for (const auto& [k, v] : extra) {
    if (k.rfind("meta.", 0) != 0 && k.rfind("file.", 0) != 0)
      throw ConfigError("manifest extra '" + k + "' must start with meta. or file.");
    man << k << " = " << v << "\n";
  }
  write_file(dir / "manifest.txt", man.str());
}

namespace detail {

struct CsvTable {
  std::string name;
  std::vector<std::vector<std::string_view>> rows;
  std::string text;  // owns the bytes rows point into
};

inline std::size_t to_size(std::string_view s, const std::string& where) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw DataError(where + ": bad integer '" + std::string(s) + "'");
  return v;
}

inline double to_double(std::string_view s, const std::string& where) {
  const auto v = parse_double(s);
  if (!v) throw DataError(where + ": bad number '" + std::string(s) + "'");
  return *v;
}

}  // namespace detail

/// Reads the manifest into a key-value map after checking the schema.
inline std::map<std::string, std::string> read_manifest(const std::filesystem::path& dir) {
  const auto file = dir / "manifest.txt";
  if (!std::filesystem::exists(file)) throw DataError("no manifest.txt in " + dir.string());
  std::istringstream in(read_file(file));
  std::map<std::string, std::string> m;
  std::string line;
  while (std::getline(in, line)) {
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw DataError("malformed manifest line '" + std::string(s) + "'");
    m[std::string(detail::trim(s.substr(0, eq)))] = std::string(detail::trim(s.substr(eq + 1)));
  }
  if (m["schema"] != kDrawSchema)
    throw DataError("manifest schema '" + m["schema"] + "' does not match " + kDrawSchema);
  return m;
}

inline PosteriorDraws read_draws(const std::filesystem::path& dir) {
  auto man = read_manifest(dir);
  auto need = [&](const std::string& k) -> const std::string& {
    const auto it = man.find(k);
    if (it == man.end()) throw DataError("manifest is missing '" + k + "'");
    return it->second;
  };
  // Every listed file must be present and unchanged.
  for (const auto& [family, file] : draw_families()) {
    if (!man.count("file." + file)) throw DataError("manifest does not list draw family '" + family + "'");
    if (!std::filesystem::exists(dir / file))
      throw DataError("draw family '" + family + "' is missing (" + (dir / file).string() + ")");
  }
  for (const auto& [k, v] : man)
    if (k.rfind("file.", 0) == 0) {
      const std::string file = k.substr(5);
      if (!std::filesystem::exists(dir / file)) throw DataError(file + " listed in the manifest is missing");
      if (file_hash(dir / file) != v) throw DataError("hash mismatch for " + file + ": file or manifest was altered");
    }

  PosteriorDraws d;
  const std::string where = (dir / "manifest.txt").string();
  d.schedule.seed = std::stoull(need("seed"));
  d.schedule.iterations = detail::to_size(need("iterations"), where);
  d.schedule.burnin = detail::to_size(need("burnin"), where);
  d.schedule.thin = detail::to_size(need("thin"), where);
  d.L = static_cast<int>(detail::to_size(need("L"), where));
  d.T = detail::to_size(need("T"), where);
  const std::size_t n = detail::to_size(need("records"), where);
  {
    std::istringstream in(need("missing_index"));
    std::size_t m;
    while (in >> m) d.missing_index.push_back(m - 1);
  }
  auto pair = [&](const std::string& k, std::uint64_t& acc, std::uint64_t& prop) {
    std::istringstream in(need(k));
    if (!(in >> acc >> prop)) throw DataError(where + ": bad '" + k + "'");
  };
  pair("accept.rho", d.acceptance.rho_accepted, d.acceptance.rho_proposed);
  pair("accept.missing", d.acceptance.missing_accepted, d.acceptance.missing_proposed);
  pair("accept.s0", d.acceptance.s0_accepted, d.acceptance.s0_proposed);

  const auto L = static_cast<std::size_t>(d.L);
  d.records.resize(n);
  for (auto& r : d.records) {
    r.params.resize(L);
    r.pi.resize(L * L);
    r.beta.resize(L);
    r.imputed.resize(d.missing_index.size());
  }

  auto load = [&](const std::string& family, std::size_t cols, std::size_t rows_per_record, auto&& fill) {
    const auto path = dir / (family + ".csv");
    const std::string text = read_file(path);
    std::size_t row = 0;
    std::size_t start = text.find('\n') + 1;  // skip header
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const std::string_view line(text.data() + start, end - start);
      start = end + 1;
      if (line.empty()) continue;
      const std::string at = path.string() + ":" + std::to_string(row + 2);
      const auto c = detail::split(line, ',');
      if (c.size() != cols) throw DataError(at + ": expected " + std::to_string(cols) + " columns");
      const std::size_t rec = row / rows_per_record;
      if (rec >= n) throw DataError(at + ": more rows than the manifest's record count");
      fill(d.records[rec], row % rows_per_record, c, at);
      ++row;
    }
    if (row != n * rows_per_record) throw DataError(path.string() + ": expected " + std::to_string(n * rows_per_record) + " rows");
  };
  using Cells = std::vector<std::string_view>;
  auto num = [](const Cells& c, std::size_t i, const std::string& at) { return detail::to_double(c[i], at); };
  load("hyper", 7, 1, [&](DrawRecord& r, std::size_t, const Cells& c, const std::string& at) {
    r.sweep = detail::to_size(c[0], at);
    r.alpha = num(c, 1, at);
    r.kappa = num(c, 2, at);
    r.gamma = num(c, 3, at);
    r.loglik = num(c, 4, at);
    r.s0 = {num(c, 5, at), num(c, 6, at)};
  });
  load("mu", 4, L, [&](DrawRecord& r, std::size_t j, const Cells& c, const std::string& at) {
    r.params[j].mu = {num(c, 2, at), num(c, 3, at)};
  });
  load("eta", 4, L, [&](DrawRecord& r, std::size_t j, const Cells& c, const std::string& at) {
    r.params[j].eta = {num(c, 2, at), num(c, 3, at)};
  });
  load("sigma", 5, L, [&](DrawRecord& r, std::size_t j, const Cells& c, const std::string& at) {
    r.params[j].sigma = Mat2::sym(num(c, 2, at), num(c, 3, at), num(c, 4, at));
  });
  load("tau", 3, L, [&](DrawRecord& r, std::size_t j, const Cells& c, const std::string& at) {
    r.params[j].tau = num(c, 2, at);
  });
  load("rho", 3, L, [&](DrawRecord& r, std::size_t j, const Cells& c, const std::string& at) {
    r.params[j].rho = num(c, 2, at);
  });
  load("beta", 3, L, [&](DrawRecord& r, std::size_t j, const Cells& c, const std::string& at) {
    r.beta[j] = num(c, 2, at);
  });
  load("pi", 4, L * L, [&](DrawRecord& r, std::size_t j, const Cells& c, const std::string& at) {
    r.pi[j] = num(c, 3, at);
  });
  load("z", d.T, 1, [&](DrawRecord& r, std::size_t, const Cells& c, const std::string& at) {
    r.z.resize(d.T - 1);
    for (std::size_t i = 1; i < d.T; ++i) {
      const std::size_t s = detail::to_size(c[i], at);
      if (s < 1 || s > L) throw DataError(at + ": state " + std::to_string(s) + " outside 1.." + std::to_string(L));
      r.z[i - 1] = static_cast<int>(s - 1);
    }
  });
  if (!d.missing_index.empty())
    load("imputed", 4, d.missing_index.size(), [&](DrawRecord& r, std::size_t m, const Cells& c, const std::string& at) {
      r.imputed[m] = {num(c, 2, at), num(c, 3, at)};
    });
  return d;
}

}  // namespace stap
