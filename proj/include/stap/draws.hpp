#pragma once

#include <cstdint>
#include <vector>

#include "stap/emission.hpp"
#include "stap/error.hpp"
#include "stap/linalg.hpp"

namespace stap {

struct McmcSchedule {
  std::size_t iterations = 125000;
  std::size_t burnin = 75000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;

  void validate() const {
    if (iterations <= burnin) throw ConfigError("iterations must exceed burnin");
    if (thin < 1) throw ConfigError("thin must be at least 1");
  }
  std::size_t retained() const { return (iterations - burnin) / thin; }
  bool keeps(std::size_t sweep) const { return sweep > burnin && (sweep - burnin) % thin == 0; }
};

/// One retained sweep. States are 0-based internally.
struct DrawRecord {
  std::size_t sweep = 0;
  std::vector<StapParams> params;  // L entries
  std::vector<double> pi;          // L x L row-major
  std::vector<double> beta;        // L
  double alpha = 0.0;
  double kappa = 0.0;
  double gamma = 0.0;
  std::vector<int> z;         // one state per step (T - 1)
  Vec2 s0;
  std::vector<Vec2> imputed;  // aligned with PosteriorDraws::missing_index
  double loglik = 0.0;        // complete-data emission log-likelihood, coordinate form

  friend bool operator==(const DrawRecord&, const DrawRecord&) = default;
};

struct AcceptanceCounts {
  std::uint64_t rho_proposed = 0, rho_accepted = 0;
  std::uint64_t missing_proposed = 0, missing_accepted = 0;
  std::uint64_t s0_proposed = 0, s0_accepted = 0;

  static double rate(std::uint64_t a, std::uint64_t p) { return p == 0 ? 0.0 : static_cast<double>(a) / p; }
  double rho_rate() const { return rate(rho_accepted, rho_proposed); }
  double missing_rate() const { return rate(missing_accepted, missing_proposed); }
  double s0_rate() const { return rate(s0_accepted, s0_proposed); }
  friend bool operator==(const AcceptanceCounts&, const AcceptanceCounts&) = default;
};

struct PosteriorDraws {
  McmcSchedule schedule;
  int L = 0;
  std::size_t T = 0;  // path length
  std::vector<std::size_t> missing_index;
  std::vector<DrawRecord> records;
  AcceptanceCounts acceptance;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }

  friend bool operator==(const PosteriorDraws& a, const PosteriorDraws& b) {
    return a.schedule.iterations == b.schedule.iterations && a.schedule.burnin == b.schedule.burnin &&
           a.schedule.thin == b.schedule.thin && a.schedule.seed == b.schedule.seed && a.L == b.L && a.T == b.T &&
           a.missing_index == b.missing_index && a.records == b.records && a.acceptance == b.acceptance;
  }
};

}  // namespace stap
