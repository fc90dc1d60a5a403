#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stap/error.hpp"
#include "stap/random.hpp"

namespace stap {

/// Forward-filtering backward-sampling for a discrete-state HMM.
///
/// `log_emission` is a row-major (steps x L) matrix; `-inf` entries are
/// allowed, NaN and `+inf` are not. `pi` is the row-major L x L transition
/// matrix and the chain starts from the fixed state `initial` before step 0.
/// `work` is scratch storage reused across calls.
template <class Engine>
std::vector<int> ffbs_sample(Engine& rng, std::span<const double> log_emission, std::size_t L,
                             std::span<const double> pi, std::size_t initial, std::vector<double>& work) {
  const std::size_t n = log_emission.size() / L;
  std::vector<int> z(n, 0);
  if (n == 0) return z;
  work.assign(n * L, 0.0);
  std::vector<double> pred(L);

  for (std::size_t i = 0; i < n; ++i) {
    const double* le = log_emission.data() + i * L;
    double* a = work.data() + i * L;
    if (i == 0) {
      std::copy_n(pi.data() + initial * L, L, pred.data());
    } else {
      std::fill(pred.begin(), pred.end(), 0.0);
      const double* prev = work.data() + (i - 1) * L;
      for (std::size_t k = 0; k < L; ++k) {
        const double w = prev[k];
        if (w == 0.0) continue;
        const double* row = pi.data() + k * L;
        for (std::size_t j = 0; j < L; ++j) pred[j] += w * row[j];
      }
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < L; ++j) {
      if (std::isnan(le[j]) || le[j] == std::numeric_limits<double>::infinity())
        throw NumericError("non-finite emission log-density at step " + std::to_string(i) + ", state " +
                           std::to_string(j));
      if (pred[j] > 0.0) top = std::max(top, le[j]);
    }
    if (top == -std::numeric_limits<double>::infinity())
      throw NumericError("no state can emit step " + std::to_string(i));
    double sum = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      a[j] = pred[j] * std::exp(le[j] - top);
      sum += a[j];
    }
    if (!(sum > 1e-280)) {
      // Predictive mass sits where the emission underflows; redo in logs.
      double ltop = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < L; ++j) {
        a[j] = pred[j] > 0.0 ? std::log(pred[j]) + le[j] : -std::numeric_limits<double>::infinity();
        ltop = std::max(ltop, a[j]);
      }
      sum = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        a[j] = std::exp(a[j] - ltop);
        sum += a[j];
      }
    }
    for (std::size_t j = 0; j < L; ++j) a[j] /= sum;
  }

  std::vector<double> w(L);
  z[n - 1] = static_cast<int>(categorical(rng, std::span<const double>(work.data() + (n - 1) * L, L)));
  for (std::size_t i = n - 1; i-- > 0;) {
    const double* a = work.data() + i * L;
    const std::size_t next = static_cast<std::size_t>(z[i + 1]);
    for (std::size_t j = 0; j < L; ++j) w[j] = a[j] * pi[j * L + next];
    z[i] = static_cast<int>(categorical(rng, std::span<const double>(w)));
  }
  return z;
}

}  // namespace stap
