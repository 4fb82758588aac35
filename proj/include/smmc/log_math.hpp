#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace smmc {

// log C(n, k) via lgamma, stable for large n.
inline double lchoose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// exp with saturation instead of overflow. Keeps objective functions well
// ordered: anything past the double range compares as +inf.
inline double exp_saturating(double x) noexcept {
  if (x > 709.0) return std::numeric_limits<double>::infinity();
  return std::exp(x);
}

// P[Bin(n, p) = k] evaluated in log space. The 0*log(0) corners (p or q zero
// with a zero count on that side) are treated as probability-1 factors.
inline double binomial_pmf(std::int64_t n, std::int64_t k, double p) {
  if (k < 0 || k > n) return 0.0;
  const double q = 1.0 - p;
  double log_term = lchoose(n, k);
  if (k > 0) {
    if (p == 0.0) return 0.0;
    log_term += static_cast<double>(k) * std::log(p);
  }
  if (n - k > 0) {
    if (q == 0.0) return 0.0;
    log_term += static_cast<double>(n - k) * std::log(q);
  }
  return std::exp(log_term);
}

// Survival table for binomials with a shared success probability:
// ccdf(n, c) = P[Bin(n, p) > c] for all n in [0, n_max], c in [0, n_max].
// Built once in O(n_max^2); the order-statistics cache bound sweeps it.
class BinomialSurvivalTable {
 public:
  BinomialSurvivalTable(std::int64_t n_max, double p) : n_max_(n_max), table_(n_max + 1) {
    if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
    for (std::int64_t n = 0; n <= n_max; ++n) {
      auto& row = table_[static_cast<std::size_t>(n)];
      row.resize(static_cast<std::size_t>(n_max) + 1);
      double cdf = 0.0;
      for (std::int64_t c = 0; c <= n_max; ++c) {
        cdf = std::min(1.0, cdf + binomial_pmf(n, c, p));
        row[static_cast<std::size_t>(c)] = std::max(0.0, 1.0 - cdf);
      }
    }
  }

  // P[Bin(n, p) > c]
  double survival(std::int64_t n, std::int64_t c) const {
    return table_[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)];
  }

 private:
  std::int64_t n_max_;
  std::vector<std::vector<double>> table_;
};

// Poisson(mu) probabilities for counts 0..n, computed by the stable
// multiplicative recurrence.
inline std::vector<double> poisson_pmf_row(double mu, std::int64_t n) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  pmf[0] = std::exp(-mu);
  for (std::int64_t i = 1; i <= n; ++i) {
    pmf[static_cast<std::size_t>(i)] =
        pmf[static_cast<std::size_t>(i - 1)] * mu / static_cast<double>(i);
  }
  return pmf;
}

// Truncation index for Poisson-mixture series over the group size K = 1 + N,
// N ~ Poisson(mu): the smallest k with P[Poisson(mu + 1) >= k] < delta.
// Poisson(mu + 1) stochastically dominates 1 + N, so the dropped true mass
// is below delta as well. mu = 0 degenerates to the single K = 1 term.
inline int poisson_truncation_index(double mu, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (mu <= 0.0) return 1;
  const double m = mu + 1.0;
  double pmf = std::exp(-m);
  double cdf = pmf;
  int k = 0;
  while (1.0 - cdf >= delta) {  // 1 - cdf = P[X > k]
    ++k;
    pmf *= m / static_cast<double>(k);
    cdf += pmf;
    if (k > 100000000) throw std::runtime_error("Poisson truncation search did not converge");
  }
  return k + 1;  // first index whose tail P[X >= k+1] drops below delta
}

}  // namespace smmc
