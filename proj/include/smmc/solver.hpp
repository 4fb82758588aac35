#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace smmc {

struct ScalarMinimum {
  double argmin{};
  double value{};
};

// Largest abscissa the bracket is allowed to grow to while hunting for an
// interior minimum.
inline constexpr double kBracketCap = 1e30;

// Minimizes a unimodal objective over [lo, hi] by golden-section search.
//
// The upper edge is first pushed out by doubling while the objective keeps
// strictly decreasing there, so callers only need a plausible starting
// bracket. Objectives may return +inf on part of the range (treated as
// "worse than anything finite"); NaN is mapped to +inf as well. Ties move
// the upper edge down, so on a plateau the search settles on the leftmost
// minimizer. The returned argmin is accurate to about rel_tol in relative
// terms; the value is the objective evaluated there.
template <class F>
ScalarMinimum minimize_convex_scalar(F&& objective, double lo, double hi,
                                     double rel_tol = 1e-6) {
  if (!(lo > 0.0) || !(hi > lo)) {
    throw std::invalid_argument("bracket must satisfy 0 < lo < hi");
  }
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");

  const double inf = std::numeric_limits<double>::infinity();
  auto f = [&](double x) {
    const double v = objective(x);
    return std::isnan(v) ? inf : v;
  };

  // Push the upper edge out by doubling while the objective still improves
  // there. The edge where it stops improving is kept inside the bracket: for
  // a unimodal objective, f(2h) >= f(h) only pins the minimum to [lo, 2h],
  // so stopping at h could clip a minimizer sitting between h and 2h.
  double f_hi = f(hi);
  while (hi < kBracketCap) {
    const double candidate = hi * 2.0;
    const double f_candidate = f(candidate);
    const bool improving = f_candidate < f_hi;
    hi = candidate;
    f_hi = f_candidate;
    if (!improving) break;
  }

  if (!std::isfinite(f(lo)) && !std::isfinite(f(std::sqrt(lo * hi))) && !std::isfinite(f_hi)) {
    throw std::runtime_error("objective is not finite anywhere in the bracket");
  }

  constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double a = lo;
  double b = hi;
  double c = b - (b - a) * kGolden;
  double d = a + (b - a) * kGolden;
  double fc = f(c);
  double fd = f(d);
  // Width shrinks by the golden ratio each step, so even the widest bracket
  // collapses within a couple hundred iterations; the cap is a safety net.
  for (int iter = 0; iter < 500 && (b - a) > rel_tol * 0.5 * (a + b); ++iter) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * kGolden;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * kGolden;
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

}  // namespace smmc
