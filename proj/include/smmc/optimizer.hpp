#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "smmc/bounds.hpp"
#include "smmc/channel.hpp"
#include "smmc/log_math.hpp"
#include "smmc/solver.hpp"

namespace smmc {

// Rate search bracket shared by the unicast and multicast optimizers. The
// upper edge is only a starting point; the solver doubles it while the
// objective still improves.
inline constexpr double kRateBracketLo = 1e3;   // 1 kbit/s
inline constexpr double kRateBracketHi = 2e8;   // 200 Mbit/s

// Proxy for the per-bit unicast cost at the cell edge: transfer time scales
// with 1/(r (1 - eps(r))) = exp((2^(r/W) - 1) / edge_snr) / r.
inline double unicast_rate_objective(double r_uc, const SystemConfig& cfg) {
  if (!(r_uc > 0)) throw std::invalid_argument("r_uc must be positive");
  const double threshold = std::exp2(r_uc / cfg.bandwidth()) - 1.0;
  return exp_saturating(threshold / cfg.edge_mean_snr()) / r_uc;
}

// Set-up phase rate: minimizes the expected time per successfully delivered
// unicast bit for the worst-placed user.
inline double optimal_ruc(const SystemConfig& cfg, double rel_tol = 1e-6) {
  return minimize_convex_scalar(
             [&](double r) { return unicast_rate_objective(r, cfg); }, kRateBracketLo,
             kRateBracketHi, rel_tol)
      .argmin;
}

// Per-bit multicast cost for a known group of k users over pooled bandwidth
// k W, with every user pessimistically at the cell edge.
inline double known_group_rate_objective(int k, double r_mc, const SystemConfig& cfg) {
  if (k < 1) throw std::invalid_argument("group size must be >= 1");
  if (!(r_mc > 0)) throw std::invalid_argument("r_mc must be positive");
  const double kk = static_cast<double>(k);
  const double threshold = std::exp2(r_mc / (kk * cfg.bandwidth())) - 1.0;
  return exp_saturating(threshold * kk / cfg.edge_mean_snr()) / r_mc;
}

// Multicast rate re-tuned after the set-up phase, once the realized group
// size k is known.
inline double finetune_rmc(int k, const SystemConfig& cfg, double rel_tol = 1e-6) {
  return minimize_convex_scalar(
             [&](double r) { return known_group_rate_objective(k, r, cfg); }, kRateBracketLo,
             kRateBracketHi, rel_tol)
      .argmin;
}

// Expected multicast-phase cost when the group size is still Poisson: the
// k-mixture of residual transfer times, each term using the closed-form
// cache lower bound for its group size. Shares its minimizer structure with
// tau_upper summed over the group-size weights.
inline double multicast_rate_objective(double r_mc, std::int64_t t_set, double r_uc,
                                       const SystemConfig& cfg, double delta = 1e-8) {
  if (!(r_mc > 0)) throw std::invalid_argument("r_mc must be positive");
  const double mu = static_cast<double>(t_set) * cfg.arrival_rate();
  const int k_max = poisson_truncation_index(mu, delta);
  const std::vector<double> weights = poisson_pmf_row(mu, k_max - 1);
  double total = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    const double kk = static_cast<double>(k);
    const double cache =
        std::min(smin_lower_simple(k, t_set, r_uc, cfg), cfg.file_size());
    const double threshold = std::exp2(r_mc / (kk * cfg.bandwidth())) - 1.0;
    total += weights[static_cast<std::size_t>(k - 1)] * ((cfg.file_size() - cache) / r_mc) *
             exp_saturating(threshold * kk / cfg.edge_mean_snr());
  }
  return total;
}

// Multicast rate for a given set-up window, averaging over the group-size
// distribution the window induces.
inline double optimal_rmc(std::int64_t t_set, double r_uc, const SystemConfig& cfg,
                          double delta = 1e-8, double rel_tol = 1e-6) {
  if (t_set < 0) throw std::invalid_argument("t_set must be non-negative");
  if (!(r_uc > 0)) throw std::invalid_argument("r_uc must be positive");
  return minimize_convex_scalar(
             [&](double r) { return multicast_rate_objective(r, t_set, r_uc, cfg, delta); },
             kRateBracketLo, kRateBracketHi, rel_tol)
      .argmin;
}

// One evaluated point of the set-up window scan.
struct TraceRow {
  std::int64_t t_set{};
  double r_mc{};
  double t_avg{};
};

struct OptimizationResult {
  RatePlan plan{};
  double objective{};           // t_avg_upper at the returned plan
  int k_max{};                  // mixture truncation at the returned plan
  std::vector<TraceRow> trace;  // every window evaluated, ascending by t_set
};

// Full plan search: the unicast rate decouples and is fixed first, then the
// set-up window is scanned with the multicast rate re-optimized per window
// and the delivery-time bound as the score. The default scan probes every
// 50th window and then walks the +-50 neighborhood of the best probe;
// full_scan evaluates every window. Ties keep the smallest window (the scan
// is ascending and only a strict improvement moves the best).
inline OptimizationResult joint_optimize(const SystemConfig& cfg, double delta = 1e-8,
                                         bool full_scan = false) {
  OptimizationResult result;
  const double r_uc = optimal_ruc(cfg);
  // Windows above the transfer budget violate the plan constraint; the
  // ceiling can overshoot by a fraction of a slot, so the scan re-checks.
  const auto t_limit = static_cast<std::int64_t>(
      std::ceil(cfg.file_size() / (cfg.slot_duration() * r_uc)));
  const auto admissible = [&](std::int64_t t) {
    return static_cast<double>(t) * cfg.slot_duration() * r_uc <= cfg.file_size();
  };

  std::map<std::int64_t, TraceRow> trace;
  RatePlan best_plan{};
  double best_value = std::numeric_limits<double>::infinity();
  int best_k_max = 0;
  const auto evaluate = [&](std::int64_t t) {
    if (t < 0 || t > t_limit || !admissible(t)) return;
    if (trace.count(t) != 0) return;
    const double r_mc = optimal_rmc(t, r_uc, cfg, delta);
    const RatePlan plan{r_uc, r_mc, t};
    const TAvgBound bound = t_avg_upper(plan, cfg, delta);
    trace.emplace(t, TraceRow{t, r_mc, bound.value});
    if (bound.value < best_value) {
      best_value = bound.value;
      best_plan = plan;
      best_k_max = bound.k_max;
    }
  };

  constexpr std::int64_t kCoarseStride = 50;
  if (full_scan) {
    for (std::int64_t t = 0; t <= t_limit; ++t) evaluate(t);
  } else {
    for (std::int64_t t = 0; t <= t_limit; t += kCoarseStride) evaluate(t);
    const std::int64_t center = best_plan.t_set;
    for (std::int64_t t = center - kCoarseStride; t <= center + kCoarseStride; ++t) evaluate(t);
  }

  result.plan = best_plan;
  result.objective = best_value;
  result.k_max = best_k_max;
  result.trace.reserve(trace.size());
  for (const auto& [t, row] : trace) result.trace.push_back(row);
  return result;
}

}  // namespace smmc
