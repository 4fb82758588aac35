#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "smmc/channel.hpp"
#include "smmc/log_math.hpp"

namespace smmc {

// Operating point of the two-phase delivery scheme: every request admitted
// during the t_set set-up slots is served individually at r_uc, then the
// merged group is served together at r_mc over the pooled bandwidth.
struct RatePlan {
  double r_uc{};           // unicast rate, bits/s
  double r_mc{};           // multicast rate, bits/s
  std::int64_t t_set{};    // set-up window length, slots
};

// The set-up window may not take longer than sending the whole file once:
// t_set * T0 * r_uc <= L_f.
inline void validate_plan(const RatePlan& plan, const SystemConfig& cfg) {
  if (!(plan.r_uc > 0)) throw std::invalid_argument("plan.r_uc must be positive");
  if (!(plan.r_mc > 0)) throw std::invalid_argument("plan.r_mc must be positive");
  if (plan.t_set < 0) throw std::invalid_argument("plan.t_set must be non-negative");
  const double setup_bits = static_cast<double>(plan.t_set) * cfg.slot_duration() * plan.r_uc;
  if (setup_bits > cfg.file_size()) {
    throw std::invalid_argument(
        "plan.t_set exceeds the file-transfer budget: t_set * T0 * r_uc = " +
        std::to_string(setup_bits) + " bits > file_size = " + std::to_string(cfg.file_size()));
  }
}

// Worst-case unicast outage, attained at the cell edge.
inline double edge_outage(double r_uc, const SystemConfig& cfg) {
  return outage_probability(r_uc, cfg.bandwidth(), cfg.edge_mean_snr());
}

// Upper bound on the distance-averaged multicast outage for a group of k
// users sharing k*W: every user is pessimistically placed at the cell edge,
// so the group minimum SNR is bounded by an Exp mean of edge_snr / k.
inline double mc_outage_upper(int k, double r_mc, const SystemConfig& cfg) {
  if (k < 1) throw std::invalid_argument("group size must be >= 1");
  return outage_probability(r_mc, static_cast<double>(k) * cfg.bandwidth(),
                            cfg.edge_mean_snr() / static_cast<double>(k));
}

// Lower bound on the same outage: Jensen applied to the distance average
// lifts the effective mean SNR by (eta + 2) / 2.
inline double mc_outage_lower(int k, double r_mc, const SystemConfig& cfg) {
  if (k < 1) throw std::invalid_argument("group size must be >= 1");
  const double snr =
      cfg.edge_mean_snr() * (cfg.path_loss_exponent() + 2.0) / (2.0 * static_cast<double>(k));
  return outage_probability(r_mc, static_cast<double>(k) * cfg.bandwidth(), snr);
}

// Upper bound on the expected minimum cache across the group after set-up.
// The last arriver gets at most t_set / k receiving slots on average, each
// delivering T0 * r_uc bits with the distance-averaged success factor
// exp(-2 (2^(r_uc/W) - 1) / ((eta + 2) edge_snr)).
inline double smin_upper(int k, std::int64_t t_set, double r_uc, const SystemConfig& cfg) {
  if (k < 1) throw std::invalid_argument("group size must be >= 1");
  if (t_set < 0) throw std::invalid_argument("t_set must be non-negative");
  if (!(r_uc > 0)) throw std::invalid_argument("r_uc must be positive");
  const double threshold = std::exp2(r_uc / cfg.bandwidth()) - 1.0;
  const double factor =
      std::exp(-2.0 * threshold / ((cfg.path_loss_exponent() + 2.0) * cfg.edge_mean_snr()));
  return (static_cast<double>(t_set) / static_cast<double>(k)) * cfg.slot_duration() * r_uc *
         factor;
}

// Closed-form lower bound on the same quantity: at least (t_set - k) / k
// receiving slots for the last arriver, each succeeding with the worst-case
// (cell edge) probability. Clamps to 0 once the group outgrows the window.
inline double smin_lower_simple(int k, std::int64_t t_set, double r_uc,
                                const SystemConfig& cfg) {
  if (k < 1) throw std::invalid_argument("group size must be >= 1");
  if (t_set < 0) throw std::invalid_argument("t_set must be non-negative");
  if (!(r_uc > 0)) throw std::invalid_argument("r_uc must be positive");
  const double slots = std::max<double>(0.0, static_cast<double>(t_set - k));
  const double threshold = std::exp2(r_uc / cfg.bandwidth()) - 1.0;
  const double success = std::exp(-threshold / cfg.edge_mean_snr());  // 1 - edge outage
  return (slots / static_cast<double>(k)) * cfg.slot_duration() * r_uc * success;
}

// Largest window the exact order-statistics bound is evaluated for. The
// survival table is O(t_set^2) in both time and memory.
inline constexpr std::int64_t kExactBoundMaxSlots = 500;

// Exact expected minimum cache for the pessimistic group: all k users pinned
// at the cell edge, the first present from slot 1, the rest arriving
// uniformly over the window. With p = 1 - edge_outage and independent
// per-slot successes,
//
//   E[min_k s_k] = T0 r_uc * sum_c P[Bin(t_set, p) > c] * Q(c)^(k-1),
//   Q(c) = (1/t_set) * sum_{t=1..t_set} P[Bin(t_set - t, p) > c],
//
// the product of per-user survival functions of the packet counts. Binomial
// terms go through log space and each probability is clamped to [0, 1]
// before the power.
inline double smin_lower_exact(int k, std::int64_t t_set, double r_uc,
                               const SystemConfig& cfg) {
  if (k < 1) throw std::invalid_argument("group size must be >= 1");
  if (t_set < 0) throw std::invalid_argument("t_set must be non-negative");
  if (!(r_uc > 0)) throw std::invalid_argument("r_uc must be positive");
  if (t_set > kExactBoundMaxSlots) {
    throw std::runtime_error("exact cache bound intractable: t_set = " + std::to_string(t_set) +
                             " exceeds the " + std::to_string(kExactBoundMaxSlots) +
                             "-slot limit");
  }
  if (t_set == 0) return 0.0;
  const double p = 1.0 - edge_outage(r_uc, cfg);
  const BinomialSurvivalTable table(t_set, p);
  double expected_packets = 0.0;
  for (std::int64_t c = 0; c < t_set; ++c) {
    double q_sum = 0.0;
    for (std::int64_t t = 1; t <= t_set; ++t) q_sum += table.survival(t_set - t, c);
    const double q = std::clamp(q_sum / static_cast<double>(t_set), 0.0, 1.0);
    expected_packets +=
        table.survival(t_set, c) * std::pow(q, static_cast<double>(k - 1));
  }
  return expected_packets * cfg.slot_duration() * r_uc;
}

// Expected set-up phase duration seen by a uniformly chosen group member:
// T0 (t_set k + t_set - k + 2) / (2k). The closed form assumes the group
// fits the window (k <= t_set + 1) and extrapolates negative beyond that;
// the delivery-time mixture only reaches such k with zero weight.
inline double setup_phase_mean(int k, std::int64_t t_set, const SystemConfig& cfg) {
  if (k < 1) throw std::invalid_argument("group size must be >= 1");
  if (t_set < 0) throw std::invalid_argument("t_set must be non-negative");
  const double kk = static_cast<double>(k);
  const double ts = static_cast<double>(t_set);
  return cfg.slot_duration() * (ts * kk + ts - kk + 2.0) / (2.0 * kk);
}

namespace detail {

// Multicast residual time (L_f - s) / (r_mc (1 - eps)), +inf when the outage
// saturates. The cache estimate is capped at the file size.
inline double residual_multicast_time(double cache_bits, double eps, const RatePlan& plan,
                                      const SystemConfig& cfg) {
  const double s = std::min(cache_bits, cfg.file_size());
  if (!(eps < 1.0)) return std::numeric_limits<double>::infinity();
  return (cfg.file_size() - s) / (plan.r_mc * (1.0 - eps));
}

}  // namespace detail

// Upper bound on the multicast-phase duration for a group of k users:
// pessimistic outage together with the pessimistic (small) cache.
inline double tau_upper(int k, const RatePlan& plan, const SystemConfig& cfg) {
  return detail::residual_multicast_time(smin_lower_simple(k, plan.t_set, plan.r_uc, cfg),
                                         mc_outage_upper(k, plan.r_mc, cfg), plan, cfg);
}

// Matching lower bound: optimistic outage with the optimistic (large) cache.
inline double tau_lower(int k, const RatePlan& plan, const SystemConfig& cfg) {
  return detail::residual_multicast_time(smin_upper(k, plan.t_set, plan.r_uc, cfg),
                                         mc_outage_lower(k, plan.r_mc, cfg), plan, cfg);
}

// A bound on the mean delivery time together with the index the Poisson
// mixture over group sizes was truncated at.
struct TAvgBound {
  double value{};
  int k_max{};
};

namespace detail {

template <class TauFn>
TAvgBound t_avg_mixture(const RatePlan& plan, const SystemConfig& cfg, double delta,
                        TauFn&& tau) {
  validate_plan(plan, cfg);
  if (!(delta > 0.0) || delta > 1e-3) {
    throw std::invalid_argument("delta must lie in (0, 1e-3]");
  }
  const double mu = static_cast<double>(plan.t_set) * cfg.arrival_rate();
  const int k_max = poisson_truncation_index(mu, delta);
  const std::vector<double> weights = poisson_pmf_row(mu, k_max - 1);
  double total = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    total += weights[static_cast<std::size_t>(k - 1)] *
             (setup_phase_mean(k, plan.t_set, cfg) + tau(k));
  }
  return {total, k_max};
}

}  // namespace detail

// Upper bound on the mean delivery time: Poisson mixture over the group
// size of (set-up mean + tau_upper), truncated once the residual tail of
// the group-size distribution drops below delta.
inline TAvgBound t_avg_upper(const RatePlan& plan, const SystemConfig& cfg,
                             double delta = 1e-8) {
  return detail::t_avg_mixture(plan, cfg, delta,
                               [&](int k) { return tau_upper(k, plan, cfg); });
}

// Mirror of t_avg_upper built from the optimistic pair (tau_lower). Used as
// the lower envelope when sandwiching simulated delivery times.
inline TAvgBound t_avg_lower(const RatePlan& plan, const SystemConfig& cfg,
                             double delta = 1e-8) {
  return detail::t_avg_mixture(plan, cfg, delta,
                               [&](int k) { return tau_lower(k, plan, cfg); });
}

// All closed-form quantities for one (plan, group size) pair.
struct BoundsReport {
  int k{};
  double mc_outage_upper{};
  double mc_outage_lower{};
  double smin_upper{};
  double smin_lower{};
  double tau_upper{};
  double tau_lower{};
  double t_avg_upper{};
  int k_max{};
};

inline BoundsReport make_bounds_report(int k, const RatePlan& plan, const SystemConfig& cfg,
                                       double delta = 1e-8) {
  validate_plan(plan, cfg);
  BoundsReport report;
  report.k = k;
  report.mc_outage_upper = mc_outage_upper(k, plan.r_mc, cfg);
  report.mc_outage_lower = mc_outage_lower(k, plan.r_mc, cfg);
  report.smin_upper = smin_upper(k, plan.t_set, plan.r_uc, cfg);
  report.smin_lower = smin_lower_simple(k, plan.t_set, plan.r_uc, cfg);
  report.tau_upper = tau_upper(k, plan, cfg);
  report.tau_lower = tau_lower(k, plan, cfg);
  const TAvgBound t_avg = t_avg_upper(plan, cfg, delta);
  report.t_avg_upper = t_avg.value;
  report.k_max = t_avg.k_max;
  return report;
}

}  // namespace smmc
