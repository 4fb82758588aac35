#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "smmc/bounds.hpp"
#include "smmc/channel.hpp"
#include "smmc/optimizer.hpp"
#include "smmc/simulator.hpp"

namespace smmc {

// Copy of a configuration with a different request arrival rate; the studies
// sweep the load around the configured value.
inline SystemConfig with_arrival_rate(const SystemConfig& cfg, double arrival_rate) {
  SystemConfig::Params params = cfg.params();
  params.arrival_rate_per_slot = arrival_rate;
  return SystemConfig(params);
}

namespace detail {

// Slots a lone cell-edge user would need on average to pull the whole file
// at this rate. The simulator's retransmission loop cannot be allowed to
// chase success probabilities that have collapsed to ~0, so sweeps gate
// their simulation runs on this.
inline double worst_case_unicast_slots(double rate, const SystemConfig& cfg) {
  const double threshold = std::exp2(rate / cfg.bandwidth()) - 1.0;
  const double success = std::exp(-threshold / cfg.edge_mean_snr());
  const double packets = std::ceil(cfg.file_size() / (cfg.slot_duration() * rate));
  return success > 0.0 ? packets / success : std::numeric_limits<double>::infinity();
}

// An episode is only simulated when even the unluckiest single-user draw
// finishes well inside the watchdog.
inline bool simulation_feasible(double rate, const SystemConfig& cfg) {
  return worst_case_unicast_slots(rate, cfg) <= 1e8;
}

}  // namespace detail

// --- Cache build-up versus the set-up rate (figure id "fig3") -------------

struct CacheStudyRow {
  double arrival_rate{};
  double r_uc{};
  double mean_smin{};  // bits, averaged over episodes
  double mean_slast{};
};

inline constexpr std::int64_t kCacheStudyWindow = 1000;  // slots

// Simulated set-up phases with every user pinned at the cell edge (the
// regime the closed-form cache bounds describe): sweeps the unicast rate at
// the configured arrival rate and at twice it, recording the group-minimum
// and last-arriver caches.
inline std::vector<CacheStudyRow> run_cache_study(const SystemConfig& cfg,
                                                  std::int64_t episodes, std::uint64_t seed,
                                                  int workers = 0) {
  struct Sample {
    double s_min{};
    double s_last{};
  };
  std::vector<CacheStudyRow> rows;
  for (const double scale : {1.0, 2.0}) {
    const SystemConfig scaled = with_arrival_rate(cfg, scale * cfg.arrival_rate());
    for (double r_uc = 40e6; r_uc <= 120e6 + 1.0; r_uc += 10e6) {
      SimOptions options;
      options.pinned_distance = scaled.coverage_radius();
      const std::vector<Sample> samples = detail::parallel_episodes<Sample>(
          episodes, workers, [&](std::int64_t i) {
            const EpisodeRng rng(seed, i);
            std::vector<UserState> users =
                generate_arrivals(rng, kCacheStudyWindow, scaled, options);
            run_setup_phase(rng, users, r_uc, kCacheStudyWindow, scaled);
            double s_min = users.front().cached_bits;
            for (const UserState& user : users) s_min = std::min(s_min, user.cached_bits);
            return Sample{s_min, users.back().cached_bits};
          });
      CacheStudyRow row;
      row.arrival_rate = scaled.arrival_rate();
      row.r_uc = r_uc;
      for (const Sample& s : samples) {
        row.mean_smin += s.s_min;
        row.mean_slast += s.s_last;
      }
      row.mean_smin /= static_cast<double>(episodes);
      row.mean_slast /= static_cast<double>(episodes);
      rows.push_back(row);
    }
  }
  return rows;
}

// --- Delivery-time bounds versus the multicast rate (figure id "fig4") ----

struct SandwichRow {
  double r_mc{};
  double t_avg_ub{};
  double t_avg_lb{};
  double sim_mean{};  // NaN where simulation is infeasible at this rate
  double sim_ci{};
};

// Sweeps the multicast rate over [50, 300] Mbps at a 1000-slot window with
// the optimized unicast rate, tabulating both closed-form envelopes and,
// where a cell-edge singleton can still finish, the simulated mean with its
// 95% half-width. Rates beyond that leave NaN in the simulation columns
// (the bound columns may themselves reach +inf there).
inline std::vector<SandwichRow> run_bound_sandwich(const SystemConfig& cfg,
                                                   std::int64_t episodes, std::uint64_t seed,
                                                   int workers = 0) {
  const double r_uc = optimal_ruc(cfg);
  constexpr std::int64_t t_set = 1000;
  std::vector<SandwichRow> rows;
  for (double r_mc = 50e6; r_mc <= 300e6 + 1.0; r_mc += 12.5e6) {
    const RatePlan plan{r_uc, r_mc, t_set};
    SandwichRow row;
    row.r_mc = r_mc;
    row.t_avg_ub = t_avg_upper(plan, cfg).value;
    row.t_avg_lb = t_avg_lower(plan, cfg).value;
    if (detail::simulation_feasible(r_mc, cfg)) {
      const MonteCarloSummary sim =
          monte_carlo(DeliveryMode::smmc, plan, cfg, episodes, seed, {}, workers);
      row.sim_mean = sim.mean_delivery;
      row.sim_ci = sim.ci95_half_width;
    } else {
      row.sim_mean = std::numeric_limits<double>::quiet_NaN();
      row.sim_ci = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

// --- Optimal plan versus the window length (figure id "fig5") -------------

struct WindowScanRow {
  double arrival_rate{};
  std::int64_t t_set{};
  double r_mc_opt{};
  double t_avg_ub{};
};

// Closed-form only: for each window length, re-optimizes the multicast rate
// and records the delivery-time bound, at half, one, and twice the
// configured arrival rate. The minimizing row of each curve is the plan the
// joint optimizer should land on.
inline std::vector<WindowScanRow> run_window_scan(const SystemConfig& cfg,
                                                  double delta = 1e-8) {
  const double r_uc = optimal_ruc(cfg);
  std::vector<WindowScanRow> rows;
  for (const double scale : {0.5, 1.0, 2.0}) {
    const SystemConfig scaled = with_arrival_rate(cfg, scale * cfg.arrival_rate());
    for (std::int64_t t = 100; t <= 6000; t += 100) {
      const double setup_bits = static_cast<double>(t) * scaled.slot_duration() * r_uc;
      if (setup_bits > scaled.file_size()) break;
      WindowScanRow row;
      row.arrival_rate = scaled.arrival_rate();
      row.t_set = t;
      row.r_mc_opt = optimal_rmc(t, r_uc, scaled, delta);
      row.t_avg_ub = t_avg_upper({r_uc, row.r_mc_opt, t}, scaled, delta).value;
      rows.push_back(row);
    }
  }
  return rows;
}

// --- Delivery time by realized group size (figure id "fig6") --------------

struct GroupSizeRow {
  int k{};
  double probability{};     // empirical share of episodes with this group size
  double unicast_mean{};    // baseline mean, identical in every row
  double plain_mean{};      // NaN when no episode realized this group size
  double finetuned_mean{};
};

inline constexpr int kGroupSizeRows = 12;

// Runs the jointly optimized plan three ways on paired episodes (same seed,
// so identical arrivals and fading): the no-merging unicast baseline, the
// plan as optimized, and the plan with the multicast rate re-tuned per
// realized group size. Reports per-group-size mean delivery for k = 1..12.
inline std::vector<GroupSizeRow> run_group_size_study(const SystemConfig& cfg,
                                                      std::int64_t episodes,
                                                      std::uint64_t seed, int workers = 0) {
  const RatePlan plan = joint_optimize(cfg).plan;
  const MonteCarloSummary unicast =
      monte_carlo(DeliveryMode::unicast, plan, cfg, episodes, seed, {}, workers);
  const MonteCarloSummary plain =
      monte_carlo(DeliveryMode::smmc, plan, cfg, episodes, seed, {}, workers);
  const MonteCarloSummary finetuned =
      monte_carlo(DeliveryMode::finetuned, plan, cfg, episodes, seed, {}, workers);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<GroupSizeRow> rows;
  for (int k = 1; k <= kGroupSizeRows; ++k) {
    GroupSizeRow row;
    row.k = k;
    const auto prob = plain.k_probability.find(k);
    row.probability = prob == plain.k_probability.end() ? 0.0 : prob->second;
    row.unicast_mean = unicast.mean_delivery;
    const auto plain_bin = plain.by_k.find(k);
    row.plain_mean = plain_bin == plain.by_k.end() ? nan : plain_bin->second.mean_delivery;
    const auto ft_bin = finetuned.by_k.find(k);
    row.finetuned_mean = ft_bin == finetuned.by_k.end() ? nan : ft_bin->second.mean_delivery;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace smmc
