#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "smmc/bounds.hpp"
#include "smmc/channel.hpp"
#include "smmc/optimizer.hpp"
#include "smmc/rng.hpp"

namespace smmc {

enum class DeliveryMode {
  smmc,       // multicast phase at the plan's fixed r_mc
  finetuned,  // multicast rate re-optimized for the realized group size
  unicast,    // baseline: one user served alone at r_uc, no set-up merging
};

inline const char* to_string(DeliveryMode mode) {
  switch (mode) {
    case DeliveryMode::smmc: return "smmc";
    case DeliveryMode::finetuned: return "smmc_finetuned";
    case DeliveryMode::unicast: return "unicast";
  }
  return "unknown";
}

struct UserState {
  double distance{};            // meters from the base station
  double arrival_time{};        // request instant in seconds; first user at 0
  std::int64_t request_slot{};  // slot index the request lands in; first user 0
  double slot_gap{};            // slot-boundary wait T0 * request_slot - arrival_time
  double cached_bits{};         // unicast bits accumulated during set-up
};

struct EpisodeResult {
  DeliveryMode mode{};
  int group_size{};
  double s_min{};                        // smallest cache in the group after set-up
  double s_last{};                       // cache of the last arriver
  std::int64_t setup_slots{};
  std::int64_t mc_slots{};               // multicast (or baseline unicast) slots used
  std::int64_t mc_successful_slots{};    // slots whose packet every user received
  double mc_rate{};                      // rate the final phase actually ran at
  std::vector<double> per_user_delivery; // seconds from each user's request to completion
  double mean_delivery{};                // average of per_user_delivery
};

struct SimOptions {
  // Places every user at this distance instead of drawing uniformly over the
  // disk. Used for worst-case (cell edge) studies.
  std::optional<double> pinned_distance;
  // Conditions on exactly this many users instead of drawing the group size
  // from the arrival process. Arrival instants are still random.
  std::optional<int> fixed_group_size;
};

// Per-episode stream tags; every random quantity hangs off the episode key
// through one of these, so results depend only on (seed, episode).
inline constexpr std::uint64_t kArrivalCountTag = 1;
inline constexpr std::uint64_t kArrivalTimeTag = 2;
inline constexpr std::uint64_t kDistanceTag = 3;
inline constexpr std::uint64_t kFadingTag = 4;

// Bundles the episode key with helpers for the derived streams. Fading is
// addressed by (slot, user) rather than drawn sequentially, so phase code
// may short-circuit a slot without shifting later draws.
class EpisodeRng {
 public:
  EpisodeRng(std::uint64_t master_seed, std::int64_t episode)
      : episode_(episode),
        key_(derive_key(master_seed, static_cast<std::uint64_t>(episode))),
        fading_key_(derive_key(key_, kFadingTag)) {}

  std::int64_t episode() const { return episode_; }

  RandomStream stream(std::uint64_t tag, std::uint64_t index = 0) const {
    return RandomStream(derive_key(derive_key(key_, tag), index));
  }

  // Uniform [0, 1) draw for the fading block of (slot, user).
  double fading_unit(std::int64_t slot, int user) const {
    return keyed_unit(fading_key_, static_cast<std::uint64_t>(slot),
                      static_cast<std::uint64_t>(user));
  }

 private:
  std::int64_t episode_;
  std::uint64_t key_;
  std::uint64_t fading_key_;
};

namespace detail {

// Inverse-CDF Poisson sampler on a single uniform draw. The walk is bounded
// far beyond any mass the double CDF can resolve, so pmf underflow cannot
// loop forever.
inline int sample_poisson(double u, double mu) {
  if (!(mu > 0)) return 0;
  const int limit = static_cast<int>(mu + 60.0 * std::sqrt(mu + 1.0) + 100.0);
  int n = 0;
  double pmf = std::exp(-mu);
  double cdf = pmf;
  while (u > cdf && n < limit) {
    ++n;
    pmf *= mu / static_cast<double>(n);
    cdf += pmf;
  }
  return n;
}

}  // namespace detail

// Draws the episode's request group: the tagged user requesting at time 0
// plus a Poisson number of later arrivals uniform over the set-up window.
// Users come back sorted by arrival; distances are attached after sorting
// so they are keyed by the user's final index.
inline std::vector<UserState> generate_arrivals(const EpisodeRng& rng, std::int64_t t_set,
                                                const SystemConfig& cfg,
                                                const SimOptions& options = {}) {
  if (t_set < 0) throw std::invalid_argument("t_set must be non-negative");
  int extra = 0;
  if (options.fixed_group_size) {
    if (*options.fixed_group_size < 1) {
      throw std::invalid_argument("fixed_group_size must be >= 1");
    }
    extra = *options.fixed_group_size - 1;
    if (extra > 0 && t_set == 0) {
      throw std::invalid_argument("fixed_group_size > 1 needs a non-empty set-up window");
    }
  } else {
    RandomStream count_stream = rng.stream(kArrivalCountTag);
    extra = detail::sample_poisson(count_stream.next_unit(),
                                   static_cast<double>(t_set) * cfg.arrival_rate());
  }

  const double window = static_cast<double>(t_set) * cfg.slot_duration();
  std::vector<double> times(static_cast<std::size_t>(extra));
  for (int i = 0; i < extra; ++i) {
    RandomStream time_stream = rng.stream(kArrivalTimeTag, static_cast<std::uint64_t>(i));
    times[static_cast<std::size_t>(i)] = time_stream.next_unit_positive() * window;
  }
  std::sort(times.begin(), times.end());

  std::vector<UserState> users(static_cast<std::size_t>(extra) + 1);
  for (std::size_t i = 0; i < users.size(); ++i) {
    UserState& user = users[i];
    if (i == 0) {
      user.arrival_time = 0.0;
      user.request_slot = 0;
    } else {
      user.arrival_time = times[i - 1];
      user.request_slot =
          static_cast<std::int64_t>(std::ceil(user.arrival_time / cfg.slot_duration()));
    }
    user.slot_gap = static_cast<double>(user.request_slot) * cfg.slot_duration() -
                    user.arrival_time;
    if (options.pinned_distance) {
      user.distance = *options.pinned_distance;
    } else {
      RandomStream distance_stream = rng.stream(kDistanceTag, static_cast<std::uint64_t>(i));
      user.distance = sample_user_distance(distance_stream, cfg.coverage_radius());
    }
  }
  return users;
}

// Runs the set-up phase in place: in each slot every user who requested
// before it receives one unicast packet of T0 * r_uc bits, kept on a
// per-user fading success with probability 1 - outage(distance).
inline void run_setup_phase(const EpisodeRng& rng, std::vector<UserState>& users,
                            double r_uc, std::int64_t t_set, const SystemConfig& cfg) {
  const double threshold = std::exp2(r_uc / cfg.bandwidth()) - 1.0;
  const double packet_bits = cfg.slot_duration() * r_uc;
  std::vector<double> success(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) {
    success[k] = std::exp(-threshold / cfg.mean_snr_at(users[k].distance));
  }
  // Users are sorted by request slot, so the participants of each slot are a
  // growing prefix.
  std::size_t active = 0;
  for (std::int64_t t = 1; t <= t_set; ++t) {
    while (active < users.size() && users[active].request_slot < t) ++active;
    for (std::size_t k = 0; k < active; ++k) {
      if (rng.fading_unit(t, static_cast<int>(k)) < success[k]) {
        users[k].cached_bits += packet_bits;
      }
    }
  }
}

// Hard ceiling on retransmission loops. Hitting it means the configured rate
// has (numerically) zero success probability for some user.
inline constexpr std::int64_t kWatchdogSlots = 1000000000;

namespace detail {

[[noreturn]] inline void throw_stalled(const char* phase, std::int64_t episode) {
  throw std::runtime_error(std::string(phase) +
                           " cannot finish: slot success probability is zero, the " +
                           std::to_string(kWatchdogSlots) +
                           "-slot watchdog would trip (episode " + std::to_string(episode) +
                           "); lower the rate or shrink the file");
}

}  // namespace detail

struct MulticastOutcome {
  std::int64_t slots{};             // total slots the phase occupied
  std::int64_t successful_slots{};  // slots whose packet cleared every user
};

// Multicast phase: one packet of T0 * rate bits per slot over the pooled
// group bandwidth, counted only when every user's fading clears the
// threshold. Runs until remaining_bits are delivered.
inline MulticastOutcome run_multicast_phase(const EpisodeRng& rng,
                                            const std::vector<UserState>& users, double rate,
                                            std::int64_t first_slot, double remaining_bits,
                                            const SystemConfig& cfg) {
  if (remaining_bits <= 0.0) return {};
  const double pooled_bw = static_cast<double>(users.size()) * cfg.bandwidth();
  const double threshold = std::exp2(rate / pooled_bw) - 1.0;
  std::vector<double> success(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) {
    success[k] = std::exp(-threshold / cfg.mean_snr_at(users[k].distance));
    if (success[k] <= 0.0) detail::throw_stalled("multicast phase", rng.episode());
  }
  const double packet_bits = cfg.slot_duration() * rate;
  double delivered = 0.0;
  MulticastOutcome outcome;
  while (delivered < remaining_bits) {
    ++outcome.slots;
    if (outcome.slots > kWatchdogSlots) detail::throw_stalled("multicast phase", rng.episode());
    bool all_received = true;
    for (std::size_t k = 0; k < users.size(); ++k) {
      if (!(rng.fading_unit(first_slot + outcome.slots, static_cast<int>(k)) < success[k])) {
        all_received = false;
        break;
      }
    }
    if (all_received) {
      delivered += packet_bits;
      ++outcome.successful_slots;
    }
  }
  return outcome;
}

// One full two-phase episode. mode selects whether the multicast phase runs
// at the plan rate or is re-tuned to the realized group size.
inline EpisodeResult run_smmc_episode(std::uint64_t master_seed, std::int64_t episode,
                                      const RatePlan& plan, const SystemConfig& cfg,
                                      DeliveryMode mode = DeliveryMode::smmc,
                                      const SimOptions& options = {}) {
  if (mode == DeliveryMode::unicast) {
    throw std::invalid_argument("unicast episodes use run_unicast_episode");
  }
  const EpisodeRng rng(master_seed, episode);
  std::vector<UserState> users = generate_arrivals(rng, plan.t_set, cfg, options);
  run_setup_phase(rng, users, plan.r_uc, plan.t_set, cfg);

  EpisodeResult result;
  result.mode = mode;
  result.group_size = static_cast<int>(users.size());
  result.setup_slots = plan.t_set;
  result.s_min = users.front().cached_bits;
  for (const UserState& user : users) result.s_min = std::min(result.s_min, user.cached_bits);
  result.s_last = users.back().cached_bits;

  result.mc_rate =
      mode == DeliveryMode::finetuned ? finetune_rmc(result.group_size, cfg) : plan.r_mc;
  const double remaining = cfg.file_size() - std::min(result.s_min, cfg.file_size());
  const MulticastOutcome mc =
      run_multicast_phase(rng, users, result.mc_rate, plan.t_set, remaining, cfg);
  result.mc_slots = mc.slots;
  result.mc_successful_slots = mc.successful_slots;

  result.per_user_delivery.resize(users.size());
  double total = 0.0;
  for (std::size_t k = 0; k < users.size(); ++k) {
    // Wait to the slot boundary, the set-up slots after the request, then
    // the shared multicast slots.
    const double wait =
        users[k].slot_gap +
        cfg.slot_duration() * static_cast<double>(plan.t_set - users[k].request_slot) +
        cfg.slot_duration() * static_cast<double>(result.mc_slots);
    result.per_user_delivery[k] = wait;
    total += wait;
  }
  result.mean_delivery = total / static_cast<double>(users.size());
  return result;
}

// Baseline without merging: a single user downloads the whole file alone in
// per-slot unicast packets at r_uc.
inline EpisodeResult run_unicast_episode(std::uint64_t master_seed, std::int64_t episode,
                                         double r_uc, const SystemConfig& cfg,
                                         const SimOptions& options = {}) {
  if (!(r_uc > 0)) throw std::invalid_argument("r_uc must be positive");
  const EpisodeRng rng(master_seed, episode);
  double distance = 0.0;
  if (options.pinned_distance) {
    distance = *options.pinned_distance;
  } else {
    RandomStream distance_stream = rng.stream(kDistanceTag, 0);
    distance = sample_user_distance(distance_stream, cfg.coverage_radius());
  }
  const double threshold = std::exp2(r_uc / cfg.bandwidth()) - 1.0;
  const double success = std::exp(-threshold / cfg.mean_snr_at(distance));
  if (success <= 0.0) detail::throw_stalled("unicast transfer", episode);

  const auto packets_needed = static_cast<std::int64_t>(
      std::ceil(cfg.file_size() / (cfg.slot_duration() * r_uc)));
  std::int64_t slots = 0;
  std::int64_t received = 0;
  while (received < packets_needed) {
    ++slots;
    if (slots > kWatchdogSlots) detail::throw_stalled("unicast transfer", episode);
    if (rng.fading_unit(slots, 0) < success) ++received;
  }

  EpisodeResult result;
  result.mode = DeliveryMode::unicast;
  result.group_size = 1;
  result.mc_slots = slots;
  result.mc_successful_slots = received;
  result.mc_rate = r_uc;
  result.per_user_delivery = {cfg.slot_duration() * static_cast<double>(slots)};
  result.mean_delivery = result.per_user_delivery.front();
  return result;
}

struct GroupSizeBin {
  std::int64_t count{};
  double mean_delivery{};
};

struct MonteCarloSummary {
  DeliveryMode mode{};
  std::int64_t episodes{};
  double mean_delivery{};
  double std_delivery{};           // sample standard deviation across episodes
  double ci95_half_width{};        // 1.96 * std / sqrt(episodes)
  double mean_smin{};
  double mean_slast{};
  std::map<int, double> k_probability;  // realized group-size distribution, sums to 1
  std::map<int, GroupSizeBin> by_k;     // per-group-size episode count and mean delivery
};

namespace detail {

inline int resolve_worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SMMC_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Fills results[i] = fn(i) for i in [0, n) across worker threads. Episodes
// land at their own index, so the outcome is identical for any worker count.
template <class T, class Fn>
std::vector<T> parallel_episodes(std::int64_t n, int workers, Fn&& fn) {
  std::vector<T> results(static_cast<std::size_t>(n));
  workers = static_cast<int>(std::min<std::int64_t>(resolve_worker_count(workers), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) results[static_cast<std::size_t>(i)] = fn(i);
    return results;
  }
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t i = w; i < n; i += workers) {
          results[static_cast<std::size_t>(i)] = fn(i);
        }
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace detail

// Runs n independent episodes in index order. Episode i depends only on
// (seed, i), so results are identical for any worker count; workers defaults
// to the SMMC_WORKERS environment variable, then the hardware thread count.
inline std::vector<EpisodeResult> run_episodes(DeliveryMode mode, const RatePlan& plan,
                                               const SystemConfig& cfg, std::int64_t episodes,
                                               std::uint64_t seed,
                                               const SimOptions& options = {},
                                               int workers = 0) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (mode == DeliveryMode::unicast) {
    if (!(plan.r_uc > 0)) throw std::invalid_argument("plan.r_uc must be positive");
  } else {
    validate_plan(plan, cfg);
  }
  return detail::parallel_episodes<EpisodeResult>(episodes, workers, [&](std::int64_t i) {
    return mode == DeliveryMode::unicast
               ? run_unicast_episode(seed, i, plan.r_uc, cfg, options)
               : run_smmc_episode(seed, i, plan, cfg, mode, options);
  });
}

inline MonteCarloSummary summarize(DeliveryMode mode,
                                   const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw std::invalid_argument("cannot summarize zero episodes");
  const std::int64_t episodes = static_cast<std::int64_t>(results.size());
  MonteCarloSummary summary;
  summary.mode = mode;
  summary.episodes = episodes;
  double sum = 0.0;
  double smin_sum = 0.0;
  double slast_sum = 0.0;
  for (const EpisodeResult& r : results) {
    sum += r.mean_delivery;
    smin_sum += r.s_min;
    slast_sum += r.s_last;
    GroupSizeBin& bin = summary.by_k[r.group_size];
    ++bin.count;
    bin.mean_delivery += r.mean_delivery;
  }
  const double n = static_cast<double>(episodes);
  summary.mean_delivery = sum / n;
  summary.mean_smin = smin_sum / n;
  summary.mean_slast = slast_sum / n;
  double sq = 0.0;
  for (const EpisodeResult& r : results) {
    const double d = r.mean_delivery - summary.mean_delivery;
    sq += d * d;
  }
  summary.std_delivery = episodes > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  summary.ci95_half_width = 1.96 * summary.std_delivery / std::sqrt(n);
  for (auto& [k, bin] : summary.by_k) {
    summary.k_probability[k] = static_cast<double>(bin.count) / n;
    bin.mean_delivery /= static_cast<double>(bin.count);
  }
  return summary;
}

inline MonteCarloSummary monte_carlo(DeliveryMode mode, const RatePlan& plan,
                                     const SystemConfig& cfg, std::int64_t episodes,
                                     std::uint64_t seed, const SimOptions& options = {},
                                     int workers = 0) {
  return summarize(mode, run_episodes(mode, plan, cfg, episodes, seed, options, workers));
}

}  // namespace smmc
