#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "smmc/rng.hpp"

namespace smmc {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

// Cell-wide radio and workload parameters. All values are SI at this layer
// (Hz, W, s, m, bits); unit suffixes are handled at the config boundary.
class SystemConfig {
 public:
  struct Params {
    double bandwidth_hz{};             // per-user unicast bandwidth W
    double tx_power_w{};               // base-station transmit power
    double noise_power_w{};            // receiver noise power
    double path_loss_exponent{};       // eta, >= 2
    double slot_duration_s{};          // T0
    double coverage_radius_m{};        // cell edge distance
    double file_size_bits{};           // L_f
    double arrival_rate_per_slot{};    // lambda_f, requests per slot
  };

  explicit SystemConfig(const Params& p) : p_(p) {
    require(p.bandwidth_hz > 0, "bandwidth must be positive");
    require(p.tx_power_w > 0, "tx_power must be positive");
    require(p.noise_power_w > 0, "noise_power must be positive");
    require(p.path_loss_exponent >= 2, "path_loss_exponent must be >= 2");
    require(p.slot_duration_s > 0, "slot_duration must be positive");
    require(p.coverage_radius_m > 0, "coverage_radius must be positive");
    require(p.file_size_bits > 0, "file_size must be positive");
    require(p.arrival_rate_per_slot >= 0, "arrival_rate must be non-negative");
    ref_snr_ = p.tx_power_w / p.noise_power_w;
  }

  double bandwidth() const noexcept { return p_.bandwidth_hz; }
  double tx_power() const noexcept { return p_.tx_power_w; }
  double noise_power() const noexcept { return p_.noise_power_w; }
  double path_loss_exponent() const noexcept { return p_.path_loss_exponent; }
  double slot_duration() const noexcept { return p_.slot_duration_s; }
  double coverage_radius() const noexcept { return p_.coverage_radius_m; }
  double file_size() const noexcept { return p_.file_size_bits; }
  double arrival_rate() const noexcept { return p_.arrival_rate_per_slot; }

  // Raw parameter block, for making tweaked copies of a configuration.
  const Params& params() const noexcept { return p_; }

  // rho0 = P_tx / P_noise, the mean SNR at unit distance.
  double ref_snr() const noexcept { return ref_snr_; }

  // Mean SNR for a user at the cell edge.
  double edge_mean_snr() const noexcept { return mean_snr_at(coverage_radius()); }

  // Mean SNR at distance d under power-law path loss: rho0 * d^-eta.
  double mean_snr_at(double distance) const {
    if (!(distance > 0) || distance > p_.coverage_radius_m) {
      throw std::domain_error("distance must lie in (0, coverage_radius], got " +
                              std::to_string(distance));
    }
    return ref_snr_ * std::pow(distance, -p_.path_loss_exponent);
  }

 private:
  static void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  }

  Params p_;
  double ref_snr_;
};

// Instantaneous SNR rho0 * |h|^2 * d^-eta for one fading realization.
inline double received_snr(double fading_gain, double distance, const SystemConfig& cfg) {
  if (!(fading_gain >= 0)) throw std::domain_error("fading gain must be non-negative");
  return cfg.mean_snr_at(distance) * fading_gain;
}

// Probability that a Rayleigh-faded link of the given mean SNR cannot carry
// `rate` over `eff_bandwidth`: 1 - exp(-(2^(rate/bw) - 1) / mean_snr).
// Saturates to exactly 1 when the exponent overflows the double range.
inline double outage_probability(double rate, double eff_bandwidth, double mean_snr) {
  if (!(rate >= 0)) throw std::domain_error("rate must be non-negative");
  if (!(eff_bandwidth > 0)) throw std::domain_error("effective bandwidth must be positive");
  if (!(mean_snr > 0)) throw std::domain_error("mean SNR must be positive");
  if (rate == 0) return 0.0;
  const double threshold = std::exp2(rate / eff_bandwidth) - 1.0;  // +inf on overflow
  const double x = threshold / mean_snr;
  if (!std::isfinite(x)) return 1.0;
  return -std::expm1(-x);
}

// |h|^2 for Rayleigh fading, Exp(1).
inline double sample_fading(RandomStream& rng) noexcept { return rng.next_exponential(); }

// Distance of a user placed uniformly on a disk of the given radius
// (density 2d/radius^2). Inverse CDF of u in (0,1], so d = 0 never occurs.
inline double sample_user_distance(RandomStream& rng, double radius) {
  if (!(radius > 0)) throw std::domain_error("radius must be positive");
  return radius * std::sqrt(rng.next_unit_positive());
}

}  // namespace smmc
