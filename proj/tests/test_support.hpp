#pragma once

#include "smmc/channel.hpp"

namespace smmc_test {

// The single-cell deployment used throughout the suite: 10 MHz per user,
// 500 mW transmit power, -104 dBm noise, eta = 4, 10 ms slots, 300 m cell,
// 1 GB file. Derived reference numbers (frozen into the tests below):
// noise = 3.9810717055349693e-14 W, rho0 = 12559432157547.91,
// edge mean SNR = 1550.5471799441864.
inline smmc::SystemConfig reference_config(double arrival_rate = 0.002) {
  smmc::SystemConfig::Params p;
  p.bandwidth_hz = 10e6;
  p.tx_power_w = 0.5;
  p.noise_power_w = smmc::dbm_to_watts(-104.0);
  p.path_loss_exponent = 4.0;
  p.slot_duration_s = 0.01;
  p.coverage_radius_m = 300.0;
  p.file_size_bits = 8e9;
  p.arrival_rate_per_slot = arrival_rate;
  return smmc::SystemConfig(p);
}

}  // namespace smmc_test
