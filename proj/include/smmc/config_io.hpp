#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "smmc/bounds.hpp"
#include "smmc/channel.hpp"

namespace smmc {

// Physical dimension a config value is expected to carry; selects the unit
// table and the SI base the value is converted to.
enum class Quantity {
  dimensionless,
  power,      // watts
  frequency,  // hertz
  time,       // seconds
  length,     // meters
  data,       // bits
  rate,       // bits per second
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

struct UnitEntry {
  const char* suffix;
  double factor;
};

// Multiplicative suffixes per dimension. A bare number is taken in the SI
// base unit. dBm is handled separately since it is not multiplicative.
inline const std::vector<UnitEntry>& unit_table(Quantity kind) {
  static const std::vector<UnitEntry> none{};
  static const std::vector<UnitEntry> power{
      {"mW", 1e-3}, {"uW", 1e-6}, {"kW", 1e3}, {"W", 1.0}};
  static const std::vector<UnitEntry> frequency{
      {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}, {"Hz", 1.0}};
  static const std::vector<UnitEntry> time{
      {"ms", 1e-3}, {"us", 1e-6}, {"min", 60.0}, {"s", 1.0}};
  static const std::vector<UnitEntry> length{{"km", 1e3}, {"cm", 1e-2}, {"m", 1.0}};
  static const std::vector<UnitEntry> data{
      {"kbit", 1e3}, {"Mbit", 1e6}, {"Gbit", 1e9}, {"Tbit", 1e12}, {"bits", 1.0},
      {"bit", 1.0},  {"kB", 8e3},   {"MB", 8e6},   {"GB", 8e9},    {"TB", 8e12},
      {"B", 8.0}};
  static const std::vector<UnitEntry> rate{
      {"kbps", 1e3}, {"Mbps", 1e6}, {"Gbps", 1e9}, {"bps", 1.0}};
  switch (kind) {
    case Quantity::dimensionless: return none;
    case Quantity::power: return power;
    case Quantity::frequency: return frequency;
    case Quantity::time: return time;
    case Quantity::length: return length;
    case Quantity::data: return data;
    case Quantity::rate: return rate;
  }
  return none;
}

}  // namespace detail

// Parses "value[ unit]" into the SI base of the given dimension, e.g.
// "500mW" -> 0.5, "-104 dBm" -> 3.98e-14, "1GB" -> 8e9 bits. The key only
// labels error messages.
inline double parse_quantity(const std::string& raw, Quantity kind, const std::string& key) {
  const std::string text = detail::strip_quotes(detail::trim(raw));
  if (text.empty()) throw std::invalid_argument("empty value for '" + key + "'");

  const char* begin = text.c_str();
  char* number_end = nullptr;
  const double value = std::strtod(begin, &number_end);
  if (number_end == begin) {
    throw std::invalid_argument("cannot parse a number from '" + text + "' for '" + key + "'");
  }
  const std::string suffix = detail::trim(std::string(number_end));
  if (!std::isfinite(value)) {
    throw std::invalid_argument("non-finite value '" + text + "' for '" + key + "'");
  }

  if (suffix.empty()) return value;
  if (kind == Quantity::power && suffix == "dBm") return dbm_to_watts(value);
  for (const auto& entry : detail::unit_table(kind)) {
    if (suffix == entry.suffix) return value * entry.factor;
  }
  throw std::invalid_argument("unknown unit '" + suffix + "' for '" + key + "'");
}

// Reads a flat "key = value" file: '#' starts a comment, blank lines are
// skipped, values may be quoted, duplicate keys are rejected.
inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                  ": expected 'key = value'");
    }
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument(path + ":" + std::to_string(line_number) + ": empty key");
    }
    if (!entries.emplace(key, value).second) {
      throw std::invalid_argument(path + ":" + std::to_string(line_number) +
                                  ": duplicate key '" + key + "'");
    }
  }
  return entries;
}

// Loads the system description. All eight keys are required; anything else
// is rejected so typos fail loudly.
inline SystemConfig load_config(const std::string& path) {
  static const std::map<std::string, Quantity> schema{
      {"bandwidth", Quantity::frequency},
      {"tx_power", Quantity::power},
      {"noise_power", Quantity::power},
      {"path_loss_exponent", Quantity::dimensionless},
      {"slot_duration", Quantity::time},
      {"coverage_radius", Quantity::length},
      {"file_size", Quantity::data},
      {"arrival_rate", Quantity::dimensionless},
  };
  const auto entries = read_key_values(path);
  for (const auto& [key, value] : entries) {
    if (schema.count(key) == 0) {
      throw std::invalid_argument(path + ": unknown key '" + key + "'");
    }
  }
  std::map<std::string, double> parsed;
  for (const auto& [key, kind] : schema) {
    const auto it = entries.find(key);
    if (it == entries.end()) {
      throw std::invalid_argument(path + ": missing required key '" + key + "'");
    }
    parsed[key] = parse_quantity(it->second, kind, key);
  }
  SystemConfig::Params params;
  params.bandwidth_hz = parsed["bandwidth"];
  params.tx_power_w = parsed["tx_power"];
  params.noise_power_w = parsed["noise_power"];
  params.path_loss_exponent = parsed["path_loss_exponent"];
  params.slot_duration_s = parsed["slot_duration"];
  params.coverage_radius_m = parsed["coverage_radius"];
  params.file_size_bits = parsed["file_size"];
  params.arrival_rate_per_slot = parsed["arrival_rate"];
  return SystemConfig(params);
}

// Loads a rate plan produced by the optimizer (or written by hand): r_uc,
// r_mc, and an integer t_set.
inline RatePlan load_plan(const std::string& path) {
  const auto entries = read_key_values(path);
  for (const auto& [key, value] : entries) {
    if (key != "r_uc" && key != "r_mc" && key != "t_set") {
      throw std::invalid_argument(path + ": unknown key '" + key + "'");
    }
  }
  const auto require = [&](const char* key) -> const std::string& {
    const auto it = entries.find(key);
    if (it == entries.end()) {
      throw std::invalid_argument(path + ": missing required key '" + std::string(key) + "'");
    }
    return it->second;
  };
  RatePlan plan;
  plan.r_uc = parse_quantity(require("r_uc"), Quantity::rate, "r_uc");
  plan.r_mc = parse_quantity(require("r_mc"), Quantity::rate, "r_mc");
  const double t_set = parse_quantity(require("t_set"), Quantity::dimensionless, "t_set");
  if (!(t_set >= 0) || t_set != std::floor(t_set)) {
    throw std::invalid_argument(path + ": t_set must be a non-negative integer");
  }
  plan.t_set = static_cast<std::int64_t>(t_set);
  return plan;
}

}  // namespace smmc
