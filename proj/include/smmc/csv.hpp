#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <system_error>

namespace smmc {

// Locale-independent decimal rendering with enough digits to round-trip a
// double exactly. Used for every numeric CSV cell so outputs are
// byte-identical across runs and machines.
inline std::string csv_double(double value) {
  char buffer[64];
  const auto [ptr, ec] =
      std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buffer, ptr);
}

inline std::string csv_int(std::int64_t value) { return std::to_string(value); }

// Minimal comma-separated writer: fixed header, one row() call per line.
// Cells are written verbatim; callers only pass numbers and plain tokens.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<const char*> header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
    bool first = true;
    for (const char* column : header) {
      if (!first) out_ << ',';
      out_ << column;
      first = false;
    }
    out_ << '\n';
  }

  void row(std::initializer_list<std::string> cells) {
    bool first = true;
    for (const std::string& cell : cells) {
      if (!first) out_ << ',';
      out_ << cell;
      first = false;
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("failed to flush CSV output");
  }

 private:
  std::ofstream out_;
};

}  // namespace smmc
