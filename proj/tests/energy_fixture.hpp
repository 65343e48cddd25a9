#pragma once

// Writes files in the layout of the appliances energy data set: a quoted
// "date" column at 10-minute steps followed by the 28 measurement columns.
// Values are synthetic (smooth daily cycles plus noise).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace fixture {

inline std::vector<std::string> energy_columns() {
  std::vector<std::string> c = {"Appliances", "lights"};
  for (int k = 1; k <= 9; ++k) {
    c.push_back("T" + std::to_string(k));
    c.push_back("RH_" + std::to_string(k));
  }
  for (const char* s : {"T_out", "Press_mm_hg", "RH_out", "Windspeed", "Visibility", "Tdewpoint", "rv1", "rv2"}) {
    c.emplace_back(s);
  }
  return c;
}

inline std::string stamp(std::chrono::sys_seconds t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return buf;
}

/// `rows` readings every 10 minutes from `start`. Rows listed in `skip`
/// (zero-based) are omitted.
inline void write_energy_csv(const std::filesystem::path& path, std::chrono::sys_seconds start, long rows,
                             std::uint64_t seed = 1, const std::vector<long>& skip = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto cols = energy_columns();
  std::ofstream out(path);
  out << "\"date\"";
  for (const auto& c : cols) out << ",\"" << c << "\"";
  out << "\n";
  double level = 0.0;
  for (long r = 0; r < rows; ++r) {
    const auto t = start + std::chrono::minutes(10 * r);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(r % 144) / 144.0;
    if (r % 144 == 0) level = 0.7 * level + 0.3 * z(rng);
    if (std::find(skip.begin(), skip.end(), r) != skip.end()) continue;
    out << '"' << stamp(t) << '"';
    for (std::size_t c = 0; c < cols.size(); ++c) {
      double v;
      if (c == 0) {
        v = std::round(std::exp(4.3 + 0.4 * level + 0.5 * std::sin(phase) + 0.3 * z(rng)));
      } else if (c == 1) {
        v = 10.0 * std::floor(std::max(0.0, 2.0 * std::sin(phase) + z(rng)));
      } else {
        v = 20.0 + 5.0 * std::sin(phase + 0.1 * static_cast<double>(c)) + 2.0 * level + 0.5 * z(rng);
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace fixture
