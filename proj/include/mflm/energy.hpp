#pragma once

// Daily-curve design built from the appliances energy data set (10-minute
// readings): every covariate of day d becomes a curve over the day, paired
// with the log of the mean appliances consumption of day d + 1.

#include <filesystem>
#include <string>
#include <vector>

#include "mflm/hilbert.hpp"

namespace mflm {

/// Appliances, lights, T1, RH_1, ..., T9, RH_9, T_out, Press_mm_hg, RH_out,
/// Windspeed.
std::vector<std::string> default_energy_variables();

struct EnergyConfig {
  std::filesystem::path raw_csv_path;
  int samples_per_day = 144;
  std::vector<std::string> variables = default_energy_variables();
  std::string response_column = "Appliances";
  /// Accept a response day with missing readings (mean of the readings present).
  /// Covariate days always need every reading.
  bool partial_response_day = true;
};

struct EnergyData {
  Dataset data;                     // range-scaled and centered
  std::vector<std::string> days;    // covariate day of each observation (YYYY-MM-DD)
  std::vector<double> ranges;       // max - min of each raw covariate
  std::size_t days_seen = 0;
  std::size_t incomplete_days = 0;  // days lacking at least one reading
};

EnergyData prepare_energy(const EnergyConfig& config);

}  // namespace mflm
