#include "mflm/energy.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "mflm/data.hpp"
#include "mflm/errors.hpp"

namespace mflm {

namespace {

struct Stamp {
  int day = 0;   // days since the epoch
  int slot = 0;  // index of the reading within the day
};

int digits(const std::string& s, std::size_t pos, std::size_t len, std::size_t line) {
  int v = 0;
  for (std::size_t k = pos; k < pos + len; ++k) {
    if (k >= s.size() || s[k] < '0' || s[k] > '9') {
      throw ParseError("line " + std::to_string(line) + ": malformed timestamp '" + s + "'");
    }
    v = 10 * v + (s[k] - '0');
  }
  return v;
}

// "YYYY-MM-DD HH:MM[:SS]" on the sampling lattice.
Stamp parse_stamp(const std::string& s, int samples_per_day, std::size_t line) {
  auto bad = [&] { return ParseError("line " + std::to_string(line) + ": malformed timestamp '" + s + "'"); };
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':') throw bad();
  using namespace std::chrono;
  const year_month_day ymd{year{digits(s, 0, 4, line)}, month{static_cast<unsigned>(digits(s, 5, 2, line))},
                           day{static_cast<unsigned>(digits(s, 8, 2, line))}};
  if (!ymd.ok()) throw bad();
  const int hh = digits(s, 11, 2, line);
  const int mm = digits(s, 14, 2, line);
  int ss = 0;
  if (s.size() >= 19) {
    if (s[16] != ':') throw bad();
    ss = digits(s, 17, 2, line);
  }
  if (hh > 23 || mm > 59 || ss > 59) throw bad();
  const int seconds = 3600 * hh + 60 * mm + ss;
  const int step = 86400 / samples_per_day;
  if (seconds % step != 0) {
    throw ParseError("line " + std::to_string(line) + ": timestamp '" + s + "' is off the " +
                     std::to_string(step / 60) + "-minute sampling grid");
  }
  return {static_cast<int>(sys_days{ymd}.time_since_epoch().count()), seconds / step};
}

std::string day_label(int day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace

std::vector<std::string> default_energy_variables() {
  std::vector<std::string> v = {"Appliances", "lights"};
  for (int k = 1; k <= 9; ++k) {
    v.push_back("T" + std::to_string(k));
    v.push_back("RH_" + std::to_string(k));
  }
  for (const char* s : {"T_out", "Press_mm_hg", "RH_out", "Windspeed"}) v.emplace_back(s);
  return v;
}

EnergyData prepare_energy(const EnergyConfig& config) {
  const int S = config.samples_per_day;
  if (S < 2 || 86400 % S != 0) throw InvalidArgument("samples_per_day must divide a day into at least 2 slots");
  if (config.variables.empty()) throw InvalidArgument("energy pipeline needs at least one covariate");

  const CsvTable t = read_csv(config.raw_csv_path);
  const std::string ctx = config.raw_csv_path.string();
  const std::size_t date_col = t.column("date", ctx);
  std::vector<std::size_t> cols;
  for (const auto& v : config.variables) cols.push_back(t.column(v, ctx));
  const std::size_t resp_col = t.column(config.response_column, ctx);
  const std::size_t p = cols.size();

  // Per day: p x S readings, the response readings, and which slots were seen.
  struct Day {
    Eigen::MatrixXd values;
    Eigen::VectorXd response;
    std::vector<bool> seen;
    int count = 0;
  };
  std::map<int, Day> days;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    const Stamp st = parse_stamp(row[date_col], S, line);
    Day& d = days[st.day];
    if (d.seen.empty()) {
      d.values = Eigen::MatrixXd::Zero(static_cast<Index>(p), S);
      d.response = Eigen::VectorXd::Zero(S);
      d.seen.assign(static_cast<std::size_t>(S), false);
    }
    if (d.seen[static_cast<std::size_t>(st.slot)]) {
      throw ParseError(ctx + " line " + std::to_string(line) + ": duplicate reading for " + row[date_col]);
    }
    d.seen[static_cast<std::size_t>(st.slot)] = true;
    ++d.count;
    for (std::size_t j = 0; j < p; ++j) {
      d.values(static_cast<Index>(j), st.slot) = parse_number(row[cols[j]], line, config.variables[j]);
    }
    d.response[st.slot] = parse_number(row[resp_col], line, config.response_column);
  }

  std::size_t incomplete = 0;
  std::vector<int> usable;
  for (const auto& [day, d] : days) {
    if (d.count < S) {
      ++incomplete;
      continue;
    }
    const auto next = days.find(day + 1);
    if (next == days.end()) continue;
    if (next->second.count < S && !config.partial_response_day) continue;
    usable.push_back(day);
  }
  const Index n = static_cast<Index>(usable.size());
  if (n < 2) throw DegenerateDesign("energy data yields fewer than 2 usable days");

  std::vector<Eigen::MatrixXd> blocks(p, Eigen::MatrixXd(n, S));
  Eigen::VectorXd y(n);
  std::vector<std::string> labels;
  for (Index i = 0; i < n; ++i) {
    const int day = usable[static_cast<std::size_t>(i)];
    const Day& d = days.at(day);
    for (std::size_t j = 0; j < p; ++j) blocks[j].row(i) = d.values.row(static_cast<Index>(j));
    const Day& nd = days.at(day + 1);
    double sum = 0.0;
    for (int s = 0; s < S; ++s) {
      if (nd.seen[static_cast<std::size_t>(s)]) sum += nd.response[s];
    }
    const double mean = sum / nd.count;
    if (!(mean > 0.0)) {
      throw DegenerateDesign("mean " + config.response_column + " on " + day_label(day + 1) + " is not positive");
    }
    y[i] = std::log(mean);
    labels.push_back(day_label(day));
  }

  std::vector<double> ranges;
  for (std::size_t j = 0; j < p; ++j) {
    const double range = blocks[j].maxCoeff() - blocks[j].minCoeff();
    if (!(range > 0.0)) throw DegenerateDesign("covariate '" + config.variables[j] + "' is constant over the used days");
    blocks[j] /= range;
    ranges.push_back(range);
  }

  // Readings at k/S of the day, k = 0..S-1.
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(S, 0.0, static_cast<double>(S - 1) / S);
  Dataset raw(make_space(SpaceSpec(p, BlockSpec::curve(grid))), std::move(blocks), std::move(y), config.variables);
  return EnergyData{prepare(raw), std::move(labels), std::move(ranges), days.size(), incomplete};
}

}  // namespace mflm
