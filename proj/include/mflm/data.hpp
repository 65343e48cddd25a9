#pragma once

// Dataset persistence: a small manifest (key = value lines plus a block
// table) next to one CSV payload with one row per observation.
//
//   format = mflm-dataset/1
//   payload = sim.csv
//   response = y
//   n = 1000
//   blocks:
//   X1 curve 0 0.0101 ... 1
//   X4 vector 4
//   X5 scalar
//
// Curve blocks occupy columns <name>__t<k>, vector blocks <name>__<k>
// (k from 1), scalar blocks <name>.

#include <filesystem>
#include <string>
#include <vector>

#include "mflm/hilbert.hpp"

namespace mflm {

inline constexpr const char* kManifestFormat = "mflm-dataset/1";

struct BlockDescriptor {
  std::string name;
  BlockSpec spec;
};

struct DatasetManifest {
  std::string format = kManifestFormat;
  std::string payload;  // relative to the manifest's directory
  std::string response = "y";
  Index n = 0;
  std::vector<BlockDescriptor> blocks;
};

/// Payload column names of one block.
std::vector<std::string> block_columns(const std::string& name, const BlockSpec& spec);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Loads without centering. Missing columns, non-numeric cells and length
/// mismatches raise ParseError with the row and column.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes <manifest_path> and the payload next to it (default name: the
/// manifest stem + ".csv"). Values use 17 significant digits.
void save_dataset(const Dataset& data, const std::filesystem::path& manifest_path, std::string payload_name = {});

/// One-row CSV with the payload column layout of `names`/`space` (no response).
void save_coefficient(const Coefficient& beta, const std::vector<std::string>& names,
                      const std::filesystem::path& path);
Coefficient load_coefficient(const SpacePtr& space, const std::vector<std::string>& names,
                             const std::filesystem::path& path);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

/// Minimal CSV table: header plus numeric-or-text cells. Quotes around a cell
/// are stripped; embedded commas are not supported.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // one-based file line of each row

  std::size_t column(const std::string& name, const std::string& context) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Parses a double; throws ParseError naming the location on failure.
double parse_number(const std::string& cell, std::size_t line, const std::string& column);

}  // namespace mflm
