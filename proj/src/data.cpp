#include "mflm/data.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mflm/errors.hpp"

namespace mflm {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(unquote(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void check_name(const std::string& name, const std::string& where) {
  if (name.empty() || name.find_first_of(" \t,\"") != std::string::npos) {
    throw ParseError(where + ": invalid block name '" + name + "'");
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::vector<std::string> resolve_names(const std::vector<std::string>& names, std::size_t p) {
  if (names.size() == p) return names;
  std::vector<std::string> out;
  for (std::size_t j = 0; j < p; ++j) out.push_back("X" + std::to_string(j + 1));
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  const std::string s = trim(cell);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto r = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line) + ", column '" + column + "': not a number: '" + cell + "'");
  }
  return v;
}

std::size_t CsvTable::column(const std::string& name, const std::string& context) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw ParseError(context + ": missing column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError(path.string() + " line " + std::to_string(lineno) + ": " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw ParseError(path.string() + ": empty file");
  return t;
}

std::vector<std::string> block_columns(const std::string& name, const BlockSpec& spec) {
  std::vector<std::string> cols;
  switch (spec.kind()) {
    case BlockKind::Curve:
      for (Index k = 1; k <= spec.size(); ++k) cols.push_back(name + "__t" + std::to_string(k));
      break;
    case BlockKind::Vector:
      for (Index k = 1; k <= spec.size(); ++k) cols.push_back(name + "__" + std::to_string(k));
      break;
    case BlockKind::Scalar:
      cols.push_back(name);
      break;
  }
  return cols;
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  DatasetManifest m;
  m.format.clear();
  bool in_blocks = false;
  bool have_n = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path.string() + " line " + std::to_string(lineno);
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (in_blocks) {
      const auto w = words(s);
      check_name(w[0], where);
      if (w.size() < 2) throw ParseError(where + ": block '" + w[0] + "' lacks a kind");
      if (w[1] == "scalar") {
        if (w.size() != 2) throw ParseError(where + ": scalar block takes no arguments");
        m.blocks.push_back({w[0], BlockSpec::scalar()});
      } else if (w[1] == "vector") {
        if (w.size() != 3) throw ParseError(where + ": vector block needs one dimension");
        const double d = parse_number(w[2], lineno, "dim");
        if (d < 1 || d != static_cast<double>(static_cast<Index>(d))) throw ParseError(where + ": bad vector dimension");
        m.blocks.push_back({w[0], BlockSpec::vector(static_cast<Index>(d))});
      } else if (w[1] == "curve") {
        Eigen::VectorXd grid(static_cast<Index>(w.size() - 2));
        for (std::size_t k = 2; k < w.size(); ++k) grid[static_cast<Index>(k - 2)] = parse_number(w[k], lineno, "grid");
        try {
          m.blocks.push_back({w[0], BlockSpec::curve(grid)});
        } catch (const Error& e) {
          throw ParseError(where + ": " + e.what());
        }
      } else {
        throw ParseError(where + ": unknown block kind '" + w[1] + "'");
      }
      continue;
    }
    if (s == "blocks:") {
      in_blocks = true;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key == "format") {
      m.format = value;
    } else if (key == "payload") {
      m.payload = value;
    } else if (key == "response") {
      m.response = value;
    } else if (key == "n") {
      const double n = parse_number(value, lineno, "n");
      if (n < 1 || n != static_cast<double>(static_cast<Index>(n))) throw ParseError(where + ": bad n");
      m.n = static_cast<Index>(n);
      have_n = true;
    } else {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
  }
  if (m.format != kManifestFormat) {
    throw ParseError(path.string() + ": unsupported format '" + m.format + "' (expected " + kManifestFormat + ")");
  }
  if (m.payload.empty()) throw ParseError(path.string() + ": missing payload");
  if (!have_n) throw ParseError(path.string() + ": missing n");
  if (m.blocks.empty()) throw ParseError(path.string() + ": no blocks declared");
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  auto out = open_out(path);
  out << "format = " << m.format << "\n";
  out << "payload = " << m.payload << "\n";
  out << "response = " << m.response << "\n";
  out << "n = " << m.n << "\n";
  out << "blocks:\n";
  for (const auto& b : m.blocks) {
    out << b.name << ' ' << to_string(b.spec.kind());
    if (b.spec.kind() == BlockKind::Curve) {
      for (Index k = 0; k < b.spec.grid().size(); ++k) out << ' ' << format_double(b.spec.grid()[k]);
    } else if (b.spec.kind() == BlockKind::Vector) {
      out << ' ' << b.spec.size();
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const fs::path payload = manifest_path.parent_path() / m.payload;
  const CsvTable t = read_csv(payload);
  const std::string ctx = payload.string();
  if (static_cast<Index>(t.rows.size()) != m.n) {
    throw ParseError(ctx + ": " + std::to_string(t.rows.size()) + " rows, manifest declares n = " + std::to_string(m.n));
  }

  SpaceSpec space;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& b : m.blocks) {
    const auto cols = block_columns(b.name, b.spec);
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(t.column(c, ctx));
    Eigen::MatrixXd X(m.n, b.spec.size());
    for (Index i = 0; i < m.n; ++i) {
      const auto& row = t.rows[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < idx.size(); ++k) {
        X(i, static_cast<Index>(k)) = parse_number(row[idx[k]], t.line_numbers[static_cast<std::size_t>(i)], cols[k]);
      }
    }
    space.push_back(b.spec);
    names.push_back(b.name);
    blocks.push_back(std::move(X));
  }
  const std::size_t yc = t.column(m.response, ctx);
  Eigen::VectorXd y(m.n);
  for (Index i = 0; i < m.n; ++i) {
    y[i] = parse_number(t.rows[static_cast<std::size_t>(i)][yc], t.line_numbers[static_cast<std::size_t>(i)], m.response);
  }
  return Dataset(make_space(std::move(space)), std::move(blocks), std::move(y), std::move(names));
}

void save_dataset(const Dataset& data, const fs::path& manifest_path, std::string payload_name) {
  if (payload_name.empty()) payload_name = manifest_path.stem().string() + ".csv";
  const auto names = resolve_names(data.names(), data.p());
  DatasetManifest m;
  m.payload = payload_name;
  m.n = data.n();
  for (std::size_t j = 0; j < data.p(); ++j) {
    check_name(names[j], "save_dataset");
    m.blocks.push_back({names[j], (*data.space())[j]});
  }

  auto out = open_out(manifest_path.parent_path() / payload_name);
  bool first = true;
  for (const auto& b : m.blocks) {
    for (const auto& c : block_columns(b.name, b.spec)) {
      out << (first ? "" : ",") << c;
      first = false;
    }
  }
  out << ',' << m.response << "\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) {
      const auto& X = data.block(j);
      for (Index k = 0; k < X.cols(); ++k) out << (j == 0 && k == 0 ? "" : ",") << format_double(X(i, k));
    }
    out << ',' << format_double(data.y()[i]) << "\n";
  }
  if (!out) throw IoError("failed writing payload for " + manifest_path.string());
  write_manifest(m, manifest_path);
}

void save_coefficient(const Coefficient& beta, const std::vector<std::string>& names, const fs::path& path) {
  const auto nm = resolve_names(names, beta.p());
  auto out = open_out(path);
  std::string header;
  std::string values;
  for (std::size_t j = 0; j < beta.p(); ++j) {
    const auto cols = block_columns(nm[j], (*beta.space())[j]);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      header += (header.empty() ? "" : ",") + cols[k];
      values += (values.empty() ? "" : ",") + format_double(beta.block(j)[static_cast<Index>(k)]);
    }
  }
  out << header << "\n" << values << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

Coefficient load_coefficient(const SpacePtr& space, const std::vector<std::string>& names, const fs::path& path) {
  const auto nm = resolve_names(names, space->size());
  const CsvTable t = read_csv(path);
  if (t.rows.size() != 1) throw ParseError(path.string() + ": expected exactly one coefficient row");
  std::vector<Eigen::VectorXd> blocks;
  for (std::size_t j = 0; j < space->size(); ++j) {
    const auto cols = block_columns(nm[j], (*space)[j]);
    Eigen::VectorXd b(static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      b[static_cast<Index>(k)] = parse_number(t.rows[0][t.column(cols[k], path.string())], t.line_numbers[0], cols[k]);
    }
    blocks.push_back(std::move(b));
  }
  return Coefficient(space, std::move(blocks));
}

}  // namespace mflm
