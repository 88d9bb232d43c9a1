#include "perinet/csv.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace perinet {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_int(const std::string& cell, std::int64_t& value) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end && !cell.empty();
}

std::string cell_location(const std::string& path, std::size_t row, std::size_t column,
                          const std::string& name) {
  std::string where = path + " row " + std::to_string(row + 1) + ", column " +
                      std::to_string(column + 1);
  if (!name.empty()) where += " (" + name + ")";
  return where;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path + ": cannot write");
  return out;
}

}  // namespace

CountSeries load_counts(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw io_error(path + ": empty file, expected a 't,<nodes>' header");
  const std::vector<std::string> header = split_cells(lines[0]);
  if (header.size() < 2 || header[0] != "t") {
    throw io_error(path + ": header must start with 't' followed by node names");
  }
  const std::size_t d = header.size() - 1;
  const std::size_t rows = lines.size() - 1;
  if (rows == 0) throw io_error(path + ": no data rows");

  CountSeries series;
  series.node_names.assign(header.begin() + 1, header.end());
  series.counts.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));

  std::int64_t expected_t = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::vector<std::string> cells = split_cells(lines[r + 1]);
    if (cells.size() != header.size()) {
      throw io_error(path + " row " + std::to_string(r + 2) + ": has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(header.size()));
    }
    std::int64_t t = 0;
    if (!parse_int(cells[0], t)) {
      throw io_error(cell_location(path, r + 1, 0, "t") + ": cell '" + cells[0] +
                     "' is not an integer");
    }
    if (r == 0) {
      series.t0 = t;
    } else if (t != expected_t) {
      throw io_error(path + " row " + std::to_string(r + 2) + ": t jumps from " +
                     std::to_string(expected_t - 1) + " to " + std::to_string(t));
    }
    expected_t = t + 1;
    for (std::size_t c = 0; c < d; ++c) {
      std::int64_t y = 0;
      if (!parse_int(cells[c + 1], y)) {
        throw io_error(cell_location(path, r + 1, c + 1, header[c + 1]) + ": cell '" +
                       cells[c + 1] + "' is not an integer");
      }
      if (y < 0) {
        throw io_error(cell_location(path, r + 1, c + 1, header[c + 1]) + ": cell '" +
                       cells[c + 1] + "' is negative");
      }
      series.counts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = y;
    }
  }
  return series;
}

namespace {

std::vector<std::string> effective_names(const std::vector<std::string>& given, int d) {
  if (!given.empty()) return given;
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (int i = 1; i <= d; ++i) names.push_back("node_" + std::to_string(i));
  return names;
}

void write_header(std::ofstream& out, const std::vector<std::string>& names) {
  out << "t";
  for (const std::string& name : names) out << ',' << name;
  out << '\n';
}

}  // namespace

void write_counts(const std::string& path, const CountSeries& series) {
  validate_series(series);
  std::ofstream out = open_out(path);
  write_header(out, effective_names(series.node_names, series.dimension()));
  for (std::int64_t r = 0; r < series.steps(); ++r) {
    out << series.time_of(r);
    for (int c = 0; c < series.dimension(); ++c) out << ',' << series.counts(r, c);
    out << '\n';
  }
  if (!out) throw io_error(path + ": write failed");
}

void write_intensities(const std::string& path, const CountSeries& series) {
  if (series.intensities.rows() != series.counts.rows() ||
      series.intensities.cols() != series.counts.cols()) {
    throw config_error("write_intensities: series carries no aligned intensities");
  }
  std::ofstream out = open_out(path);
  write_header(out, effective_names(series.node_names, series.dimension()));
  for (std::int64_t r = 0; r < series.steps(); ++r) {
    out << series.time_of(r);
    for (int c = 0; c < series.dimension(); ++c) {
      out << ',' << format_double(series.intensities(r, c));
    }
    out << '\n';
  }
  if (!out) throw io_error(path + ": write failed");
}

NetworkSpec load_adjacency(const std::string& path, int dimension, bool symmetric,
                           std::vector<std::string> names) {
  if (dimension < 1) throw config_error("load_adjacency: dimension must be >= 1");
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || split_cells(lines[0]) != std::vector<std::string>{"src", "dst"}) {
    throw io_error(path + ": expected a 'src,dst' header");
  }

  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < names.size(); ++i) {
    index_of[names[i]] = static_cast<int>(i);
  }
  const bool fixed_names = !names.empty();
  bool saw_numeric = false, saw_named = false;

  auto resolve = [&](const std::string& cell, std::size_t row, std::size_t col) -> int {
    std::int64_t idx = 0;
    if (parse_int(cell, idx)) {
      saw_numeric = true;
      if (idx < 1 || idx > dimension) {
        throw io_error(cell_location(path, row, col, "") + ": index " + cell + " outside 1.." +
                       std::to_string(dimension));
      }
      return static_cast<int>(idx - 1);
    }
    saw_named = true;
    const auto found = index_of.find(cell);
    if (found != index_of.end()) return found->second;
    if (fixed_names) {
      throw io_error(cell_location(path, row, col, "") + ": unknown node name '" + cell + "'");
    }
    const int next = static_cast<int>(names.size());
    if (next >= dimension) {
      throw io_error(path + ": more than " + std::to_string(dimension) + " distinct node names");
    }
    names.push_back(cell);
    index_of[cell] = next;
    return next;
  };

  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(dimension, dimension);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split_cells(lines[r]);
    if (cells.size() != 2) {
      throw io_error(path + " row " + std::to_string(r + 1) + ": expected 2 cells, got " +
                     std::to_string(cells.size()));
    }
    const int src = resolve(cells[0], r, 0);
    const int dst = resolve(cells[1], r, 1);
    if (src == dst) {
      throw io_error(path + " row " + std::to_string(r + 1) + ": self-loop on '" + cells[0] +
                     "'");
    }
    adjacency(src, dst) = 1;
    if (symmetric) adjacency(dst, src) = 1;
  }
  if (saw_numeric && saw_named) {
    throw io_error(path + ": mixes node names with numeric indices");
  }
  if (!fixed_names && saw_named && static_cast<int>(names.size()) != dimension) {
    throw io_error(path + ": names cover " + std::to_string(names.size()) + " of " +
                   std::to_string(dimension) +
                   " nodes; pass an explicit name list to place the missing ones");
  }
  if (saw_numeric) names.clear();
  return NetworkSpec(std::move(adjacency), std::move(names));
}

void write_adjacency(const std::string& path, const NetworkSpec& net) {
  std::ofstream out = open_out(path);
  out << "src,dst\n";
  const bool named = !net.node_names().empty();
  for (int i = 0; i < net.size(); ++i) {
    for (int j = 0; j < net.size(); ++j) {
      if (net.adjacency()(i, j) == 0) continue;
      if (named) {
        out << net.node_names()[static_cast<std::size_t>(i)] << ','
            << net.node_names()[static_cast<std::size_t>(j)] << '\n';
      } else {
        out << (i + 1) << ',' << (j + 1) << '\n';
      }
    }
  }
  if (!out) throw io_error(path + ": write failed");
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::string>& row_labels, const Matrix& values) {
  const bool labeled = !row_labels.empty();
  if (labeled && static_cast<Eigen::Index>(row_labels.size()) != values.rows()) {
    throw config_error("write_table: one label per row required");
  }
  if (static_cast<Eigen::Index>(header.size()) != values.cols() + (labeled ? 1 : 0)) {
    throw config_error("write_table: header size does not match the column count");
  }
  std::ofstream out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c > 0) out << ',';
    out << header[c];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    if (labeled) out << row_labels[static_cast<std::size_t>(r)] << ',';
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(values(r, c));
    }
    out << '\n';
  }
  if (!out) throw io_error(path + ": write failed");
}

std::string format_double(double x) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), x);
  if (ec != std::errc()) throw numeric_error("format_double: value does not format");
  return std::string(buffer, ptr);
}

}  // namespace perinet
