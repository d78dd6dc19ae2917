#include "archattr/attribute_table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "archattr/error.hpp"

namespace archattr {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorCode::Io,
                "line " + std::to_string(line_no) + ": invalid number '" + cell + "'");
  }
  return value;
}

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\n\r\"") != std::string::npos) {
    throw Error(ErrorCode::Io, "network id '" + id + "' cannot be written to CSV");
  }
}

}  // namespace

bool AttributeTable::has_accuracy() const {
  for (const auto& row : rows) {
    if (row.accuracy) return true;
  }
  return false;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_attribute_csv(std::ostream& out, const AttributeTable& table) {
  const bool with_accuracy = table.has_accuracy();
  out << "network_id";
  for (auto name : kAttributeNames) out << ',' << name;
  if (with_accuracy) out << ",accuracy";
  out << '\n';

  std::set<std::string> ids;
  for (const auto& row : table.rows) {
    check_id(row.network_id);
    if (!ids.insert(row.network_id).second) {
      throw Error(ErrorCode::Io, "duplicate network id '" + row.network_id + "'");
    }
    out << row.network_id;
    for (double v : row.values) out << ',' << format_double(v);
    if (with_accuracy) {
      out << ',';
      if (row.accuracy) out << format_double(*row.accuracy);
    }
    out << '\n';
  }
}

void save_attribute_csv(const std::filesystem::path& path, const AttributeTable& table) {
  std::ostringstream buffer;
  write_attribute_csv(buffer, table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << buffer.str();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

AttributeTable read_attribute_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty attribute CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  const bool with_accuracy = header.size() == kNumAttributes + 2;
  if (header.size() != kNumAttributes + 1 && !with_accuracy) {
    throw Error(ErrorCode::Io, "attribute CSV header has " + std::to_string(header.size()) +
                                   " columns");
  }
  if (header[0] != "network_id" || (with_accuracy && header.back() != "accuracy")) {
    throw Error(ErrorCode::Io, "attribute CSV header must start with network_id");
  }
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (header[i + 1] != kAttributeNames[i]) {
      throw Error(ErrorCode::Io, "unexpected column '" + header[i + 1] + "', expected '" +
                                     std::string(kAttributeNames[i]) + "'");
    }
  }

  AttributeTable table;
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " cells");
    }
    AttributeVector row;
    row.network_id = cells[0];
    if (!ids.insert(row.network_id).second) {
      throw Error(ErrorCode::Io, "duplicate network id '" + row.network_id + "'");
    }
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      row.values[i] = parse_cell(cells[i + 1], line_no);
    }
    if (with_accuracy && !cells.back().empty()) {
      row.accuracy = parse_cell(cells.back(), line_no);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

AttributeTable load_attribute_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return read_attribute_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace archattr
