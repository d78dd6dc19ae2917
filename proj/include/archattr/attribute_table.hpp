#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "archattr/attributes.hpp"

namespace archattr {

// Rows share the canonical column order; network ids are unique.
struct AttributeTable {
  std::vector<AttributeVector> rows;

  bool has_accuracy() const;
};

// 17 significant digits, '.' decimal separator.
std::string format_double(double value);

// CSV with header `network_id,<30 attributes>[,accuracy]`, LF line endings.
// The accuracy column is written when any row carries an accuracy.
void write_attribute_csv(std::ostream& out, const AttributeTable& table);
void save_attribute_csv(const std::filesystem::path& path, const AttributeTable& table);

AttributeTable read_attribute_csv(std::istream& in);
AttributeTable load_attribute_csv(const std::filesystem::path& path);

}  // namespace archattr
