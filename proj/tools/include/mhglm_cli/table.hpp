#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "mhglm/dataset.hpp"

namespace mhglm::cli {

/// Delimited text with a header row. Fields may be double-quoted ("" escapes a
/// quote). Blank lines are skipped.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  ///< 1-based source line of each row

  std::size_t column(const std::string& name) const;  ///< throws InvalidInput
};

Table read_table(std::istream& in, char delim, const std::string& source);
Table read_table_file(const std::string& path, char delim);

/// Column roles. Fixed and random sets may overlap; the group column may not
/// appear anywhere else.
struct ColumnRoles {
  std::string group;
  std::string response;
  std::vector<std::string> fixed;
  std::vector<std::string> random;
  bool intercept = true;

  std::vector<std::string> fixed_names() const;   ///< with "(Intercept)" when enabled
  std::vector<std::string> random_names() const;
  void check() const;
};

inline constexpr const char* kInterceptName = "(Intercept)";

/// Grouped data in first-appearance group order; rows keep file order within
/// each group. row_group/row_index map every table row back to its place.
struct TableDesign {
  GroupedDataset data;
  std::vector<std::size_t> row_group;
  std::vector<Index> row_index;
};

/// With need_response = false the response column is not read and y is zero.
TableDesign build_design(const Table& table, const ColumnRoles& roles, bool need_response);

double parse_number(const std::string& field, const Table& table, std::size_t row, const std::string& column);

}  // namespace mhglm::cli
