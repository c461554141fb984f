#include "mhglm_cli/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "mhglm/error.hpp"

namespace mhglm::cli {

namespace {

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line) + ": "; }

std::vector<std::string> split_fields(const std::string& text, char delim, const std::string& source, std::size_t line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw InvalidInput(where(source, line) + "unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && ws(s[b])) ++b;
  return s.substr(b);
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidInput(source + ": no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

Table read_table(std::istream& in, char delim, const std::string& source) {
  Table t;
  t.source = source;
  std::string text;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++lineno;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (trim(text).empty()) continue;
    auto fields = split_fields(text, delim, source, lineno);
    for (auto& f : fields) f = trim(std::move(f));
    if (!have_header) {
      t.header = std::move(fields);
      for (std::size_t i = 0; i < t.header.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (t.header[i] == t.header[j])
            throw InvalidInput(where(source, lineno) + "duplicate column name '" + t.header[i] + "'");
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw InvalidInput(where(source, lineno) + "expected " + std::to_string(t.header.size()) + " fields, found " +
                         std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line.push_back(lineno);
  }
  if (!have_header) throw InvalidInput(source + ": empty input (no header row)");
  return t;
}

Table read_table_file(const std::string& path, char delim) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_table(in, delim, path);
}

std::vector<std::string> ColumnRoles::fixed_names() const {
  std::vector<std::string> out;
  if (intercept) out.emplace_back(kInterceptName);
  out.insert(out.end(), fixed.begin(), fixed.end());
  return out;
}

std::vector<std::string> ColumnRoles::random_names() const {
  std::vector<std::string> out;
  if (intercept) out.emplace_back(kInterceptName);
  out.insert(out.end(), random.begin(), random.end());
  return out;
}

void ColumnRoles::check() const {
  if (group.empty()) throw InvalidInput("--group-col is required");
  auto has = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  if (has(fixed, group) || has(random, group) || response == group)
    throw InvalidInput("group column '" + group + "' cannot also be a response or predictor");
  if (!response.empty() && (has(fixed, response) || has(random, response)))
    throw InvalidInput("response column '" + response + "' cannot also be a predictor");
  for (const auto* list : {&fixed, &random})
    for (std::size_t i = 0; i < list->size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if ((*list)[i] == (*list)[j]) throw InvalidInput("column '" + (*list)[i] + "' listed twice");
  if (fixed_names().empty() && random_names().empty())
    throw InvalidInput("no predictors: give --fixed-cols/--random-cols or keep the intercept");
}

double parse_number(const std::string& field, const Table& table, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  if (b != e && *b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (field.empty() || ec != std::errc() || ptr != e || !std::isfinite(v))
    throw InvalidInput(where(table.source, table.line[row]) + "column '" + column + "': '" + field +
                       "' is not a finite number");
  return v;
}

TableDesign build_design(const Table& table, const ColumnRoles& roles, bool need_response) {
  roles.check();
  const std::size_t gcol = table.column(roles.group);
  const std::size_t ycol = need_response ? table.column(roles.response) : 0;
  std::vector<std::size_t> xcols, zcols;
  for (const auto& c : roles.fixed) xcols.push_back(table.column(c));
  for (const auto& c : roles.random) zcols.push_back(table.column(c));
  const Index off = roles.intercept ? 1 : 0;
  const Index p = static_cast<Index>(xcols.size()) + off;
  const Index q = static_cast<Index>(zcols.size()) + off;

  TableDesign out;
  out.data.p = p;
  out.data.q = q;
  out.data.x_names = roles.fixed_names();
  out.data.z_names = roles.random_names();
  out.row_group.resize(table.rows.size());
  out.row_index.resize(table.rows.size());

  std::unordered_map<std::string, std::size_t> index;
  std::vector<Index> counts;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& id = table.rows[r][gcol];
    if (id.empty()) throw InvalidInput(where(table.source, table.line[r]) + "empty group key");
    auto [it, inserted] = index.emplace(id, counts.size());
    if (inserted) {
      counts.push_back(0);
      out.data.groups.emplace_back();
      out.data.groups.back().id = id;
    }
    out.row_group[r] = it->second;
    out.row_index[r] = counts[it->second]++;
  }
  for (std::size_t g = 0; g < counts.size(); ++g) {
    Group& grp = out.data.groups[g];
    grp.y = VectorXd::Zero(counts[g]);
    grp.X = MatrixXd::Ones(counts[g], p);
    grp.Z = MatrixXd::Ones(counts[g], q);
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Group& grp = out.data.groups[out.row_group[r]];
    const Index i = out.row_index[r];
    if (need_response) grp.y(i) = parse_number(row[ycol], table, r, roles.response);
    for (std::size_t k = 0; k < xcols.size(); ++k)
      grp.X(i, off + static_cast<Index>(k)) = parse_number(row[xcols[k]], table, r, roles.fixed[k]);
    for (std::size_t k = 0; k < zcols.size(); ++k)
      grp.Z(i, off + static_cast<Index>(k)) = parse_number(row[zcols[k]], table, r, roles.random[k]);
  }
  return out;
}

}  // namespace mhglm::cli
