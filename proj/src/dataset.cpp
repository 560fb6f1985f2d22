#include "nesprindt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace nesprindt {

std::size_t Dataset::column_index(std::string_view name) const {
  auto found = find_column(name);
  if (!found) throw DataError("unknown column: " + std::string(name));
  return *found;
}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i)
    if (schema_[i].name == name) return i;
  return std::nullopt;
}

std::int32_t Dataset::level_code(std::size_t col, std::string_view level) const {
  const auto& levels = schema_[col].levels;
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return static_cast<std::int32_t>(i);
  throw DataError("unknown level '" + std::string(level) + "' in column " + schema_[col].name);
}

const std::string& Dataset::class_level(ClassLabel which) const {
  const auto& levels = schema_[class_col_].levels;
  return levels[static_cast<std::size_t>(which == ClassLabel::Small ? small_code_ : large_code_)];
}

RowIndexSet Dataset::all_rows() const {
  RowIndexSet rows(n_rows_);
  std::iota(rows.begin(), rows.end(), RowIndex{0});
  return rows;
}

DatasetBuilder& DatasetBuilder::add_categorical(std::string name, std::vector<std::string> values) {
  columns_.push_back({std::move(name), ColumnKind::Categorical, std::move(values), {}, {}});
  return *this;
}

DatasetBuilder& DatasetBuilder::add_categorical(std::string name, std::vector<std::string> values,
                                                std::vector<std::string> declared_levels) {
  columns_.push_back(
      {std::move(name), ColumnKind::Categorical, std::move(values), {}, std::move(declared_levels)});
  return *this;
}

DatasetBuilder& DatasetBuilder::add_numeric(std::string name, std::vector<double> values) {
  columns_.push_back({std::move(name), ColumnKind::Numeric, {}, std::move(values), {}});
  return *this;
}

Dataset DatasetBuilder::build(const std::string& class_column) {
  if (columns_.empty()) throw DataError("dataset has no columns");
  const std::size_t n = columns_.front().kind == ColumnKind::Categorical
                            ? columns_.front().cat_values.size()
                            : columns_.front().num_values.size();
  if (n == 0) throw DataError("dataset has no rows");

  Dataset d;
  d.n_rows_ = n;
  d.cat_codes_.resize(columns_.size());
  d.num_values_.resize(columns_.size());

  for (std::size_t c = 0; c < columns_.size(); ++c) {
    auto& col = columns_[c];
    ColumnSchema schema{col.name, col.kind, {}};
    for (const auto& other : d.schema_)
      if (other.name == col.name) throw DataError("duplicate column name: " + col.name);
    if (col.kind == ColumnKind::Categorical) {
      if (col.cat_values.size() != n) throw DataError("column length mismatch: " + col.name);
      std::unordered_map<std::string, std::int32_t> code_of;
      for (const auto& lev : col.declared_levels) {
        if (lev.empty()) throw DataError("empty level name in column " + col.name);
        auto [it, inserted] = code_of.try_emplace(lev, static_cast<std::int32_t>(schema.levels.size()));
        if (!inserted) throw DataError("duplicate level '" + lev + "' in column " + col.name);
        schema.levels.push_back(lev);
      }
      auto& codes = d.cat_codes_[c];
      codes.reserve(n);
      for (auto& v : col.cat_values) {
        if (v.empty()) throw DataError("empty level name in column " + col.name);
        if (!col.declared_levels.empty() && !code_of.count(v))
          throw DataError("value '" + v + "' outside declared levels of column " + col.name);
        auto [it, inserted] = code_of.try_emplace(v, static_cast<std::int32_t>(schema.levels.size()));
        if (inserted) schema.levels.push_back(v);
        codes.push_back(it->second);
      }
    } else {
      if (col.num_values.size() != n) throw DataError("column length mismatch: " + col.name);
      d.num_values_[c] = std::move(col.num_values);
    }
    d.schema_.push_back(std::move(schema));
  }

  auto class_col = d.find_column(class_column);
  if (!class_col) throw DataError("missing class column: " + class_column);
  d.class_col_ = *class_col;
  if (!d.is_categorical(d.class_col_))
    throw DataError("class column must be categorical: " + class_column);
  const auto& levels = d.schema_[d.class_col_].levels;
  if (levels.size() != 2)
    throw DataError("class column " + class_column + " has " + std::to_string(levels.size()) +
                    " observed levels, need exactly 2");

  std::size_t count0 = 0;
  for (auto code : d.cat_codes_[d.class_col_]) count0 += code == 0;
  const std::size_t count1 = n - count0;
  // Ties go to the later-appearing level as "small".
  if (count0 < count1) {
    d.small_code_ = 0;
    d.large_code_ = 1;
  } else {
    d.small_code_ = 1;
    d.large_code_ = 0;
  }
  return d;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());

  CsvTable table;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    auto cells = split_line(line);
    if (first) {
      table.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != table.header.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": ragged row (" +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(table.header.size()) + ")");
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c].empty())
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing cell in column " +
                        table.header[c]);
    table.rows.push_back(std::move(cells));
  }
  if (first) throw DataError(path.string() + ": no header row");
  return table;
}

Dataset load_csv(const std::filesystem::path& path,
                 const std::map<std::string, ColumnKind>& schema_hint,
                 const std::string& class_column) {
  CsvTable table = read_csv_table(path);
  if (table.rows.empty()) throw DataError(path.string() + ": no data rows");

  const std::size_t n_cols = table.header.size();
  DatasetBuilder builder;
  for (std::size_t c = 0; c < n_cols; ++c) {
    const std::string& name = table.header[c];
    ColumnKind kind;
    auto hint = schema_hint.find(name);
    if (name == class_column) {
      kind = ColumnKind::Categorical;
    } else if (hint != schema_hint.end()) {
      kind = hint->second;
    } else {
      kind = ColumnKind::Numeric;
      double ignored;
      for (const auto& row : table.rows)
        if (!parse_double(row[c], ignored)) {
          kind = ColumnKind::Categorical;
          break;
        }
    }

    if (kind == ColumnKind::Numeric) {
      std::vector<double> values;
      values.reserve(table.rows.size());
      for (const auto& row : table.rows) {
        double v;
        if (!parse_double(row[c], v))
          throw DataError(path.string() + ": numeric parse failure in column " + name + ": '" +
                          row[c] + "'");
        values.push_back(v);
      }
      builder.add_numeric(name, std::move(values));
    } else {
      std::vector<std::string> values;
      values.reserve(table.rows.size());
      for (const auto& row : table.rows) values.push_back(row[c]);
      builder.add_categorical(name, std::move(values));
    }
  }
  return builder.build(class_column);
}

std::pair<std::size_t, std::size_t> class_counts(const Dataset& d) {
  std::size_t small = 0;
  const auto& codes = d.cat_column(d.class_column());
  for (auto code : codes) small += code == d.small_code();
  return {d.n_rows() - small, small};
}

std::pair<std::size_t, std::size_t> class_counts(const Dataset& d, const RowIndexSet& within) {
  std::size_t small = 0;
  const auto& codes = d.cat_column(d.class_column());
  for (RowIndex r : within) {
    if (r >= d.n_rows()) throw DataError("row index out of range: " + std::to_string(r));
    small += codes[r] == d.small_code();
  }
  return {within.size() - small, small};
}

RowIndexSet rows_with_level(const Dataset& d, std::string_view column, std::string_view level) {
  const std::size_t col = d.column_index(column);
  if (!d.is_categorical(col)) throw DataError("column is not categorical: " + std::string(column));
  const std::int32_t code = d.level_code(col, level);
  RowIndexSet rows;
  const auto& codes = d.cat_column(col);
  for (std::size_t r = 0; r < codes.size(); ++r)
    if (codes[r] == code) rows.push_back(static_cast<RowIndex>(r));
  return rows;
}

}  // namespace nesprindt
