#ifndef NESPRINDT_DATASET_HPP
#define NESPRINDT_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nesprindt/common.hpp"

namespace nesprindt {

enum class ColumnKind : std::uint8_t { Categorical, Numeric };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Categorical;
  // Categorical only; level names in first-appearance order. The vocabulary is
  // closed: no operation introduces a level absent from this list.
  std::vector<std::string> levels;
};

// Immutable after load; safe to share across concurrent tree fits. Cells are
// stored column-major: integer level codes for categorical columns, doubles
// for numeric ones.
class Dataset {
 public:
  const std::vector<ColumnSchema>& schema() const { return schema_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_columns() const { return schema_.size(); }

  std::size_t column_index(std::string_view name) const;  // throws DataError
  std::optional<std::size_t> find_column(std::string_view name) const;

  bool is_categorical(std::size_t col) const { return schema_[col].kind == ColumnKind::Categorical; }
  std::int32_t cat_code(std::size_t col, RowIndex row) const { return cat_codes_[col][row]; }
  double num_value(std::size_t col, RowIndex row) const { return num_values_[col][row]; }
  const std::vector<std::int32_t>& cat_column(std::size_t col) const { return cat_codes_[col]; }
  const std::vector<double>& num_column(std::size_t col) const { return num_values_[col]; }
  std::int32_t level_code(std::size_t col, std::string_view level) const;  // throws DataError

  std::size_t class_column() const { return class_col_; }
  std::int32_t large_code() const { return large_code_; }
  std::int32_t small_code() const { return small_code_; }
  const std::string& class_level(ClassLabel which) const;
  ClassLabel class_of(RowIndex row) const {
    return cat_codes_[class_col_][row] == small_code_ ? ClassLabel::Small : ClassLabel::Large;
  }

  RowIndexSet all_rows() const;

 private:
  friend class DatasetBuilder;

  std::vector<ColumnSchema> schema_;
  std::vector<std::vector<std::int32_t>> cat_codes_;
  std::vector<std::vector<double>> num_values_;
  std::size_t n_rows_ = 0;

  std::size_t class_col_ = 0;
  std::int32_t large_code_ = 0;
  std::int32_t small_code_ = 0;
};

// Assembles a Dataset from in-memory columns; used by the CSV loader, the
// synthetic generator and the tests. Validates the class column and fixes the
// large/small designation from full-data counts.
class DatasetBuilder {
 public:
  DatasetBuilder& add_categorical(std::string name, std::vector<std::string> values);
  // Declared levels may extend beyond the observed values (a closed vocabulary
  // can carry levels with zero rows); observed values must be members.
  DatasetBuilder& add_categorical(std::string name, std::vector<std::string> values,
                                  std::vector<std::string> declared_levels);
  DatasetBuilder& add_numeric(std::string name, std::vector<double> values);
  Dataset build(const std::string& class_column);

 private:
  struct PendingColumn {
    std::string name;
    ColumnKind kind;
    std::vector<std::string> cat_values;
    std::vector<double> num_values;
    std::vector<std::string> declared_levels;
  };
  std::vector<PendingColumn> columns_;
};

// Raw CSV table: header + string cells. Comma-separated, first row header,
// no quoting; rejects ragged rows and empty cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv_table(const std::filesystem::path& path);

// Column kinds are hinted per name or inferred (numeric iff every cell parses
// as a decimal number); the class column is always categorical. Categorical
// levels are recorded in first-appearance order; the class level with fewer
// rows becomes "small" (ties: the later-appearing level).
Dataset load_csv(const std::filesystem::path& path,
                 const std::map<std::string, ColumnKind>& schema_hint,
                 const std::string& class_column);

std::pair<std::size_t, std::size_t> class_counts(const Dataset& d);  // (large, small)
std::pair<std::size_t, std::size_t> class_counts(const Dataset& d, const RowIndexSet& within);

RowIndexSet rows_with_level(const Dataset& d, std::string_view column, std::string_view level);

}  // namespace nesprindt

#endif
