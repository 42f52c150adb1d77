#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace augplan {

enum class ColumnKind { numeric, categorical, text, key };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

/// Distinct-value ratio below which a non-numeric column is categorical.
inline constexpr double kCategoricalDistinctRatio = 0.5;

using Cell = std::optional<std::string>;

/// A typed column. Cells keep their original text so that key matching and
/// CSV export are exact; numeric columns additionally hold parsed values.
class Column {
 public:
  Column(std::string name, ColumnKind kind, std::vector<Cell> cells);

  const std::string& name() const { return name_; }
  ColumnKind kind() const { return kind_; }
  std::size_t size() const { return cells_.size(); }

  bool is_null(std::size_t row) const { return !cells_[row].has_value(); }
  const Cell& cell(std::size_t row) const { return cells_[row]; }
  const std::string& text(std::size_t row) const { return *cells_[row]; }
  /// Parsed value; NaN for null cells. Only valid for numeric columns.
  double number(std::size_t row) const { return numbers_[row]; }
  const std::vector<Cell>& cells() const { return cells_; }

  std::size_t null_count() const;
  bool is_numeric() const { return kind_ == ColumnKind::numeric; }

  Column renamed(std::string name) const;
  Column with_kind(ColumnKind kind) const;

 private:
  std::string name_;
  ColumnKind kind_;
  std::vector<Cell> cells_;
  std::vector<double> numbers_;
};

/// Parses a finite real from the whole of `text`.
std::optional<double> parse_number(std::string_view text);

/// numeric if every non-null cell parses, else categorical when the distinct
/// ratio is under kCategoricalDistinctRatio, else text.
ColumnKind infer_kind(std::span<const Cell> cells);

class Table {
 public:
  Table(std::string name, std::vector<Column> columns);

  const std::string& name() const { return name_; }
  std::size_t row_count() const { return row_count_; }
  const std::vector<Column>& columns() const { return columns_; }

  bool has_column(std::string_view name) const;
  const Column& column(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;

  Table with_column(Column column) const;
  /// Applies kind overrides, e.g. marking join keys.
  Table with_kinds(const std::map<std::string, ColumnKind>& kinds) const;

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t row_count_ = 0;
};

/// RFC 4180 reader: header row required, empty field means null.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);
Table read_csv_table(const std::filesystem::path& source, const std::string& declared_name);
Table table_from_records(const std::string& name,
                         const std::vector<std::vector<std::string>>& records);

std::string to_csv(const Table& table);
void write_csv(const Table& table, const std::filesystem::path& target);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace augplan
