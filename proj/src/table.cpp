#include "augplan/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "augplan/error.hpp"

namespace augplan {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::text: return "text";
    case ColumnKind::key: return "key";
  }
  return "unknown";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "text") return ColumnKind::text;
  if (text == "key") return ColumnKind::key;
  throw_data_error("unknown column kind '" + std::string(text) + "'");
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

ColumnKind infer_kind(std::span<const Cell> cells) {
  bool all_numeric = true;
  std::set<std::string_view> distinct;
  for (const Cell& cell : cells) {
    if (!cell) continue;
    if (all_numeric && !parse_number(*cell)) all_numeric = false;
    distinct.insert(*cell);
  }
  if (all_numeric) return ColumnKind::numeric;
  const double ratio = cells.empty() ? 0.0
                                     : static_cast<double>(distinct.size()) /
                                           static_cast<double>(cells.size());
  return ratio < kCategoricalDistinctRatio ? ColumnKind::categorical : ColumnKind::text;
}

Column::Column(std::string name, ColumnKind kind, std::vector<Cell> cells)
    : name_(std::move(name)), kind_(kind), cells_(std::move(cells)) {
  if (kind_ != ColumnKind::numeric) return;
  numbers_.reserve(cells_.size());
  for (const Cell& cell : cells_) {
    if (!cell) {
      numbers_.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    auto value = parse_number(*cell);
    if (!value) {
      throw_data_error("column '" + name_ + "': cell '" + *cell + "' is not a finite number");
    }
    numbers_.push_back(*value);
  }
}

std::size_t Column::null_count() const {
  std::size_t n = 0;
  for (const Cell& cell : cells_) n += cell ? 0 : 1;
  return n;
}

Column Column::renamed(std::string name) const {
  Column copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

Column Column::with_kind(ColumnKind kind) const {
  if (kind == kind_) return *this;
  return Column(name_, kind, cells_);
}

Table::Table(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
  row_count_ = columns_.empty() ? 0 : columns_.front().size();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& col = columns_[i];
    if (col.size() != row_count_) {
      throw_data_error("table '" + name_ + "': column '" + col.name() + "' has " +
                       std::to_string(col.size()) + " cells, expected " +
                       std::to_string(row_count_));
    }
    if (!index_.emplace(col.name(), i).second) {
      throw_data_error("table '" + name_ + "': duplicate column name '" + col.name() + "'");
    }
  }
}

bool Table::has_column(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t Table::column_index(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw_data_error("table '" + name_ + "' has no column '" + std::string(name) + "'");
  }
  return it->second;
}

const Column& Table::column(std::string_view name) const { return columns_[column_index(name)]; }

Table Table::with_column(Column column) const {
  std::vector<Column> columns = columns_;
  columns.push_back(std::move(column));
  return Table(name_, std::move(columns));
}

Table Table::with_kinds(const std::map<std::string, ColumnKind>& kinds) const {
  std::vector<Column> columns;
  columns.reserve(columns_.size());
  for (const Column& col : columns_) {
    auto it = kinds.find(col.name());
    columns.push_back(it == kinds.end() ? col : col.with_kind(it->second));
  }
  for (const auto& [name, kind] : kinds) {
    if (!has_column(name)) {
      throw_data_error("table '" + name_ + "': kind override for unknown column '" + name + "'");
    }
  }
  return Table(name_, std::move(columns));
}

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  while (i < content.size()) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r' || c == '\n') {
      end_record();
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw_data_error("unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

Table table_from_records(const std::string& name,
                         const std::vector<std::vector<std::string>>& records) {
  if (records.empty()) throw_data_error("table '" + name + "': missing header row");
  const auto& header = records.front();
  const std::size_t width = header.size();
  std::set<std::string> seen;
  for (const auto& h : header) {
    if (!seen.insert(h).second) {
      throw_data_error("table '" + name + "': duplicate header '" + h + "'");
    }
  }
  std::vector<std::vector<Cell>> cells(width);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw_data_error("table '" + name + "': row " + std::to_string(r) + " has " +
                       std::to_string(records[r].size()) + " fields, expected " +
                       std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& v = records[r][c];
      cells[c].push_back(v.empty() ? Cell{} : Cell{v});
    }
  }
  std::vector<Column> columns;
  columns.reserve(width);
  for (std::size_t c = 0; c < width; ++c) {
    const ColumnKind kind = infer_kind(cells[c]);
    columns.emplace_back(header[c], kind, std::move(cells[c]));
  }
  return Table(name, std::move(columns));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data_error("cannot read file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_stage_error("cannot write file '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw_stage_error("failed writing '" + path.string() + "'");
}

Table read_csv_table(const std::filesystem::path& source, const std::string& declared_name) {
  return table_from_records(declared_name, parse_csv(read_text_file(source)));
}

namespace {

void append_field(std::string& out, std::string_view value) {
  const bool quote = value.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!quote) {
    out.append(value);
    return;
  }
  out.push_back('"');
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  const auto& cols = table.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(',');
    append_field(out, cols[c].name());
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(',');
      if (!cols[c].is_null(r)) append_field(out, cols[c].text(r));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table& table, const std::filesystem::path& target) {
  write_text_file(target, to_csv(table));
}

}  // namespace augplan
