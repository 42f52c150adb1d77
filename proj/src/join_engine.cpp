#include "augplan/join_engine.hpp"

#include "augplan/error.hpp"

namespace augplan {

KeyIndex::KeyIndex(const Column& keys) {
  first_row_.reserve(keys.size());
  for (std::size_t r = 0; r < keys.size(); ++r) {
    if (!keys.is_null(r)) first_row_.emplace(keys.text(r), r);
  }
}

std::optional<std::size_t> KeyIndex::find(const std::string& key) const {
  auto it = first_row_.find(key);
  if (it == first_row_.end()) return std::nullopt;
  return it->second;
}

std::string augmented_column_name(const FeatureRef& feature) {
  return feature.table + "__" + feature.column;
}

Table AugmentedTable::to_table() const { return base->with_column(feature_column); }

const KeyIndex& JoinEngine::index(const ColumnRef& key_column) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(key_column);
  if (it != cache_.end()) return *it->second;
  const Column& column = graph_->table(key_column.table).column(key_column.column);
  auto [pos, inserted] = cache_.emplace(key_column, std::make_unique<KeyIndex>(column));
  return *pos->second;
}

std::vector<std::optional<std::size_t>> JoinEngine::follow(const JoinPath& path) const {
  if (path.vertices().front() != graph_->base()) {
    throw_data_error("path is not rooted at base table '" + graph_->base() + "'");
  }
  const std::size_t n = graph_->base_table().row_count();
  std::vector<std::optional<std::size_t>> rows(n);
  for (std::size_t r = 0; r < n; ++r) rows[r] = r;
  for (const JoinStep& step : path.steps(*graph_)) {
    const Column& from = graph_->table(step.from.table).column(step.from.column);
    const KeyIndex& to = index(step.to);
    for (auto& row : rows) {
      if (!row) continue;
      if (from.is_null(*row)) {
        row.reset();
        continue;
      }
      row = to.find(from.text(*row));
    }
  }
  return rows;
}

double JoinEngine::reach(const JoinPath& path) const {
  const auto rows = follow(path);
  if (rows.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& r : rows) hit += r ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

AugmentedTable JoinEngine::execute(const JoinPath& path, const FeatureRef& feature) const {
  if (path.empty()) {
    throw_data_error("cannot augment along an empty path: candidate features live outside the base");
  }
  if (feature.table != path.terminal()) {
    throw_data_error("feature '" + feature.to_string() + "' is not on path terminal '" +
                     path.terminal() + "'");
  }
  const Table& terminal = graph_->table(feature.table);
  if (!terminal.has_column(feature.column)) {
    throw_data_error("feature '" + feature.to_string() + "' not found");
  }
  const auto steps = path.steps(*graph_);
  if (steps.back().to.column == feature.column) {
    throw_data_error("feature '" + feature.to_string() + "' is the join key of the final edge");
  }
  const Column& source = terminal.column(feature.column);
  const auto rows = follow(path);

  std::vector<Cell> cells(rows.size());
  RowSet non_na;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] && !source.is_null(*rows[r])) {
      cells[r] = source.cell(*rows[r]);
      non_na.push_back(r);
    }
  }
  // Keep the source kind so that appended features type the same way as in
  // their home table.
  Column appended(augmented_column_name(feature),
                  source.kind() == ColumnKind::key ? ColumnKind::categorical : source.kind(),
                  std::move(cells));
  return AugmentedTable{graph_->table_ptr(graph_->base()), feature, path, std::move(appended),
                        std::move(non_na)};
}

double integration_quality(const AugmentedTable& aug) {
  if (aug.row_count() == 0) throw_data_error("integration quality of a zero-row table");
  return static_cast<double>(aug.non_na_index.size()) / static_cast<double>(aug.row_count());
}

NaSplit split_na(const AugmentedTable& aug) {
  NaSplit out;
  for (std::size_t r = 0; r < aug.row_count(); ++r) {
    (aug.feature_column.is_null(r) ? out.na : out.non_na).push_back(r);
  }
  return out;
}

Table combine_augmentations(const Table& base, const std::vector<AugmentedTable>& augs) {
  std::vector<Column> columns = base.columns();
  for (const AugmentedTable& a : augs) {
    if (a.row_count() != base.row_count()) throw_data_error("augmentation row count mismatch");
    columns.push_back(a.feature_column);
  }
  return Table(base.name(), std::move(columns));
}

}  // namespace augplan
