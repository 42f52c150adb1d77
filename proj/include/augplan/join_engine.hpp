#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "augplan/join_graph.hpp"
#include "augplan/table.hpp"

namespace augplan {

using RowSet = std::vector<std::size_t>;

/// Maps each non-null key of a column to the smallest row index holding it.
class KeyIndex {
 public:
  explicit KeyIndex(const Column& keys);

  std::optional<std::size_t> find(const std::string& key) const;
  std::size_t distinct() const { return first_row_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> first_row_;
};

/// Base table with one feature carried in along a join path. Unmatched rows
/// hold null.
struct AugmentedTable {
  std::shared_ptr<const Table> base;
  FeatureRef feature;
  JoinPath path;
  Column feature_column;
  RowSet non_na_index;

  std::size_t row_count() const { return base->row_count(); }
  Table to_table() const;
};

/// Name of the appended column: "<table>__<column>".
std::string augmented_column_name(const FeatureRef& feature);

/// Executes join paths with left-outer semantics from the base table and
/// first-match carry on one-to-many hops. Key indices are built once per key
/// column and shared across all paths.
class JoinEngine {
 public:
  explicit JoinEngine(const JoinGraph& graph) : graph_(&graph) {}

  const JoinGraph& graph() const { return *graph_; }
  const KeyIndex& index(const ColumnRef& key_column) const;

  /// Row of the path terminal reached from each base row, if any.
  std::vector<std::optional<std::size_t>> follow(const JoinPath& path) const;
  /// Fraction of base rows with a complete chain of matches.
  double reach(const JoinPath& path) const;

  AugmentedTable execute(const JoinPath& path, const FeatureRef& feature) const;

 private:
  const JoinGraph* graph_;
  mutable std::mutex mutex_;
  mutable std::map<ColumnRef, std::unique_ptr<KeyIndex>> cache_;
};

double integration_quality(const AugmentedTable& aug);

struct NaSplit {
  RowSet non_na;
  RowSet na;
};

NaSplit split_na(const AugmentedTable& aug);

/// Appends the feature columns of several augmentations of the same base.
Table combine_augmentations(const Table& base, const std::vector<AugmentedTable>& augs);

}  // namespace augplan
