#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "augplan/manifest.hpp"
#include "augplan/table.hpp"

namespace augplan {

/// Undirected join between two key columns. Endpoints are stored with the
/// lexicographically smaller table on the left.
struct JoinEdge {
  std::size_t index = 0;
  ColumnRef left;
  ColumnRef right;

  std::string id() const;
  bool touches(const std::string& table) const { return left.table == table || right.table == table; }
  /// Endpoint column on `table`'s side.
  const ColumnRef& side(const std::string& table) const;
  /// Endpoint column on the far side from `table`.
  const ColumnRef& opposite(const std::string& table) const;
};

/// One directed hop of a path: rows of `from.table` look up `to.table`.
struct JoinStep {
  const JoinEdge* edge = nullptr;
  ColumnRef from;
  ColumnRef to;
};

class JoinGraph;

/// Cycle-free edge sequence rooted at the base table. An empty path stays at
/// the base.
class JoinPath {
 public:
  explicit JoinPath(std::string base) : vertices_{std::move(base)} {}

  const std::vector<std::size_t>& edges() const { return edges_; }
  const std::vector<std::string>& vertices() const { return vertices_; }
  const std::string& terminal() const { return vertices_.back(); }
  std::size_t length() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  bool visits(const std::string& table) const;

  /// Appends an edge incident to the terminal; throws when the far endpoint
  /// has already been visited.
  JoinPath extended(const JoinEdge& edge) const;
  std::vector<JoinStep> steps(const JoinGraph& graph) const;

  std::vector<std::string> edge_ids(const JoinGraph& graph) const;
  std::string describe(const JoinGraph& graph) const;

  static JoinPath from_edge_ids(const JoinGraph& graph, const std::vector<std::string>& ids);

  bool operator==(const JoinPath& other) const { return edges_ == other.edges_ && vertices_ == other.vertices_; }
  /// Lexicographic by edge index sequence.
  bool operator<(const JoinPath& other) const { return edges_ < other.edges_; }

 private:
  std::vector<std::size_t> edges_;
  std::vector<std::string> vertices_;
};

class JoinGraph {
 public:
  JoinGraph(std::vector<std::shared_ptr<const Table>> tables, std::vector<JoinEdge> edges,
            std::string base, std::string target, TaskKind task,
            std::vector<std::string> warnings = {});

  const std::string& base() const { return base_; }
  const std::string& target() const { return target_; }
  TaskKind task() const { return task_; }

  const std::vector<std::shared_ptr<const Table>>& tables() const { return tables_; }
  bool has_table(const std::string& name) const { return by_name_.contains(name); }
  const Table& table(const std::string& name) const;
  std::shared_ptr<const Table> table_ptr(const std::string& name) const;
  const Table& base_table() const { return table(base_); }

  const std::vector<JoinEdge>& edges() const { return edges_; }
  const JoinEdge& edge(std::size_t index) const { return edges_.at(index); }
  const JoinEdge& edge_by_id(const std::string& id) const;
  /// Indices of edges touching `table`, ascending.
  const std::vector<std::size_t>& incident(const std::string& table) const;
  std::size_t degree(const std::string& table) const { return incident(table).size(); }

  /// Non-key columns of a candidate table. The base table has none.
  std::vector<FeatureRef> features_of(const std::string& table) const;
  std::vector<FeatureRef> all_features() const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<std::shared_ptr<const Table>> tables_;
  std::map<std::string, std::size_t> by_name_;
  std::vector<JoinEdge> edges_;
  std::map<std::string, std::vector<std::size_t>> incident_;
  std::string base_;
  std::string target_;
  TaskKind task_;
  std::vector<std::string> warnings_;
};

/// Builds the join graph. With `infer_by_name`, key columns sharing a name in
/// different tables are joined too. Duplicate edges collapse into one and are
/// reported through JoinGraph::warnings, as is an isolated base table.
JoinGraph build_join_graph(std::vector<Table> tables, const std::vector<DeclaredEdge>& declared,
                           bool infer_by_name, const BaseDescriptor& base);

JoinGraph load_join_graph(const Manifest& manifest);

/// All cycle-free paths of 1..max_hops edges, ordered by length, then by
/// edge-index sequence.
std::vector<JoinPath> enumerate_paths(const JoinGraph& graph, std::size_t max_hops);

std::map<std::size_t, std::size_t> count_paths_by_length(const std::vector<JoinPath>& paths);

}  // namespace augplan
