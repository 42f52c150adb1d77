#include "augplan/join_graph.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "augplan/error.hpp"

namespace augplan {

std::string JoinEdge::id() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "e%04zu", index);
  return buf;
}

const ColumnRef& JoinEdge::side(const std::string& table) const {
  if (left.table == table) return left;
  if (right.table == table) return right;
  throw_data_error("edge " + id() + " does not touch table '" + table + "'");
}

const ColumnRef& JoinEdge::opposite(const std::string& table) const {
  if (left.table == table) return right;
  if (right.table == table) return left;
  throw_data_error("edge " + id() + " does not touch table '" + table + "'");
}

bool JoinPath::visits(const std::string& table) const {
  return std::find(vertices_.begin(), vertices_.end(), table) != vertices_.end();
}

JoinPath JoinPath::extended(const JoinEdge& edge) const {
  const std::string& next = edge.opposite(terminal()).table;
  if (visits(next)) throw_data_error("path extension revisits table '" + next + "'");
  JoinPath out = *this;
  out.edges_.push_back(edge.index);
  out.vertices_.push_back(next);
  return out;
}

std::vector<JoinStep> JoinPath::steps(const JoinGraph& graph) const {
  std::vector<JoinStep> out;
  out.reserve(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const JoinEdge& e = graph.edge(edges_[i]);
    out.push_back(JoinStep{&e, e.side(vertices_[i]), e.side(vertices_[i + 1])});
  }
  return out;
}

std::vector<std::string> JoinPath::edge_ids(const JoinGraph& graph) const {
  std::vector<std::string> ids;
  for (std::size_t e : edges_) ids.push_back(graph.edge(e).id());
  return ids;
}

std::string JoinPath::describe(const JoinGraph& graph) const {
  std::string out = vertices_.front();
  for (const JoinStep& s : steps(graph)) {
    out += " -[" + s.from.column + "=" + s.to.column + "]-> " + s.to.table;
  }
  return out;
}

JoinPath JoinPath::from_edge_ids(const JoinGraph& graph, const std::vector<std::string>& ids) {
  JoinPath path(graph.base());
  for (const std::string& id : ids) {
    const JoinEdge& e = graph.edge_by_id(id);
    if (!e.touches(path.terminal())) {
      throw_data_error("edge " + id + " does not continue path at '" + path.terminal() + "'");
    }
    path = path.extended(e);
  }
  return path;
}

JoinGraph::JoinGraph(std::vector<std::shared_ptr<const Table>> tables, std::vector<JoinEdge> edges,
                     std::string base, std::string target, TaskKind task,
                     std::vector<std::string> warnings)
    : tables_(std::move(tables)),
      edges_(std::move(edges)),
      base_(std::move(base)),
      target_(std::move(target)),
      task_(task),
      warnings_(std::move(warnings)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (!by_name_.emplace(tables_[i]->name(), i).second) {
      throw_data_error("duplicate table id '" + tables_[i]->name() + "'");
    }
    incident_[tables_[i]->name()];
  }
  if (!by_name_.contains(base_)) throw_data_error("base table '" + base_ + "' not in repository");
  if (!table(base_).has_column(target_)) {
    throw_data_error("base table '" + base_ + "' has no target column '" + target_ + "'");
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    JoinEdge& e = edges_[i];
    e.index = i;
    for (const ColumnRef* end : {&e.left, &e.right}) {
      if (!by_name_.contains(end->table) || !table(end->table).has_column(end->column)) {
        throw_data_error("edge endpoint '" + end->to_string() + "' does not exist");
      }
    }
    if (e.left.table == e.right.table) {
      throw_data_error("edge " + e.id() + " joins table '" + e.left.table + "' to itself");
    }
    incident_[e.left.table].push_back(i);
    incident_[e.right.table].push_back(i);
  }
}

const Table& JoinGraph::table(const std::string& name) const { return *table_ptr(name); }

std::shared_ptr<const Table> JoinGraph::table_ptr(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw_data_error("unknown table '" + name + "'");
  return tables_[it->second];
}

const JoinEdge& JoinGraph::edge_by_id(const std::string& id) const {
  for (const JoinEdge& e : edges_) {
    if (e.id() == id) return e;
  }
  throw_data_error("unknown edge id '" + id + "'");
}

const std::vector<std::size_t>& JoinGraph::incident(const std::string& table) const {
  auto it = incident_.find(table);
  if (it == incident_.end()) throw_data_error("unknown table '" + table + "'");
  return it->second;
}

std::vector<FeatureRef> JoinGraph::features_of(const std::string& name) const {
  std::vector<FeatureRef> out;
  if (name == base_) return out;
  for (const Column& col : table(name).columns()) {
    if (col.kind() != ColumnKind::key) out.push_back(FeatureRef{name, col.name()});
  }
  return out;
}

std::vector<FeatureRef> JoinGraph::all_features() const {
  std::vector<FeatureRef> out;
  for (const auto& t : tables_) {
    auto f = features_of(t->name());
    out.insert(out.end(), f.begin(), f.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

JoinEdge canonical(ColumnRef a, ColumnRef b) {
  if (b.table < a.table) std::swap(a, b);
  return JoinEdge{0, std::move(a), std::move(b)};
}

}  // namespace

JoinGraph build_join_graph(std::vector<Table> tables, const std::vector<DeclaredEdge>& declared,
                           bool infer_by_name, const BaseDescriptor& base) {
  std::vector<std::string> warnings;
  std::map<std::pair<ColumnRef, ColumnRef>, JoinEdge> unique;
  auto add = [&](JoinEdge e, const char* origin) {
    auto key = std::make_pair(e.left, e.right);
    if (!unique.emplace(key, e).second) {
      warnings.push_back(std::string("duplicate ") + origin + " edge " + e.left.to_string() +
                         " = " + e.right.to_string() + " collapsed");
    }
  };
  for (const DeclaredEdge& d : declared) {
    if (d.left.table == d.right.table) {
      throw_data_error("declared edge joins table '" + d.left.table + "' to itself");
    }
    add(canonical(d.left, d.right), "declared");
  }
  if (infer_by_name) {
    std::map<std::string, std::vector<ColumnRef>> keys_by_name;
    for (const Table& t : tables) {
      for (const Column& c : t.columns()) {
        if (c.kind() == ColumnKind::key) keys_by_name[c.name()].push_back({t.name(), c.name()});
      }
    }
    for (const auto& [name, refs] : keys_by_name) {
      for (std::size_t i = 0; i < refs.size(); ++i) {
        for (std::size_t j = i + 1; j < refs.size(); ++j) {
          JoinEdge e = canonical(refs[i], refs[j]);
          auto key = std::make_pair(e.left, e.right);
          // An inferred edge identical to a declared one is the same edge.
          unique.emplace(key, e);
        }
      }
    }
  }

  std::vector<JoinEdge> edges;
  for (auto& [key, e] : unique) edges.push_back(e);

  std::vector<std::shared_ptr<const Table>> shared;
  for (Table& t : tables) shared.push_back(std::make_shared<const Table>(std::move(t)));
  JoinGraph probe(shared, edges, base.source.name, base.target, base.task);
  if (probe.degree(base.source.name) == 0 && shared.size() > 1) {
    warnings.push_back("base table '" + base.source.name + "' has no join edges");
  }
  return JoinGraph(std::move(shared), std::move(edges), base.source.name, base.target, base.task,
                   std::move(warnings));
}

JoinGraph load_join_graph(const Manifest& manifest) {
  return build_join_graph(load_tables(manifest), manifest.edges, manifest.infer_edges_by_name,
                          manifest.base);
}

std::vector<JoinPath> enumerate_paths(const JoinGraph& graph, std::size_t max_hops) {
  std::vector<JoinPath> out;
  std::vector<JoinPath> frontier{JoinPath(graph.base())};
  for (std::size_t hop = 1; hop <= max_hops && !frontier.empty(); ++hop) {
    std::vector<JoinPath> next;
    for (const JoinPath& p : frontier) {
      for (std::size_t e : graph.incident(p.terminal())) {
        const JoinEdge& edge = graph.edge(e);
        if (p.visits(edge.opposite(p.terminal()).table)) continue;
        next.push_back(p.extended(edge));
      }
    }
    std::sort(next.begin(), next.end());
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

std::map<std::size_t, std::size_t> count_paths_by_length(const std::vector<JoinPath>& paths) {
  std::map<std::size_t, std::size_t> counts;
  for (const JoinPath& p : paths) ++counts[p.length()];
  return counts;
}

}  // namespace augplan
