#pragma once

#include <string>
#include <map>
#include <utility>
#include <vector>

#include "augplan/join_graph.hpp"
#include "augplan/manifest.hpp"
#include "augplan/table.hpp"

namespace fixtures {

using augplan::JoinGraph;
using augplan::Table;

inline Table make_table(const std::string& name, std::vector<std::vector<std::string>> records) {
  return augplan::table_from_records(name, records);
}

/// Graph from tables with declared "table.col" edges. The first table is the base.
inline JoinGraph graph_of(std::vector<Table> tables,
                          const std::vector<std::pair<std::string, std::string>>& edges,
                          const std::string& target = "label",
                          augplan::TaskKind task = augplan::TaskKind::classification) {
  std::vector<augplan::DeclaredEdge> declared;
  for (const auto& [l, r] : edges) {
    declared.push_back({augplan::ColumnRef::parse(l), augplan::ColumnRef::parse(r)});
  }
  // Declared endpoints become keys, as the manifest loader does.
  for (Table& t : tables) {
    std::map<std::string, augplan::ColumnKind> kinds;
    for (const auto& d : declared) {
      if (d.left.table == t.name()) kinds[d.left.column] = augplan::ColumnKind::key;
      if (d.right.table == t.name()) kinds[d.right.column] = augplan::ColumnKind::key;
    }
    t = t.with_kinds(kinds);
  }
  augplan::BaseDescriptor base;
  base.source.name = tables.front().name();
  base.target = target;
  base.task = task;
  return augplan::build_join_graph(std::move(tables), declared, false, base);
}

/// product ⋈ transaction_1 ⋈ rating carries 2 of the 3 products; the path
/// through transaction_2 carries 1.
inline JoinGraph purchase_graph() {
  Table product = make_table("product", {{"pid", "price", "label"},
                                         {"p1", "10", "1"},
                                         {"p2", "20", "0"},
                                         {"p3", "30", "1"}});
  Table t1 = make_table("transaction_1", {{"pid", "rid"}, {"p1", "r1"}, {"p2", "r2"}, {"p4", "r3"}});
  Table t2 = make_table("transaction_2", {{"pid", "rid"}, {"p1", "r1"}, {"p5", "r2"}});
  Table rating = make_table("rating", {{"rid", "rating"}, {"r1", "5"}, {"r2", "4"}, {"r3", "3"}, {"r4", "2"}});
  return graph_of({product, t1, t2, rating},
                  {{"product.pid", "transaction_1.pid"},
                   {"product.pid", "transaction_2.pid"},
                   {"transaction_1.rid", "rating.rid"},
                   {"transaction_2.rid", "rating.rid"}});
}

/// Catalogue schema: product is the base; customer is reachable through rating,
/// review and order.
inline JoinGraph catalog_graph() {
  auto t = [](const std::string& name, std::vector<std::string> header) {
    std::vector<std::vector<std::string>> rec{header};
    std::vector<std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row.push_back("v" + std::to_string(i));
    rec.push_back(row);
    return make_table(name, rec);
  };
  return graph_of(
      {t("product", {"pid", "cat_id", "label"}), t("category", {"cat_id", "coll_id", "cname"}),
       t("rating", {"pid", "cid", "stars"}), t("review", {"pid", "cid", "text"}),
       t("order", {"pid", "cid", "oid", "amount"}), t("collection", {"coll_id", "season"}),
       t("dispute", {"oid", "reason"}), t("customer", {"cid", "age"})},
      {{"product.cat_id", "category.cat_id"},
       {"product.pid", "rating.pid"},
       {"product.pid", "review.pid"},
       {"product.pid", "order.pid"},
       {"customer.cid", "rating.cid"},
       {"customer.cid", "review.cid"},
       {"customer.cid", "order.cid"},
       {"category.coll_id", "collection.coll_id"},
       {"order.oid", "dispute.oid"}});
}

}  // namespace fixtures
