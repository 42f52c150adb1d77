#include <doctest.h>

#include <optional>
#include <string>
#include <vector>

#include "augplan/error.hpp"
#include "augplan/join_engine.hpp"
#include "augplan/random.hpp"
#include "fixtures.hpp"

using namespace augplan;

namespace {

JoinPath path_to(const JoinGraph& g, std::vector<std::string> ids) {
  return JoinPath::from_edge_ids(g, ids);
}

const JoinPath& find_path(const std::vector<JoinPath>& paths, const std::vector<std::string>& vertices) {
  for (const auto& p : paths) {
    if (p.vertices() == vertices) return p;
  }
  FAIL("path not found");
  return paths.front();
}

// Nested-loop join over raw records: for each base row scan every table in
// order and keep the first row whose key equals the current key.
std::size_t nested_loop_non_na(const std::vector<std::vector<std::vector<std::string>>>& tables,
                               std::size_t feature_col) {
  std::size_t hits = 0;
  const auto& base = tables[0];
  for (std::size_t r = 1; r < base.size(); ++r) {
    std::string key = base[r][0];
    bool alive = !key.empty();
    std::vector<std::string> row;
    for (std::size_t t = 1; t < tables.size() && alive; ++t) {
      alive = false;
      for (std::size_t s = 1; s < tables[t].size(); ++s) {
        if (tables[t][s][0] == key) {
          row = tables[t][s];
          alive = true;
          break;
        }
      }
      if (alive) {
        key = row[1];
        alive = t + 1 == tables.size() || !key.empty();
      }
    }
    if (alive && !row[feature_col].empty()) ++hits;
  }
  return hits;
}

}  // namespace

TEST_CASE("purchase example: product ⋈ transaction_1 ⋈ rating") {
  const JoinGraph g = fixtures::purchase_graph();
  const JoinEngine engine(g);
  const auto paths = enumerate_paths(g, 2);
  const JoinPath& p1 = find_path(paths, {"product", "transaction_1", "rating"});
  const JoinPath& p2 = find_path(paths, {"product", "transaction_2", "rating"});

  const AugmentedTable aug = engine.execute(p1, {"rating", "rating"});
  CHECK(aug.row_count() == 3);
  CHECK(aug.feature_column.name() == "rating__rating");
  CHECK(aug.feature_column.text(0) == "5");
  CHECK(aug.feature_column.text(1) == "4");
  CHECK(aug.feature_column.is_null(2));
  CHECK(integration_quality(aug) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const NaSplit split = split_na(aug);
  CHECK(split.non_na == RowSet{0, 1});
  CHECK(split.na == RowSet{2});

  CHECK(integration_quality(engine.execute(p2, {"rating", "rating"})) == doctest::Approx(1.0 / 3.0));
  CHECK(engine.reach(p1) == doctest::Approx(2.0 / 3.0));

  // The base is not a source of candidate features.
  CHECK_THROWS_AS(engine.execute(JoinPath(g.base()), {"product", "price"}), Error);
  CHECK_THROWS_AS(engine.execute(p1, {"rating", "missing"}), Error);
  CHECK_THROWS_AS(engine.execute(p1, {"transaction_1", "rid"}), Error);

  // Determinism.
  const AugmentedTable again = engine.execute(p1, {"rating", "rating"});
  CHECK(again.feature_column.cells() == aug.feature_column.cells());
  CHECK(again.non_na_index == aug.non_na_index);
}

TEST_CASE("full matches and empty matches") {
  const JoinGraph g = fixtures::graph_of(
      {fixtures::make_table("base", {{"k", "label"}, {"a", "0"}, {"b", "1"}}),
       fixtures::make_table("A", {{"k", "j"}, {"a", "x"}, {"b", "y"}}),
       fixtures::make_table("B", {{"j", "v"}, {"x", "1"}, {"y", "2"}}),
       fixtures::make_table("C", {{"k", "w"}, {"q", "1"}, {"z", "2"}})},
      {{"base.k", "A.k"}, {"A.j", "B.j"}, {"base.k", "C.k"}});
  const JoinEngine engine(g);
  const auto paths = enumerate_paths(g, 2);
  const AugmentedTable full = engine.execute(find_path(paths, {"base", "A", "B"}), {"B", "v"});
  CHECK(full.feature_column.null_count() == 0);
  CHECK(integration_quality(full) == 1.0);
  CHECK(split_na(full).na.empty());

  const AugmentedTable none = engine.execute(find_path(paths, {"base", "C"}), {"C", "w"});
  CHECK(integration_quality(none) == 0.0);
  CHECK(split_na(none).non_na.empty());
  CHECK(split_na(none).na.size() == 2);
}

TEST_CASE("one-to-many hops carry the first match; null keys never match") {
  const JoinGraph g = fixtures::graph_of(
      {fixtures::make_table("base", {{"k", "label"}, {"a", "0"}, {"", "1"}, {"b", "1"}}),
       fixtures::make_table("A", {{"k", "v"}, {"a", "first"}, {"a", "second"}, {"", "orphan"}})},
      {{"base.k", "A.k"}});
  const JoinEngine engine(g);
  const AugmentedTable aug = engine.execute(enumerate_paths(g, 1).at(0), {"A", "v"});
  CHECK(aug.feature_column.text(0) == "first");
  CHECK(aug.feature_column.is_null(1));
  CHECK(aug.feature_column.is_null(2));
}

TEST_CASE("integration quality agrees with a nested-loop join on random tiny tables") {
  Rng rng(11);
  auto key = [&](std::size_t range) -> std::string {
    const std::size_t v = rng.below(range + 1);
    return v == range ? std::string() : "k" + std::to_string(v);
  };
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::vector<std::vector<std::string>>> recs;
    recs.push_back({{"a", "label"}});
    const std::size_t base_rows = 1 + rng.below(8);
    for (std::size_t r = 0; r < base_rows; ++r) recs[0].push_back({key(6), std::to_string(r % 2)});
    recs.push_back({{"a", "b", "f"}});
    for (std::size_t r = 0, n = rng.below(9); r < n; ++r) recs[1].push_back({key(6), key(5), key(4)});
    recs.push_back({{"b", "c", "g"}});
    for (std::size_t r = 0, n = rng.below(9); r < n; ++r) recs[2].push_back({key(5), key(4), key(3)});
    // A table with no rows cannot be ingested; pad with an all-null row.
    for (auto& t : recs) {
      if (t.size() == 1) t.push_back(std::vector<std::string>(t[0].size(), ""));
    }

    const JoinGraph g = fixtures::graph_of(
        {fixtures::make_table("base", recs[0]), fixtures::make_table("A", recs[1]),
         fixtures::make_table("B", recs[2])},
        {{"base.a", "A.a"}, {"A.b", "B.b"}});
    const JoinEngine engine(g);
    const auto paths = enumerate_paths(g, 2);
    const double one = integration_quality(engine.execute(find_path(paths, {"base", "A"}), {"A", "f"}));
    const double two = integration_quality(engine.execute(find_path(paths, {"base", "A", "B"}), {"B", "g"}));
    const double rows = static_cast<double>(base_rows);
    CHECK(one == doctest::Approx(nested_loop_non_na({recs[0], recs[1]}, 2) / rows));
    CHECK(two == doctest::Approx(nested_loop_non_na(recs, 2) / rows));
    // Extending a path never increases the reachable fraction.
    CHECK(engine.reach(find_path(paths, {"base", "A", "B"})) <= engine.reach(find_path(paths, {"base", "A"})));
  }
}

TEST_CASE("augmented export names the column table__column") {
  const JoinGraph g = fixtures::purchase_graph();
  const JoinEngine engine(g);
  const auto paths = enumerate_paths(g, 2);
  const AugmentedTable aug = engine.execute(find_path(paths, {"product", "transaction_1", "rating"}),
                                            {"rating", "rating"});
  const Table t = aug.to_table();
  CHECK(t.has_column("rating__rating"));
  CHECK(t.row_count() == 3);
  CHECK(augmented_column_name({"rating", "rating"}) == "rating__rating");
  CHECK(path_to(g, aug.path.edge_ids(g)) == aug.path);
}
