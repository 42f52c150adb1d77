#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "augplan/error.hpp"
#include "augplan/join_graph.hpp"
#include "augplan/manifest.hpp"
#include "augplan/table.hpp"
#include "fixtures.hpp"

using namespace augplan;

namespace {

bool cycle_free(const JoinPath& p) {
  std::set<std::string> seen(p.vertices().begin(), p.vertices().end());
  return seen.size() == p.vertices().size();
}

}  // namespace

TEST_CASE("manifest with two tables and one edge") {
  const char* text = R"({
    "base_table": {"name": "product", "path": "product.csv", "target": "label", "task": "classification"},
    "tables": [{"name": "rating", "path": "rating.csv"}],
    "edges": [{"left": "product.pid", "right": "rating.pid"}]
  })";
  const Manifest m = load_manifest(text, "/data");
  CHECK(m.base.source.name == "product");
  CHECK(m.base.source.path == std::filesystem::path("/data/product.csv"));
  CHECK(m.tables.size() == 1);
  REQUIRE(m.edges.size() == 1);
  CHECK(m.edges[0].left == ColumnRef{"product", "pid"});
  CHECK(m.base.task == TaskKind::classification);
  // Round trip.
  CHECK(manifest_to_json(load_manifest(manifest_to_json(m))) == manifest_to_json(m));
}

TEST_CASE("manifest errors") {
  auto kind_of = [](const char* text) {
    try {
      load_manifest(text);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::usage;
  };
  CHECK(kind_of("{not json") == ErrorKind::data);
  CHECK(kind_of(R"({"tables": []})") == ErrorKind::data);
  CHECK(kind_of(R"({"base_table": {"name": "b", "path": "b.csv", "target": "y", "task": "ranking"}})") ==
        ErrorKind::data);
  CHECK_THROWS_WITH_AS(
      load_manifest(R"({"base_table": {"name": "b", "path": "b.csv", "target": "y", "task": "regression"},
                        "edges": [{"left": "b.k", "right": "ghost.k"}]})"),
      doctest::Contains("undeclared table 'ghost'"), Error);
}

TEST_CASE("csv ingestion and kind inference") {
  const Table t = table_from_records("items", parse_csv("pid,price\np1,1.5\np2,\np3,7\n"));
  CHECK(t.row_count() == 3);
  CHECK(t.columns().size() == 2);
  CHECK(t.column("price").kind() == ColumnKind::numeric);
  CHECK(t.column("price").is_null(1));
  CHECK(t.column("price").null_count() == 1);
  CHECK(t.column("pid").kind() == ColumnKind::text);  // 3 distinct of 3

  const Table mixed = table_from_records("m", parse_csv("v\n1\n2\nx\n1\n2\nx\n1\n"));
  CHECK(mixed.column("v").kind() == ColumnKind::categorical);

  CHECK_THROWS_AS(table_from_records("r", parse_csv("a,b\n1\n")), Error);
  CHECK_THROWS_AS(table_from_records("d", parse_csv("a,a\n1,2\n")), Error);

  const auto rows = parse_csv("a,b\n\"x,1\",\"say \"\"hi\"\"\"\r\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "x,1");
  CHECK(rows[1][1] == "say \"hi\"");
  const Table quoted = table_from_records("q", rows);
  CHECK(to_csv(quoted) == "a,b\n\"x,1\",\"say \"\"hi\"\"\"\n");
}

TEST_CASE("edge inference by name and dedup against declared edges") {
  auto a = fixtures::make_table("a", {{"pid", "label"}, {"1", "0"}, {"2", "1"}});
  auto b = fixtures::make_table("b", {{"pid", "x"}, {"1", "5"}, {"2", "6"}});
  a = a.with_kinds({{"pid", ColumnKind::key}});
  b = b.with_kinds({{"pid", ColumnKind::key}});
  BaseDescriptor base;
  base.source.name = "a";
  base.target = "label";

  const JoinGraph inferred = build_join_graph({a, b}, {}, true, base);
  CHECK(inferred.edges().size() == 1);

  const JoinGraph both = build_join_graph({a, b}, {{{"b", "pid"}, {"a", "pid"}}}, true, base);
  REQUIRE(both.edges().size() == 1);
  CHECK(both.edges()[0].left.table == "a");  // canonical endpoint order
  CHECK(both.warnings().empty());

  const JoinGraph twice =
      build_join_graph({a, b}, {{{"a", "pid"}, {"b", "pid"}}, {{"b", "pid"}, {"a", "pid"}}}, false, base);
  CHECK(twice.edges().size() == 1);
  CHECK(twice.warnings().size() == 1);

  const JoinGraph lonely = build_join_graph({a, b}, {}, false, base);
  CHECK(lonely.edges().empty());
  CHECK_FALSE(lonely.warnings().empty());
}

TEST_CASE("catalogue schema: customer has degree 3 and three paths") {
  const JoinGraph g = fixtures::catalog_graph();
  CHECK(g.degree("customer") == 3);
  const auto paths = enumerate_paths(g, 2);
  const auto to_customer = std::count_if(paths.begin(), paths.end(), [](const JoinPath& p) {
    return p.terminal() == "customer";
  });
  CHECK(to_customer == 3);

  std::set<std::string> one_hop;
  for (const JoinPath& p : enumerate_paths(g, 1)) {
    one_hop.insert(p.terminal());
  }
  CHECK(one_hop == std::set<std::string>{"category", "order", "rating", "review"});
}

TEST_CASE("path enumeration") {
  auto t = [](const std::string& n, std::vector<std::string> h) {
    return fixtures::make_table(n, {h, std::vector<std::string>(h.size(), "1")});
  };
  SUBCASE("linear chain") {
    const JoinGraph g = fixtures::graph_of({t("base", {"k", "label"}), t("A", {"k", "j"}), t("B", {"j", "v"})},
                                           {{"base.k", "A.k"}, {"A.j", "B.j"}});
    const auto paths = enumerate_paths(g, 2);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].edges().size() == 1);
    CHECK(paths[1].edges().size() == 2);
    CHECK(paths[1].terminal() == "B");
  }
  SUBCASE("triangle: every vertex-simple path") {
    const JoinGraph g = fixtures::graph_of(
        {t("base", {"a", "b", "label"}), t("A", {"a", "c"}), t("B", {"b", "c"})},
        {{"base.a", "A.a"}, {"base.b", "B.b"}, {"A.c", "B.c"}});
    const auto nonempty = enumerate_paths(g, 3);
    // Brute force over all edge sequences of length ≤ 3 that form walks from
    // the base without revisiting a vertex.
    std::size_t brute = 0;
    const std::size_t m = g.edges().size();
    for (std::size_t len = 1; len <= 3; ++len) {
      std::size_t combos = 1;
      for (std::size_t i = 0; i < len; ++i) combos *= m;
      for (std::size_t code = 0; code < combos; ++code) {
        std::vector<std::string> visited{"base"};
        std::size_t c = code;
        bool ok = true;
        for (std::size_t i = 0; i < len && ok; ++i) {
          const JoinEdge& e = g.edge(c % m);
          c /= m;
          if (!e.touches(visited.back())) {
            ok = false;
            break;
          }
          const std::string next = e.opposite(visited.back()).table;
          ok = std::find(visited.begin(), visited.end(), next) == visited.end();
          visited.push_back(next);
        }
        brute += ok ? 1 : 0;
      }
    }
    CHECK(nonempty.size() == brute);
    CHECK(nonempty.size() == 4);
    for (const auto& p : nonempty) CHECK(cycle_free(p));
  }
  SUBCASE("determinism and prefix closure") {
    const JoinGraph g = fixtures::catalog_graph();
    const auto a = enumerate_paths(g, 3);
    CHECK(a == enumerate_paths(g, 3));
    const auto shorter = enumerate_paths(g, 2);
    for (const auto& p : shorter) CHECK(std::find(a.begin(), a.end(), p) != a.end());
    for (const auto& p : a) CHECK(cycle_free(p));
    // BFS order: lengths never decrease.
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].length() <= a[i].length());
  }
}

TEST_CASE("join paths round-trip through edge ids") {
  const JoinGraph g = fixtures::catalog_graph();
  for (const JoinPath& p : enumerate_paths(g, 3)) {
    CHECK(JoinPath::from_edge_ids(g, p.edge_ids(g)) == p);
  }
}
