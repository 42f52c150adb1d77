#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "augplan/error.hpp"
#include "augplan/evaluator.hpp"
#include "augplan/join_engine.hpp"
#include "augplan/random.hpp"
#include "fixtures.hpp"

using namespace augplan;

namespace {

TaskSpec classification_spec(std::uint64_t seed = 7) {
  TaskSpec spec;
  spec.target = "label";
  spec.task = TaskKind::classification;
  spec.metric = Metric::accuracy;
  spec.split_seed = seed;
  return spec;
}

const JoinPath& find_path(const std::vector<JoinPath>& paths, const std::vector<std::string>& vertices) {
  for (const auto& p : paths) {
    if (p.vertices() == vertices) return p;
  }
  FAIL("path not found");
  return paths.front();
}

// base(k, label) with 60 rows of "1" and 40 of "0"; copy(k, y) mirrors the
// label for every key; ghost(k, y) shares no keys with the base.
JoinGraph copy_graph() {
  std::vector<std::vector<std::string>> base{{"k", "label"}};
  std::vector<std::vector<std::string>> copy{{"k", "y"}};
  std::vector<std::vector<std::string>> ghost{{"k", "y"}};
  for (int i = 0; i < 100; ++i) {
    const std::string label = i < 60 ? "1" : "0";
    base.push_back({"e" + std::to_string(i), label});
    copy.push_back({"e" + std::to_string(i), label});
    ghost.push_back({"x" + std::to_string(i), label});
  }
  return fixtures::graph_of({fixtures::make_table("base", base), fixtures::make_table("copy", copy),
                             fixtures::make_table("ghost", ghost)},
                            {{"base.k", "copy.k"}, {"base.k", "ghost.k"}});
}

class ConstantValue final : public Predictor {
 public:
  explicit ConstantValue(std::vector<double> values) : values_(std::move(values)) {}
  std::string predict_label(const Table&, std::size_t) const override { return ""; }
  double predict_value(const Table&, std::size_t row) const override { return values_[row]; }

 private:
  std::vector<double> values_;
};

}  // namespace

TEST_CASE("metric formulas") {
  const std::vector<std::string> truth{"1", "0", "1"};
  const std::vector<std::string> pred{"1", "1", "0"};
  CHECK(f1_score(truth, pred, "1") == doctest::Approx(0.5));
  CHECK(accuracy(truth, pred) == doctest::Approx(1.0 / 3.0));

  const std::vector<double> y{1, 2, 5};
  const std::vector<double> yhat{1, 2, 3};
  CHECK(mean_absolute_error(y, yhat) == doctest::Approx(2.0 / 3.0));
  CHECK(mean_squared_error(y, yhat) == doctest::Approx(4.0 / 3.0));

  const Table t = fixtures::make_table("r", {{"target"}, {"1"}, {"2"}, {"5"}});
  TaskSpec spec;
  spec.target = "target";
  spec.task = TaskKind::regression;
  spec.metric = Metric::neg_mae;
  CHECK(score_predictor(ConstantValue({1, 2, 3}), t, all_rows(t), spec) == doctest::Approx(-2.0 / 3.0));
  spec.metric = Metric::neg_mse;
  CHECK(score_predictor(ConstantValue({1, 2, 3}), t, all_rows(t), spec) == doctest::Approx(-4.0 / 3.0));

  CHECK(parse_metric("f1") == Metric::f1);
  CHECK_THROWS_AS(parse_metric("auc"), Error);
  TaskSpec bad = classification_spec();
  bad.metric = Metric::neg_mse;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("split is seeded, stratified and disjoint") {
  const JoinGraph g = copy_graph();
  const Table& base = g.base_table();
  const SplitRows a = split_rows(base, all_rows(base), classification_spec(3));
  const SplitRows b = split_rows(base, all_rows(base), classification_spec(3));
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train.size() + a.test.size() == 100);
  std::size_t ones = 0;
  for (std::size_t r : a.test) ones += base.column("label").text(r) == "1" ? 1 : 0;
  CHECK(ones == 18);
  CHECK(a.test.size() == 30);
  const SplitRows c = split_rows(base, all_rows(base), classification_spec(4));
  CHECK(c.test != a.test);
}

TEST_CASE("label-copying feature lifts accuracy from 0.6 to 1") {
  const JoinGraph g = copy_graph();
  const JoinEngine engine(g);
  const TaskSpec spec = classification_spec();
  const UtilityScore base = utility_score(g.base_table(), spec);
  CHECK(base.value == doctest::Approx(0.6));
  CHECK(base.n_eval == 30);

  const auto paths = enumerate_paths(g, 1);
  const AugmentedTable aug = engine.execute(find_path(paths, {"base", "copy"}), {"copy", "y"});
  CHECK(utility_score(aug.to_table(), spec).value == doctest::Approx(1.0));
  CHECK(utility_gain(aug, base, spec) == doctest::Approx(0.4));

  // An all-null feature contributes no columns at all.
  const AugmentedTable none = engine.execute(find_path(paths, {"base", "ghost"}), {"ghost", "y"});
  CHECK(integration_quality(none) == 0.0);
  CHECK(utility_gain(none, base, spec) == 0.0);
  CHECK_THROWS_AS(compute_fi({none}, base, spec), Error);

  // With IQ = 1 the non-NA view is the whole table.
  CHECK(compute_fi({aug}, base, spec) == doctest::Approx(utility_gain(aug, base, spec)).epsilon(1e-12));
  CHECK(compute_fi({none, aug}, base, spec) == doctest::Approx(0.4));

  UtilityScore other = base;
  other.metric = Metric::f1;
  CHECK_THROWS_AS(utility_gain(aug, other, spec), Error);
  other = base;
  other.split_seed = 99;
  CHECK_THROWS_AS(utility_gain(aug, other, spec), Error);
}

TEST_CASE("accuracy decomposes over the non-NA and NA rows") {
  Rng rng(21);
  std::vector<std::vector<std::string>> base{{"k", "x", "label"}};
  std::vector<std::vector<std::string>> side{{"k", "f"}};
  for (int i = 0; i < 80; ++i) {
    const double x = rng.normal();
    base.push_back({"e" + std::to_string(i), std::to_string(x), x + rng.normal() > 0 ? "1" : "0"});
    if (rng.uniform() < 0.55) side.push_back({"e" + std::to_string(i), std::to_string(rng.normal())});
  }
  const JoinGraph g = fixtures::graph_of({fixtures::make_table("base", base), fixtures::make_table("side", side)},
                                         {{"base.k", "side.k"}});
  const JoinEngine engine(g);
  const AugmentedTable aug = engine.execute(enumerate_paths(g, 1).at(0), {"side", "f"});
  const Table t = aug.to_table();
  const TaskSpec spec = classification_spec();
  const auto predictor = default_learner().fit(t, all_rows(t), all_rows(t), spec);
  const NaSplit split = split_na(aug);
  const double p = integration_quality(aug);
  const double whole = score_predictor(*predictor, t, all_rows(t), spec);
  const double parts = p * score_predictor(*predictor, t, split.non_na, spec) +
                       (1 - p) * score_predictor(*predictor, t, split.na, spec);
  CHECK(std::abs(whole - parts) <= 1e-12);
}

TEST_CASE("FI from a partial path tracks the fully joined oracle") {
  // A hidden signal s drives the label. Three base key columns reach the same
  // side table with 90%, 30% and 100% of their keys real.
  Rng rng(8);
  const int n = 600;
  std::vector<std::vector<std::string>> base{{"k90", "k30", "kall", "label"}};
  std::vector<std::vector<std::string>> side{{"k", "s"}};
  for (int i = 0; i < n; ++i) {
    const double s = rng.normal();
    const std::string e = "e" + std::to_string(i);
    const std::string label = s + 0.3 * rng.normal() > 0 ? "1" : "0";
    base.push_back({rng.uniform() < 0.9 ? e : "x" + e, rng.uniform() < 0.3 ? e : "y" + e, e, label});
    side.push_back({e, std::to_string(s)});
  }
  const JoinGraph g = fixtures::graph_of({fixtures::make_table("base", base), fixtures::make_table("side", side)},
                                         {{"base.k90", "side.k"}, {"base.k30", "side.k"}, {"base.kall", "side.k"}});
  const JoinEngine engine(g);
  const TaskSpec spec = classification_spec();
  const UtilityScore base_score = utility_score(g.base_table(), spec);
  std::vector<AugmentedTable> augs;
  for (const JoinPath& p : enumerate_paths(g, 1)) augs.push_back(engine.execute(p, {"side", "s"}));
  REQUIRE(augs.size() == 3);
  const AugmentedTable* full = nullptr;
  const AugmentedTable* high = nullptr;
  const AugmentedTable* low = nullptr;
  for (const auto& a : augs) {
    const double iq = integration_quality(a);
    if (iq == 1.0) full = &a;
    else if (iq > 0.6) high = &a;
    else low = &a;
  }
  REQUIRE(full);
  REQUIRE(high);
  REQUIRE(low);
  const double oracle = utility_gain(*full, base_score, spec);
  const double fi_high = compute_fi({*high}, base_score, spec);
  CHECK(std::abs(fi_high - oracle) <= 0.1);
  const double fi = compute_fi({*low, *high}, base_score, spec);
  CHECK(fi >= -1.0);
  CHECK(fi <= 1.0);
  CHECK(fi >= fi_high);
}

TEST_CASE("hypergeometric draws") {
  Rng rng(4);
  double mean = 0.0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    const std::size_t m = hypergeometric_draw(100, 30, 20, rng);
    CHECK(m <= 20);
    mean += static_cast<double>(m);
  }
  mean /= trials;
  CHECK(mean == doctest::Approx(20.0 * 30.0 / 100.0).epsilon(0.02));
  CHECK(hypergeometric_draw(50, 50, 10, rng) == 10);
  CHECK(hypergeometric_draw(50, 0, 10, rng) == 0);
  CHECK(hypergeometric_draw(50, 20, 50, rng) == 20);
}
