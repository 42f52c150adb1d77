#include <doctest.h>

#include <cmath>
#include <vector>

#include "augplan/error.hpp"
#include "augplan/iq_model.hpp"
#include "augplan/random.hpp"
#include "fixtures.hpp"

using namespace augplan;

namespace {

std::vector<StatVector> random_steps(Rng& rng, std::size_t n) {
  std::vector<StatVector> steps(n);
  for (auto& s : steps) {
    for (double& x : s) x = rng.uniform();
  }
  return steps;
}

}  // namespace

TEST_CASE("a single sample is memorised") {
  Rng rng(1);
  IqSample s{random_steps(rng, 2), 0.3};
  const IqModel m = train_iq_model({s}, {0.05, 1500, 7});
  const auto steps = normalized_steps(m, s.raw);
  const double y = m.predict(steps);
  CHECK((y - 0.3) * (y - 0.3) < 1e-3);
  CHECK(std::abs(y - 0.3) < 0.05);
  CHECK(m.training().best_mse < 1e-3);
}

TEST_CASE("training is deterministic") {
  Rng rng(2);
  std::vector<IqSample> samples;
  for (int i = 0; i < 12; ++i) samples.push_back({random_steps(rng, 1 + i % 3), rng.uniform()});
  const IqModel a = train_iq_model(samples, {0.05, 60, 5});
  const IqModel b = train_iq_model(samples, {0.05, 60, 5});
  CHECK(std::vector<double>(a.params().begin(), a.params().end()) ==
        std::vector<double>(b.params().begin(), b.params().end()));
  CHECK(a.to_json() == b.to_json());
  CHECK_THROWS_AS(train_iq_model({}, {}), Error);
}

TEST_CASE("outputs stay inside (0, 1) and the model round-trips through JSON") {
  Rng rng(4);
  IqModel m = IqModel::initialized(9);
  for (double& p : m.mutable_params()) p *= 200.0;  // saturate the sigmoid
  for (int i = 0; i < 50; ++i) {
    const auto steps = random_steps(rng, 1 + i % 4);
    const double y = m.predict(steps);
    CHECK(y > 0.0);
    CHECK(y < 1.0);
  }
  const IqModel fresh = IqModel::initialized(9);
  const IqModel back = IqModel::from_json(fresh.to_json());
  const auto steps = random_steps(rng, 3);
  CHECK(back.forward(steps) == fresh.forward(steps));
  CHECK(back.to_json() == fresh.to_json());
}

TEST_CASE("analytic gradients agree with central differences") {
  Rng rng(5);
  for (int i = 0; i < 3; ++i) {
    const IqModel m = IqModel::initialized(100 + i);
    const auto steps = random_steps(rng, 1 + i);
    const double err = gradient_check(m, steps, rng.uniform());
    CHECK(err < 1e-4);
  }
  const IqModel m = IqModel::initialized(3);
  const auto steps = random_steps(rng, 2);
  CHECK(gradient_check(m, steps, 0.4) == gradient_check(m, steps, 0.4));
}

TEST_CASE("saliency") {
  Rng rng(6);
  IqModel m = IqModel::initialized(8);
  const auto steps = random_steps(rng, 3);
  const StatVector s = saliency(m, steps);
  for (double v : s) CHECK(v >= 0.0);

  // Central-difference oracle on the inputs.
  const double h = 1e-5;
  for (std::size_t d = 0; d < kStatDims; ++d) {
    double acc = 0.0;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      auto up = steps;
      auto down = steps;
      up[t][d] += h;
      down[t][d] -= h;
      acc += std::abs((m.forward(up) - m.forward(down)) / (2 * h));
    }
    const double fd = acc / static_cast<double>(steps.size());
    CHECK(std::abs(s[d] - fd) <= 1e-4 * std::max(std::abs(fd), kGradientCheckFloor));
  }

  // Zeroing every input weight of one dimension silences it.
  const std::size_t dim = kKl;
  auto p = m.mutable_params();
  for (std::size_t row = 0; row < IqModel::kGates; ++row) p[row * IqModel::kConcat + dim] = 0.0;
  CHECK(saliency(m, steps)[dim] == 0.0);
}

TEST_CASE("estimators on the purchase graph") {
  const JoinGraph g = fixtures::purchase_graph();
  const JoinEngine joins(g);
  const StatsEngine stats(joins);
  const IqModel m = IqModel::initialized(1);
  const JoinPath empty(g.base());
  CHECK(predict_iq(m, stats, empty, {"rating", "rating"}) == 1.0);
  CHECK(baseline_transitivity_product(stats, empty) == 1.0);
  for (const JoinPath& p : enumerate_paths(g, 2)) {
    const auto features = g.features_of(p.terminal());
    if (features.empty()) continue;
    const double y = predict_iq(m, stats, p, features.front());
    CHECK(y > 0.0);
    CHECK(y < 1.0);
  }

  const ExactIqEstimator exact(joins);
  const auto paths = enumerate_paths(g, 2);
  for (const JoinPath& p : paths) {
    if (p.vertices() == std::vector<std::string>{"product", "transaction_1", "rating"}) {
      CHECK(exact.pair_iq(p, {"rating", "rating"}) == doctest::Approx(2.0 / 3.0));
      CHECK(exact.path_iq(p) == doctest::Approx(2.0 / 3.0));
    }
  }
}

TEST_CASE("random baseline") {
  CHECK(baseline_random(3) == baseline_random(3));
  RandomIqBaseline a(42);
  RandomIqBaseline b(42);
  for (int i = 0; i < 3; ++i) CHECK(a.next() == b.next());

  // E[(U - V)^2] for independent uniforms is 1/6.
  RandomIqBaseline pred(1);
  Rng labels(2);
  double mse = 0.0;
  int outside = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = pred.next();
    outside += (x < 0.0 || x > 1.0) ? 1 : 0;
    const double d = x - labels.uniform();
    mse += d * d;
  }
  mse /= n;
  CHECK(outside == 0);
  CHECK(mse == doctest::Approx(1.0 / 6.0).epsilon(0.02));
}
