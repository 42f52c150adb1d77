#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augplan/join_engine.hpp"
#include "augplan/manifest.hpp"
#include "augplan/random.hpp"
#include "augplan/table.hpp"

namespace augplan {

enum class Metric { accuracy, f1, neg_mae, neg_mse };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);
Metric default_metric(TaskKind task);

struct TaskSpec {
  std::string target;
  TaskKind task = TaskKind::classification;
  Metric metric = Metric::accuracy;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.3;

  /// Throws when the metric does not fit the task or the fraction is outside (0, 1).
  void validate() const;
};

struct UtilityScore {
  double value = 0.0;
  Metric metric = Metric::accuracy;
  std::size_t n_train = 0;
  std::size_t n_eval = 0;
  std::uint64_t split_seed = 0;

  std::string to_json() const;
};

inline constexpr std::size_t kMinEvaluationRows = 10;

// Metric formulas. Labels compare as strings; F1 takes the positive label.
double accuracy(std::span<const std::string> truth, std::span<const std::string> predicted);
double f1_score(std::span<const std::string> truth, std::span<const std::string> predicted,
                const std::string& positive);
double mean_absolute_error(std::span<const double> truth, std::span<const double> predicted);
double mean_squared_error(std::span<const double> truth, std::span<const double> predicted);

struct SplitRows {
  RowSet train;
  RowSet test;
};

/// Deterministic split of `rows`: each row gets a seeded hash rank, and the
/// lowest-ranked test_fraction of every class (of all rows, for regression)
/// goes to test. Subsets of a table therefore inherit most assignments.
SplitRows split_rows(const Table& table, const RowSet& rows, const TaskSpec& spec);

/// A fitted model over a fixed table schema.
class Predictor {
 public:
  virtual ~Predictor() = default;
  /// Class label (classification).
  virtual std::string predict_label(const Table& table, std::size_t row) const = 0;
  /// Real value (regression).
  virtual double predict_value(const Table& table, std::size_t row) const = 0;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::unique_ptr<Predictor> fit(const Table& table, const RowSet& view,
                                         const RowSet& train, const TaskSpec& spec) const = 0;
};

struct LinearLearnerConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  double l2 = 1e-3;
  std::size_t top_categories = 16;
};

/// Regularised softmax (classification) or ridge (regression) regression
/// trained by full-batch gradient descent from zero weights. Numeric
/// features are standardised and mean-imputed; categorical and text features
/// are one-hot encoded over the top categories plus "other" and
/// mode-imputed; each feature with a null in the view gains a missing
/// indicator. Key columns, the target and all-null columns are skipped.
class LinearLearner final : public Learner {
 public:
  explicit LinearLearner(LinearLearnerConfig config = {}) : config_(config) {}
  std::unique_ptr<Predictor> fit(const Table& table, const RowSet& view, const RowSet& train,
                                 const TaskSpec& spec) const override;

 private:
  LinearLearnerConfig config_;
};

const Learner& default_learner();

RowSet all_rows(const Table& table);

/// Metric of a fixed predictor over `rows`.
double score_predictor(const Predictor& predictor, const Table& table, const RowSet& rows,
                       const TaskSpec& spec);

/// Trains on the train split of `rows` and scores the test split.
UtilityScore utility_score(const Table& table, const RowSet& rows, const TaskSpec& spec,
                           const Learner& learner = default_learner());
UtilityScore utility_score(const Table& table, const TaskSpec& spec,
                           const Learner& learner = default_learner());

double utility_gain(const AugmentedTable& aug, const UtilityScore& base_score,
                    const TaskSpec& spec, const Learner& learner = default_learner());
double utility_gain(const Table& augmented, const UtilityScore& base_score, const TaskSpec& spec,
                    const Learner& learner = default_learner());

/// Best non-NA utility gain over the observed augmentations of one feature,
/// clipped to [-1, 1]. Observations with fewer than kMinEvaluationRows
/// non-NA rows are skipped; throws a data error when none remain.
double compute_fi(const std::vector<AugmentedTable>& observed, const UtilityScore& base_score,
                  const TaskSpec& spec, const Learner& learner = default_learner());

/// Correct-prediction count of a without-replacement sample of n rows out of
/// N, of which M are correct.
std::size_t hypergeometric_draw(std::size_t population, std::size_t successes, std::size_t draws,
                                Rng& rng);

/// (n/N)·(m/n − M/N) for one hypergeometric draw of m.
double subset_score_error(std::size_t population, std::size_t successes, std::size_t draws,
                          Rng& rng);

}  // namespace augplan
