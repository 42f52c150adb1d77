#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "augplan/join_engine.hpp"
#include "augplan/join_graph.hpp"
#include "augplan/table.hpp"

namespace augplan {

inline constexpr std::size_t kStatDims = 6;
inline constexpr std::size_t kHistogramBins = 16;
inline constexpr double kEntropyClamp = 1e-12;

/// Per-join statistics in model input order.
enum StatDim : std::size_t { kTransitivity = 0, kVariance, kEntropy, kKl, kPearson, kMi };

using StatVector = std::array<double, kStatDims>;

std::string_view stat_name(std::size_t dim);

/// Non-null values of a column, optionally restricted to some rows.
struct ColumnSample {
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> texts;
  std::vector<double> numbers;

  std::size_t size() const { return texts.size(); }
  bool empty() const { return texts.empty(); }

  static ColumnSample of(const Column& column);
  static ColumnSample of(const Column& column, std::span<const std::size_t> rows);
};

/// |distinct(left) ∩ distinct(right)| / |distinct(right)|.
double transitivity(const Column& left_keys, const Column& right_keys);
/// Product of per-edge transitivities; 1 for an empty path.
double path_transitivity(std::span<const double> per_edge);

/// value -> rank of its frequency (most frequent first, ties by value).
std::vector<double> frequency_rank_encode(std::span<const std::string> values);

/// Population variance; non-numeric samples are frequency-rank encoded.
double variance(const ColumnSample& sample);
double variance(std::span<const double> values);

/// -Σ P(x)·ln(1 - P(x)) with 1 - P clamped to kEntropyClamp.
double entropy(const ColumnSample& sample);

/// Σ P(x)·ln(P(x)/Q(x)) with add-one smoothing on both sides. Numeric samples
/// are binned into kHistogramBins equal-width bins over the before range.
double kl_divergence(const ColumnSample& before, const ColumnSample& after);

struct Correlation {
  double value = 0.0;
  bool degenerate = false;  // a side had zero variance; value is 0
};

Correlation pearson(std::span<const double> a, std::span<const double> b);

/// Normalised per-value frequency vectors of two columns over the union of
/// their distinct values (ascending value order).
std::pair<std::vector<double>, std::vector<double>> aligned_frequencies(const Column& a,
                                                                        const Column& b);

/// Discrete codes for each row: raw values for non-numeric columns,
/// kHistogramBins equal-width bins for numeric ones. Null rows map to nullopt.
std::vector<std::optional<std::size_t>> discretize(const Column& column);

/// Mutual information of two row-paired columns of one table, natural log.
double mutual_information(const Column& x, const Column& y);
double mutual_information(std::span<const std::size_t> x, std::span<const std::size_t> y);

/// Per-dimension min/max fitted on training sequences. Variance and entropy
/// go through log1p before scaling; scaled values are clamped to [0, 1].
struct Normalization {
  StatVector min{};
  StatVector max{};

  static StatVector pre_transform(const StatVector& raw);
  static Normalization fit(std::span<const std::vector<StatVector>> raw_sequences);
  StatVector apply(const StatVector& raw) const;
};

struct PathFeatureSequence {
  std::vector<StatVector> raw;
  std::vector<StatVector> steps;  // normalised
};

/// Computes per-edge statistics and the per-path sequence fed to the IQ
/// model. Each (step direction, carry column) is computed once and cached.
class StatsEngine {
 public:
  explicit StatsEngine(const JoinEngine& joins) : joins_(&joins) {}

  const JoinGraph& graph() const { return joins_->graph(); }
  const JoinEngine& joins() const { return *joins_; }

  /// [transitivity, variance, entropy, kl, pearson, mi] of a single hop with
  /// `carry_column` (a column of step.to.table) as the carried column.
  StatVector edge_feature_vector(const JoinStep& step, const std::string& carry_column) const;

  /// Raw per-step vectors. Intermediate steps carry the next hop's key; the
  /// last step carries the feature, or its own join key when no feature is
  /// given.
  std::vector<StatVector> raw_sequence(const JoinPath& path,
                                       const std::optional<FeatureRef>& feature) const;

  PathFeatureSequence path_feature_sequence(const JoinPath& path,
                                            const std::optional<FeatureRef>& feature,
                                            const Normalization& normalization) const;

  std::size_t cache_size() const;

 private:
  const JoinEngine* joins_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<ColumnRef, ColumnRef, std::string>, StatVector> cache_;
};

std::string stats_to_json(const StatVector& stats);

}  // namespace augplan
