#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "augplan/join_engine.hpp"
#include "augplan/join_graph.hpp"
#include "augplan/join_stats.hpp"
#include "augplan/random.hpp"

namespace augplan {

struct IqHyper {
  double lr = 1.0;
  std::size_t epochs = 1000;
  std::uint64_t seed = 7;
};

/// One labelled path: raw per-step statistics plus the measured IQ.
struct IqSample {
  std::vector<StatVector> raw;
  double label = 0.0;
};

struct TrainingInfo {
  double lr = 0.0;
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  double best_mse = 0.0;
  std::size_t samples = 0;
};

/// Single-layer LSTM (gate order i, f, g, o) followed by a linear head and a
/// sigmoid, mapping a normalised statistic sequence to an IQ in (0, 1).
///
/// Parameters live in one flat vector:
///   [ W (4H x (I+H), row-major) | b (4H) | head_w (H) | head_b (1) ]
class IqModel {
 public:
  static constexpr std::size_t kInput = kStatDims;
  static constexpr std::size_t kHidden = 32;
  static constexpr std::size_t kGates = 4 * kHidden;
  static constexpr std::size_t kConcat = kInput + kHidden;
  static constexpr std::size_t kWeightSize = kGates * kConcat;
  static constexpr std::size_t kParamCount = kWeightSize + kGates + kHidden + 1;
  static constexpr double kInitRange = 0.08;

  /// Parameters drawn uniformly from ±kInitRange.
  static IqModel initialized(std::uint64_t seed);

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }

  /// Raw sigmoid output for a normalised sequence (at least one step).
  double forward(std::span<const StatVector> steps) const;
  /// forward() clamped into the open interval (0, 1).
  double predict(std::span<const StatVector> steps) const;

  /// Mean squared error over the batch. When `grad` is non-null it receives
  /// dMSE/dparams (resized to kParamCount).
  double loss(const std::vector<std::vector<StatVector>>& sequences,
              std::span<const double> labels, std::vector<double>* grad) const;

  /// d prediction / d input for each step.
  std::vector<StatVector> input_gradient(std::span<const StatVector> steps) const;

  const Normalization& normalization() const { return normalization_; }
  void set_normalization(const Normalization& n) { normalization_ = n; }
  std::uint64_t seed() const { return seed_; }
  const TrainingInfo& training() const { return training_; }
  void set_training(const TrainingInfo& info) { training_ = info; }

  std::string to_json() const;
  static IqModel from_json(std::string_view text);

 private:
  /// Backpropagates from the output. With `label`, the output gradient is
  /// coef * (y - label); without, it is coef. Returns y.
  double backward(std::span<const StatVector> steps, double coef, std::optional<double> label,
                  std::vector<double>* grad, std::vector<StatVector>* dinputs) const;

  std::vector<double> params_ = std::vector<double>(kParamCount, 0.0);
  Normalization normalization_;
  std::uint64_t seed_ = 0;
  TrainingInfo training_;
};

/// Full-batch gradient descent on MSE. Returns the lowest-loss parameter
/// state seen. Throws a stage error naming the epoch if the loss diverges.
IqModel train_iq_model(const std::vector<IqSample>& samples, const IqHyper& hyper);

/// Normalised steps of a sample under the model's normalisation.
std::vector<StatVector> normalized_steps(const IqModel& model, const std::vector<StatVector>& raw);

double predict_iq(const IqModel& model, const StatsEngine& stats, const JoinPath& path,
                  const FeatureRef& feature);

double baseline_transitivity_product(const StatsEngine& stats, const JoinPath& path);

/// Seeded uniform [0, 1) draws.
class RandomIqBaseline {
 public:
  explicit RandomIqBaseline(std::uint64_t seed) : rng_(seed) {}
  double next() { return rng_.uniform(); }

 private:
  Rng rng_;
};

double baseline_random(std::uint64_t seed);

/// Mean absolute input gradient of the prediction per statistic dimension.
StatVector saliency(const IqModel& model, std::span<const StatVector> steps);

/// Floor on the denominator of the relative error, for gradients near zero.
inline constexpr double kGradientCheckFloor = 1e-6;

/// Max relative error between analytic parameter gradients of the
/// single-sample MSE and central differences with step 1e-5.
double gradient_check(const IqModel& model, const std::vector<StatVector>& steps, double label);

/// IQ estimates consumed by the planner.
class IqEstimator {
 public:
  virtual ~IqEstimator() = default;
  virtual double pair_iq(const JoinPath& path, const FeatureRef& feature) const = 0;
  /// Path-level estimate used for threshold pruning.
  virtual double path_iq(const JoinPath& path) const = 0;
};

class LearnedIqEstimator final : public IqEstimator {
 public:
  LearnedIqEstimator(const IqModel& model, const StatsEngine& stats) : model_(&model), stats_(&stats) {}
  double pair_iq(const JoinPath& path, const FeatureRef& feature) const override;
  /// Best estimate over the terminal's features (its own key when it has none).
  double path_iq(const JoinPath& path) const override;

 private:
  const IqModel* model_;
  const StatsEngine* stats_;
};

/// Measured IQ; path_iq is the fraction of base rows reaching the terminal,
/// which cannot grow as a path extends.
class ExactIqEstimator final : public IqEstimator {
 public:
  explicit ExactIqEstimator(const JoinEngine& joins) : joins_(&joins) {}
  double pair_iq(const JoinPath& path, const FeatureRef& feature) const override;
  double path_iq(const JoinPath& path) const override;

 private:
  const JoinEngine* joins_;
};

class TransitivityIqEstimator final : public IqEstimator {
 public:
  explicit TransitivityIqEstimator(const StatsEngine& stats) : stats_(&stats) {}
  double pair_iq(const JoinPath& path, const FeatureRef&) const override { return path_iq(path); }
  double path_iq(const JoinPath& path) const override;

 private:
  const StatsEngine* stats_;
};

}  // namespace augplan
