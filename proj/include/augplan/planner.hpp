#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "augplan/feature_space.hpp"
#include "augplan/iq_model.hpp"
#include "augplan/join_graph.hpp"

namespace augplan {

using FiTable = std::map<FeatureRef, double>;

/// FI of every feature in the space; unestimated features get 0.
FiTable fi_table(const FeatureSpace& space);

struct PlanItem {
  FeatureRef feature;
  JoinPath path{""};
  double est_iq = 0.0;
  double est_fi = 0.0;
  double est_ug = 0.0;
};

/// Best-first order: higher est_ug, then lexicographic (feature, edges).
bool item_better(const PlanItem& a, const PlanItem& b);

/// Keeps the H best candidates by estimated utility gain.
class CandidateHeap {
 public:
  explicit CandidateHeap(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() >= capacity_; }
  /// Smallest key, or -inf while the heap is not full.
  double min_ug() const;

  /// Inserts when est_ug ≥ min_ug(), evicting the worst entry on overflow.
  /// Returns whether the item was inserted.
  bool offer(const PlanItem& item);

  /// Entries best first.
  std::vector<PlanItem> entries() const { return {entries_.begin(), entries_.end()}; }

 private:
  struct Order {
    bool operator()(const PlanItem& a, const PlanItem& b) const { return item_better(a, b); }
  };
  std::size_t capacity_;
  std::set<PlanItem, Order> entries_;
};

struct SearchParams {
  double t_iq = 0.1;
  std::size_t heap_size = 25;
  std::size_t max_hops = 3;
};

struct SearchResult {
  CandidateHeap heap{1};
  /// Paths that passed the IQ threshold, sorted.
  std::vector<JoinPath> admitted;
  std::size_t expansions = 0;
  std::size_t pruned = 0;
};

/// Level-by-level search from the base. A path whose estimated IQ falls below
/// t_iq is discarded together with all its extensions; every surviving path
/// offers its terminal's features to the heap.
SearchResult search_candidates(const JoinGraph& graph, const IqEstimator& estimator,
                               const FiTable& fi, const SearchParams& params);

/// (1/|N|) Σ FI(n)·(1 − cos(f, n)) over the chosen features N, clipped to
/// [-1, 1]. With N empty the feature's own FI is returned.
double decay_fi(const FeatureRef& feature, double own_fi, const std::vector<FeatureRef>& chosen,
                const FiTable& fi, const FeatureSpace& space);

struct AugmentationPlan {
  std::size_t budget = 0;
  double t_iq = 0.0;
  std::size_t heap_size = 0;
  std::vector<PlanItem> items;
  bool short_of_budget = false;

  /// Σ est_fi·est_iq, summed in feature order.
  double objective() const;
  std::vector<FeatureRef> features() const;
};

/// Repeatedly takes the best remaining candidate, drops the other paths of
/// its feature and decays the utility of candidates sharing its cluster.
/// Stops at the budget, when candidates run out, or when no candidate has a
/// positive estimated gain. `space` may be null to disable decay.
AugmentationPlan refine_plan(const std::vector<PlanItem>& candidates, std::size_t budget,
                             const FiTable& fi, const FeatureSpace* space);

inline constexpr double kOracleCombinationLimit = 1e6;

/// Every (feature, path) pair up to max_hops with estimated IQ and FI.
std::vector<PlanItem> all_pairs(const JoinGraph& graph, const IqEstimator& estimator,
                                const FiTable& fi, std::size_t max_hops);

/// Maximises Σ est_fi·est_iq over all subsets of at most `budget` distinct
/// features, using each feature's best path. Refuses more than
/// kOracleCombinationLimit subsets.
AugmentationPlan exhaustive_oracle(const JoinGraph& graph, const IqEstimator& estimator,
                                   const FiTable& fi, std::size_t budget, std::size_t max_hops);

/// Top-FI features, each on its shortest path (ties: highest estimated IQ).
AugmentationPlan greedy_baseline(const JoinGraph& graph, const IqEstimator& estimator,
                                 const FiTable& fi, std::size_t budget, std::size_t max_hops);

struct PlannerConfig {
  std::size_t budget = 5;
  double t_iq = 0.1;
  std::size_t heap_multiple = 5;
  std::size_t max_hops = 3;
};

AugmentationPlan plan_augmentation(const JoinGraph& graph, const IqEstimator& estimator,
                                   const FeatureSpace& space, const PlannerConfig& config,
                                   SearchResult* search = nullptr);

std::string plan_to_json(const AugmentationPlan& plan, const JoinGraph& graph);
AugmentationPlan plan_from_json(std::string_view text, const JoinGraph& graph);

}  // namespace augplan
