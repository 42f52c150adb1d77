#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "augplan/evaluator.hpp"
#include "augplan/feature_space.hpp"
#include "augplan/iq_model.hpp"
#include "augplan/join_engine.hpp"
#include "augplan/join_graph.hpp"
#include "augplan/join_stats.hpp"

namespace augplan {

struct FeaturePathPair {
  FeatureRef feature;
  JoinPath path{""};
  double weight = 0.0;
};

/// Lexicographic (feature, edge sequence) order used to break ties.
bool pair_before(const FeaturePathPair& a, const FeaturePathPair& b);

/// Every (feature of the terminal, path) pair over the given paths.
std::vector<FeaturePathPair> build_candidates(const JoinGraph& graph,
                                              const std::vector<JoinPath>& paths);

/// Exploration progress. PC: share of a path's edges already explored. PGC:
/// share of paths of a given length already selected. FC: share of a
/// cluster's features already tested.
class CoverageState {
 public:
  CoverageState(std::size_t edge_count, std::map<std::size_t, std::size_t> total_paths_by_length,
                std::vector<std::size_t> cluster_sizes);

  static CoverageState for_candidates(const JoinGraph& graph, const std::vector<JoinPath>& paths,
                                      const FeatureSpace& space);

  double path_coverage(const JoinPath& path) const;
  double length_coverage(std::size_t length) const;
  double cluster_coverage(std::size_t cluster) const;

  void mark(const JoinPath& path, const FeatureRef& feature, std::size_t cluster);

  bool edge_explored(std::size_t edge) const { return edge_explored_.at(edge); }
  std::size_t explored_paths(std::size_t length) const;
  std::size_t tested(std::size_t cluster) const { return tested_.at(cluster); }

  // Direct setters for hand-built states.
  void set_edge_explored(std::size_t edge) { edge_explored_.at(edge) = true; }
  void set_explored_paths(std::size_t length, std::size_t count) { explored_by_length_[length] = count; }
  void set_tested(std::size_t cluster, std::size_t count) { tested_.at(cluster) = count; }

 private:
  std::vector<bool> edge_explored_;
  std::map<std::size_t, std::size_t> total_by_length_;
  std::map<std::size_t, std::size_t> explored_by_length_;
  std::set<std::vector<std::size_t>> seen_paths_;
  std::vector<std::size_t> cluster_size_;
  std::vector<std::size_t> tested_;
  std::set<FeatureRef> seen_features_;
};

double selection_weight(const FeaturePathPair& pair, const CoverageState& state,
                        std::size_t cluster);

/// Greedy coverage selection: repeatedly take the minimum-weight pair (ties
/// in pair_before order), update the coverage state and recompute the
/// weights of the rest.
std::vector<FeaturePathPair> greedy_select(std::vector<FeaturePathPair> candidates,
                                           std::size_t budget, CoverageState& state,
                                           const FeatureSpace& space);

struct PairLabel {
  FeatureRef feature;
  JoinPath path{""};
  double iq = 0.0;
  std::optional<double> gain;  // utility gain over the non-NA rows
  std::string failure;
  double seconds = 0.0;
};

struct ExploreLabels {
  std::vector<PairLabel> pairs;
  std::vector<IqSample> samples;
  std::map<FeatureRef, double> fi;
  std::map<FeatureRef, std::string> unestimable;
};

/// Materialises every selected pair, records (statistics sequence, IQ)
/// samples and the best non-NA utility gain per feature. Per-pair failures
/// are recorded, not thrown. FI values are stored in `space`.
ExploreLabels label_pairs(const std::vector<FeaturePathPair>& selected, const StatsEngine& stats,
                          const UtilityScore& base_score, const TaskSpec& spec,
                          FeatureSpace& space, const Learner& learner = default_learner());

struct ExploreConfig {
  std::size_t budget = 40;
  std::size_t max_hops = 3;
  ClusterParams clusters;
  IqHyper iq;
  TaskSpec task;
};

struct ExploreResult {
  UtilityScore base_score;
  std::vector<FeaturePathPair> selected;
  ExploreLabels labels;
  FeatureSpace space;
  IqModel model;
};

TaskSpec task_for(const JoinGraph& graph, std::optional<Metric> metric, std::uint64_t seed);

FeatureSpace build_feature_space(const JoinGraph& graph, const ClusterParams& params);

ExploreResult run_explore(const StatsEngine& stats, const ExploreConfig& config,
                          const Learner& learner = default_learner());

std::string explore_report_json(const ExploreResult& result, const JoinGraph& graph);
std::string explore_timing_json(const ExploreResult& result, const JoinGraph& graph);
/// Feature importance file: known and estimated FI per feature plus clusters.
std::string fi_json(const FeatureSpace& space, const UtilityScore& base_score);
FeatureSpace fi_from_json(std::string_view text, const JoinGraph& graph, UtilityScore* base_score);

}  // namespace augplan
