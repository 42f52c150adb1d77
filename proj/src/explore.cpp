#include "augplan/explore.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include <json.hpp>

#include "augplan/error.hpp"

namespace augplan {

bool pair_before(const FeaturePathPair& a, const FeaturePathPair& b) {
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.path.edges() < b.path.edges();
}

std::vector<FeaturePathPair> build_candidates(const JoinGraph& graph,
                                              const std::vector<JoinPath>& paths) {
  std::vector<FeaturePathPair> out;
  for (const JoinPath& p : paths) {
    if (p.empty()) continue;
    for (const FeatureRef& f : graph.features_of(p.terminal())) out.push_back({f, p, 0.0});
  }
  std::sort(out.begin(), out.end(), pair_before);
  return out;
}

CoverageState::CoverageState(std::size_t edge_count,
                             std::map<std::size_t, std::size_t> total_paths_by_length,
                             std::vector<std::size_t> cluster_sizes)
    : edge_explored_(edge_count, false),
      total_by_length_(std::move(total_paths_by_length)),
      cluster_size_(std::move(cluster_sizes)),
      tested_(cluster_size_.size(), 0) {}

CoverageState CoverageState::for_candidates(const JoinGraph& graph,
                                            const std::vector<JoinPath>& paths,
                                            const FeatureSpace& space) {
  std::vector<JoinPath> nonempty;
  for (const JoinPath& p : paths) {
    if (!p.empty()) nonempty.push_back(p);
  }
  std::vector<std::size_t> sizes;
  for (const FeatureCluster& c : space.clusters()) sizes.push_back(c.members.size());
  return CoverageState(graph.edges().size(), count_paths_by_length(nonempty), std::move(sizes));
}

double CoverageState::path_coverage(const JoinPath& path) const {
  if (path.empty()) return 0.0;
  std::size_t done = 0;
  for (std::size_t e : path.edges()) done += edge_explored_.at(e) ? 1 : 0;
  return static_cast<double>(done) / static_cast<double>(path.length());
}

std::size_t CoverageState::explored_paths(std::size_t length) const {
  auto it = explored_by_length_.find(length);
  return it == explored_by_length_.end() ? 0 : it->second;
}

double CoverageState::length_coverage(std::size_t length) const {
  auto it = total_by_length_.find(length);
  if (it == total_by_length_.end() || it->second == 0) return 0.0;
  return static_cast<double>(explored_paths(length)) / static_cast<double>(it->second);
}

double CoverageState::cluster_coverage(std::size_t cluster) const {
  const std::size_t size = cluster_size_.at(cluster);
  return size == 0 ? 0.0 : static_cast<double>(tested_.at(cluster)) / static_cast<double>(size);
}

void CoverageState::mark(const JoinPath& path, const FeatureRef& feature, std::size_t cluster) {
  for (std::size_t e : path.edges()) edge_explored_.at(e) = true;
  if (seen_paths_.insert(path.edges()).second) ++explored_by_length_[path.length()];
  if (seen_features_.insert(feature).second) ++tested_.at(cluster);
}

double selection_weight(const FeaturePathPair& pair, const CoverageState& state,
                        std::size_t cluster) {
  return state.path_coverage(pair.path) * state.length_coverage(pair.path.length()) *
         state.cluster_coverage(cluster);
}

std::vector<FeaturePathPair> greedy_select(std::vector<FeaturePathPair> candidates,
                                           std::size_t budget, CoverageState& state,
                                           const FeatureSpace& space) {
  std::sort(candidates.begin(), candidates.end(), pair_before);
  std::vector<std::size_t> cluster(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cluster[i] = space.cluster_index(candidates[i].feature);
    candidates[i].weight = selection_weight(candidates[i], state, cluster[i]);
  }
  std::vector<bool> taken(candidates.size(), false);
  std::vector<FeaturePathPair> selected;
  while (selected.size() < budget && selected.size() < candidates.size()) {
    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      // Candidates are sorted, so strict < keeps the lexicographically first.
      if (!taken[i] && (best == candidates.size() || candidates[i].weight < candidates[best].weight)) {
        best = i;
      }
    }
    taken[best] = true;
    selected.push_back(candidates[best]);
    state.mark(candidates[best].path, candidates[best].feature, cluster[best]);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!taken[i]) candidates[i].weight = selection_weight(candidates[i], state, cluster[i]);
    }
  }
  return selected;
}

ExploreLabels label_pairs(const std::vector<FeaturePathPair>& selected, const StatsEngine& stats,
                          const UtilityScore& base_score, const TaskSpec& spec,
                          FeatureSpace& space, const Learner& learner) {
  if (selected.empty()) throw_data_error("no pairs selected for labelling");
  ExploreLabels out;
  const JoinEngine& joins = stats.joins();
  std::map<FeatureRef, std::vector<double>> gains;
  for (const FeaturePathPair& pair : selected) {
    const auto start = std::chrono::steady_clock::now();
    PairLabel label;
    label.feature = pair.feature;
    label.path = pair.path;
    try {
      const AugmentedTable aug = joins.execute(pair.path, pair.feature);
      label.iq = integration_quality(aug);
      out.samples.push_back({stats.raw_sequence(pair.path, pair.feature), label.iq});
      try {
        label.gain = compute_fi({aug}, base_score, spec, learner);
        gains[pair.feature].push_back(*label.gain);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::data) throw;
        label.failure = e.what();
      }
    } catch (const Error& e) {
      label.failure = e.what();
    }
    label.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.pairs.push_back(std::move(label));
  }
  for (const PairLabel& label : out.pairs) {
    auto it = gains.find(label.feature);
    if (it == gains.end()) {
      out.unestimable.emplace(label.feature, label.failure);
      continue;
    }
    const double fi = std::clamp(*std::max_element(it->second.begin(), it->second.end()), -1.0, 1.0);
    out.fi[label.feature] = fi;
    space.set_known_fi(label.feature, fi);
  }
  return out;
}

TaskSpec task_for(const JoinGraph& graph, std::optional<Metric> metric, std::uint64_t seed) {
  TaskSpec spec;
  spec.target = graph.target();
  spec.task = graph.task();
  spec.metric = metric.value_or(default_metric(graph.task()));
  spec.split_seed = seed;
  spec.validate();
  return spec;
}

FeatureSpace build_feature_space(const JoinGraph& graph, const ClusterParams& params) {
  auto embeddings = embed_features(graph, graph.all_features());
  auto clusters = cluster_features(embeddings, params);
  return FeatureSpace(std::move(embeddings), std::move(clusters));
}

ExploreResult run_explore(const StatsEngine& stats, const ExploreConfig& config,
                          const Learner& learner) {
  const JoinGraph& graph = stats.graph();
  if (config.budget == 0) throw_usage_error("explore budget must be positive");
  ExploreResult result;
  result.base_score = utility_score(graph.base_table(), config.task, learner);
  result.space = build_feature_space(graph, config.clusters);

  const auto paths = enumerate_paths(graph, config.max_hops);
  const auto candidates = build_candidates(graph, paths);
  if (candidates.empty()) throw_data_error("no candidate feature-path pairs reachable from the base");
  CoverageState state = CoverageState::for_candidates(graph, paths, result.space);
  result.selected = greedy_select(candidates, config.budget, state, result.space);
  result.labels = label_pairs(result.selected, stats, result.base_score, config.task, result.space,
                              learner);
  if (result.labels.samples.empty()) throw_stage_error("exploration produced no IQ samples");
  result.model = train_iq_model(result.labels.samples, config.iq);
  return result;
}

namespace {

nlohmann::json edge_list(const JoinPath& path, const JoinGraph& graph) {
  return nlohmann::json(path.edge_ids(graph));
}

}  // namespace

std::string explore_report_json(const ExploreResult& result, const JoinGraph& graph) {
  nlohmann::json pairs = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  for (const PairLabel& p : result.labels.pairs) {
    nlohmann::json item{{"feature", p.feature.to_string()},
                        {"path", edge_list(p.path, graph)},
                        {"iq", p.iq}};
    item["gain"] = p.gain ? nlohmann::json(*p.gain) : nlohmann::json(nullptr);
    pairs.push_back(item);
    if (!p.failure.empty()) {
      failures.push_back({{"feature", p.feature.to_string()},
                          {"path", edge_list(p.path, graph)},
                          {"error", p.failure}});
    }
  }
  nlohmann::json fi = nlohmann::json::object();
  for (const auto& [f, v] : result.labels.fi) fi[f.to_string()] = v;
  nlohmann::json unest = nlohmann::json::array();
  for (const auto& [f, why] : result.labels.unestimable) unest.push_back(f.to_string());
  const TrainingInfo& t = result.model.training();
  nlohmann::json out{{"base_score", nlohmann::json::parse(result.base_score.to_json())},
                     {"selected", pairs},
                     {"fi", fi},
                     {"unestimable", unest},
                     {"failures", failures},
                     {"training",
                      {{"samples", t.samples}, {"best_epoch", t.best_epoch}, {"best_mse", t.best_mse}}}};
  return out.dump(2) + "\n";
}

std::string explore_timing_json(const ExploreResult& result, const JoinGraph& graph) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const PairLabel& p : result.labels.pairs) {
    pairs.push_back({{"feature", p.feature.to_string()},
                     {"path", edge_list(p.path, graph)},
                     {"seconds", p.seconds}});
  }
  return nlohmann::json{{"pairs", pairs}}.dump(2) + "\n";
}

std::string fi_json(const FeatureSpace& space, const UtilityScore& base_score) {
  nlohmann::json features = nlohmann::json::object();
  for (const FeatureEmbedding& e : space.embeddings()) {
    const FiEstimate est = space.fi(e.feature);
    features[e.feature.to_string()] = {{"fi", est.value},
                                       {"known", space.known_fi(e.feature).has_value()},
                                       {"estimated", est.estimated},
                                       {"cluster", space.cluster_index(e.feature)}};
  }
  nlohmann::json out{{"base_score", nlohmann::json::parse(base_score.to_json())},
                     {"features", features},
                     {"clusters", nlohmann::json::parse(space.clusters_json())}};
  return out.dump(2) + "\n";
}

FeatureSpace fi_from_json(std::string_view text, const JoinGraph& graph, UtilityScore* base_score) {
  nlohmann::json node;
  try {
    node = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_data_error(std::string("malformed FI file: ") + e.what());
  }
  try {
    std::vector<FeatureCluster> clusters;
    for (const auto& c : node.at("clusters")) {
      FeatureCluster cluster;
      cluster.seed = ColumnRef::parse(c.at("seed").get<std::string>());
      for (const auto& m : c.at("members")) cluster.members.push_back(ColumnRef::parse(m.get<std::string>()));
      std::sort(cluster.members.begin(), cluster.members.end());
      for (const auto& [k, v] : c.at("known_fi").items()) cluster.known_fi[ColumnRef::parse(k)] = v.get<double>();
      clusters.push_back(std::move(cluster));
    }
    std::vector<FeatureRef> features;
    for (const FeatureCluster& c : clusters) {
      features.insert(features.end(), c.members.begin(), c.members.end());
    }
    std::sort(features.begin(), features.end());
    if (features != graph.all_features()) {
      throw_data_error("FI file does not match the join graph's features");
    }
    if (base_score) {
      const auto& b = node.at("base_score");
      base_score->value = b.at("value").get<double>();
      base_score->metric = parse_metric(b.at("metric").get<std::string>());
      base_score->n_train = b.at("n_train").get<std::size_t>();
      base_score->n_eval = b.at("n_eval").get<std::size_t>();
      base_score->split_seed = b.at("seed").get<std::uint64_t>();
    }
    return FeatureSpace(embed_features(graph, features), std::move(clusters));
  } catch (const nlohmann::json::exception& e) {
    throw_data_error(std::string("malformed FI file: ") + e.what());
  }
}

}  // namespace augplan
