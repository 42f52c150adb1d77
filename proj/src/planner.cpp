#include "augplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "augplan/error.hpp"

namespace augplan {

FiTable fi_table(const FeatureSpace& space) {
  FiTable out;
  for (const FeatureEmbedding& e : space.embeddings()) out[e.feature] = space.fi(e.feature).value;
  return out;
}

bool item_better(const PlanItem& a, const PlanItem& b) {
  if (a.est_ug != b.est_ug) return a.est_ug > b.est_ug;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.path.edges() < b.path.edges();
}

CandidateHeap::CandidateHeap(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw_usage_error("heap size must be positive");
}

double CandidateHeap::min_ug() const {
  if (!full()) return -std::numeric_limits<double>::infinity();
  return std::prev(entries_.end())->est_ug;
}

bool CandidateHeap::offer(const PlanItem& item) {
  if (item.est_ug < min_ug()) return false;
  entries_.insert(item);
  if (entries_.size() > capacity_) {
    auto worst = std::prev(entries_.end());
    const bool evicted_self = worst->feature == item.feature && worst->path == item.path;
    entries_.erase(worst);
    return !evicted_self;
  }
  return true;
}

namespace {

double fi_of(const FiTable& fi, const FeatureRef& f) {
  auto it = fi.find(f);
  return it == fi.end() ? 0.0 : it->second;
}

}  // namespace

SearchResult search_candidates(const JoinGraph& graph, const IqEstimator& estimator,
                               const FiTable& fi, const SearchParams& params) {
  SearchResult result;
  result.heap = CandidateHeap(params.heap_size);
  std::vector<JoinPath> frontier{JoinPath(graph.base())};
  for (std::size_t level = 0; level < params.max_hops && !frontier.empty(); ++level) {
    std::vector<JoinPath> next;
    for (const JoinPath& p : frontier) {
      for (std::size_t e : graph.incident(p.terminal())) {
        const JoinEdge& edge = graph.edge(e);
        if (p.visits(edge.opposite(p.terminal()).table)) continue;
        JoinPath extended = p.extended(edge);
        if (estimator.path_iq(extended) < params.t_iq) {
          ++result.pruned;
          continue;
        }
        ++result.expansions;
        next.push_back(extended);
      }
    }
    std::sort(next.begin(), next.end());
    for (const JoinPath& p : next) {
      for (const FeatureRef& f : graph.features_of(p.terminal())) {
        PlanItem item;
        item.feature = f;
        item.path = p;
        item.est_iq = estimator.pair_iq(p, f);
        item.est_fi = fi_of(fi, f);
        item.est_ug = item.est_fi * item.est_iq;
        result.heap.offer(item);
      }
    }
    result.admitted.insert(result.admitted.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  std::sort(result.admitted.begin(), result.admitted.end());
  return result;
}

double decay_fi(const FeatureRef& feature, double own_fi, const std::vector<FeatureRef>& chosen,
                const FiTable& fi, const FeatureSpace& space) {
  if (chosen.empty()) return own_fi;
  double acc = 0.0;
  for (const FeatureRef& n : chosen) acc += fi_of(fi, n) * (1.0 - space.cosine(feature, n));
  return std::clamp(acc / static_cast<double>(chosen.size()), -1.0, 1.0);
}

double AugmentationPlan::objective() const {
  std::vector<const PlanItem*> order;
  for (const PlanItem& i : items) order.push_back(&i);
  std::sort(order.begin(), order.end(), [](const PlanItem* a, const PlanItem* b) {
    if (a->feature != b->feature) return a->feature < b->feature;
    return a->path.edges() < b->path.edges();
  });
  double total = 0.0;
  for (const PlanItem* i : order) total += i->est_fi * i->est_iq;
  return total;
}

std::vector<FeatureRef> AugmentationPlan::features() const {
  std::vector<FeatureRef> out;
  for (const PlanItem& i : items) out.push_back(i.feature);
  return out;
}

AugmentationPlan refine_plan(const std::vector<PlanItem>& candidates, std::size_t budget,
                             const FiTable& fi, const FeatureSpace* space) {
  AugmentationPlan plan;
  plan.budget = budget;
  std::vector<PlanItem> remaining = candidates;
  for (PlanItem& c : remaining) c.est_ug = c.est_fi * c.est_iq;
  std::vector<FeatureRef> chosen;
  while (plan.items.size() < budget && !remaining.empty()) {
    const auto best = std::min_element(remaining.begin(), remaining.end(), item_better);
    if (best->est_ug <= 0.0) break;
    const PlanItem pick = *best;
    plan.items.push_back(pick);
    chosen.push_back(pick.feature);
    std::erase_if(remaining, [&](const PlanItem& c) { return c.feature == pick.feature; });
    if (!space || !space->has(pick.feature)) continue;
    const std::size_t cluster = space->cluster_index(pick.feature);
    for (PlanItem& c : remaining) {
      if (!space->has(c.feature) || space->cluster_index(c.feature) != cluster) continue;
      std::vector<FeatureRef> same;
      for (const FeatureRef& f : chosen) {
        if (space->has(f) && space->cluster_index(f) == cluster) same.push_back(f);
      }
      const double decayed = decay_fi(c.feature, c.est_fi, same, fi, *space) * c.est_iq;
      c.est_ug = std::min(c.est_ug, decayed);
    }
  }
  plan.short_of_budget = plan.items.size() < budget;
  return plan;
}

std::vector<PlanItem> all_pairs(const JoinGraph& graph, const IqEstimator& estimator,
                                const FiTable& fi, std::size_t max_hops) {
  std::vector<PlanItem> out;
  for (const JoinPath& p : enumerate_paths(graph, max_hops)) {
    if (p.empty()) continue;
    for (const FeatureRef& f : graph.features_of(p.terminal())) {
      PlanItem item;
      item.feature = f;
      item.path = p;
      item.est_iq = estimator.pair_iq(p, f);
      item.est_fi = fi_of(fi, f);
      item.est_ug = item.est_fi * item.est_iq;
      out.push_back(std::move(item));
    }
  }
  return out;
}

AugmentationPlan exhaustive_oracle(const JoinGraph& graph, const IqEstimator& estimator,
                                   const FiTable& fi, std::size_t budget, std::size_t max_hops) {
  std::map<FeatureRef, PlanItem> best;
  for (PlanItem& item : all_pairs(graph, estimator, fi, max_hops)) {
    auto it = best.find(item.feature);
    if (it == best.end() || item_better(item, it->second)) best.insert_or_assign(item.feature, item);
  }
  std::vector<PlanItem> per_feature;
  for (auto& [f, item] : best) per_feature.push_back(item);

  const std::size_t n = per_feature.size();
  double combinations = 0.0;
  double binom = 1.0;
  for (std::size_t k = 0; k <= std::min(budget, n); ++k) {
    combinations += binom;
    binom = binom * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  if (combinations > kOracleCombinationLimit) {
    throw_stage_error("exhaustive oracle refused: " + std::to_string(static_cast<long long>(combinations)) +
                      " combinations exceed the limit");
  }

  std::vector<std::size_t> current;
  std::vector<std::size_t> best_set;
  double best_value = 0.0;
  std::function<void(std::size_t, double)> visit = [&](std::size_t start, double value) {
    if (value > best_value) {
      best_value = value;
      best_set = current;
    }
    if (current.size() == budget) return;
    for (std::size_t i = start; i < n; ++i) {
      current.push_back(i);
      visit(i + 1, value + per_feature[i].est_fi * per_feature[i].est_iq);
      current.pop_back();
    }
  };
  visit(0, 0.0);

  AugmentationPlan plan;
  plan.budget = budget;
  plan.t_iq = 0.0;
  for (std::size_t i : best_set) plan.items.push_back(per_feature[i]);
  std::sort(plan.items.begin(), plan.items.end(), item_better);
  plan.short_of_budget = plan.items.size() < budget;
  return plan;
}

AugmentationPlan greedy_baseline(const JoinGraph& graph, const IqEstimator& estimator,
                                 const FiTable& fi, std::size_t budget, std::size_t max_hops) {
  std::map<FeatureRef, std::vector<JoinPath>> paths_of;
  for (const JoinPath& p : enumerate_paths(graph, max_hops)) {
    if (p.empty()) continue;
    for (const FeatureRef& f : graph.features_of(p.terminal())) paths_of[f].push_back(p);
  }
  std::vector<FeatureRef> ranked;
  for (const auto& [f, paths] : paths_of) {
    if (fi_of(fi, f) > 0.0) ranked.push_back(f);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [&](const FeatureRef& a, const FeatureRef& b) {
    return fi_of(fi, a) > fi_of(fi, b);
  });
  AugmentationPlan plan;
  plan.budget = budget;
  for (const FeatureRef& f : ranked) {
    if (plan.items.size() == budget) break;
    std::optional<PlanItem> pick;
    for (const JoinPath& p : paths_of[f]) {
      PlanItem item;
      item.feature = f;
      item.path = p;
      item.est_iq = estimator.pair_iq(p, f);
      item.est_fi = fi_of(fi, f);
      item.est_ug = item.est_fi * item.est_iq;
      // Paths arrive shortest first; within a length keep the highest IQ.
      if (!pick || p.length() < pick->path.length() ||
          (p.length() == pick->path.length() && item.est_iq > pick->est_iq)) {
        pick = item;
      }
    }
    plan.items.push_back(*pick);
  }
  plan.short_of_budget = plan.items.size() < budget;
  return plan;
}

AugmentationPlan plan_augmentation(const JoinGraph& graph, const IqEstimator& estimator,
                                   const FeatureSpace& space, const PlannerConfig& config,
                                   SearchResult* search) {
  if (config.budget == 0) throw_usage_error("budget must be positive");
  if (config.heap_multiple == 0) throw_usage_error("heap multiple must be positive");
  if (!(config.t_iq >= 0.0 && config.t_iq <= 1.0)) throw_usage_error("t_iq must lie in [0, 1]");
  const FiTable fi = fi_table(space);
  SearchParams params;
  params.t_iq = config.t_iq;
  params.heap_size = config.budget * config.heap_multiple;
  params.max_hops = config.max_hops;
  SearchResult result = search_candidates(graph, estimator, fi, params);
  AugmentationPlan plan = refine_plan(result.heap.entries(), config.budget, fi, &space);
  plan.t_iq = config.t_iq;
  plan.heap_size = params.heap_size;
  if (search) *search = std::move(result);
  return plan;
}

std::string plan_to_json(const AugmentationPlan& plan, const JoinGraph& graph) {
  nlohmann::json items = nlohmann::json::array();
  for (const PlanItem& i : plan.items) {
    items.push_back({{"feature", i.feature.to_string()},
                     {"path", i.path.edge_ids(graph)},
                     {"est_iq", i.est_iq},
                     {"est_fi", i.est_fi},
                     {"est_ug", i.est_ug}});
  }
  nlohmann::json out{{"budget", plan.budget},
                     {"t_iq", plan.t_iq},
                     {"heap_size", plan.heap_size},
                     {"short_of_budget", plan.short_of_budget},
                     {"objective", plan.objective()},
                     {"items", items}};
  return out.dump(2) + "\n";
}

AugmentationPlan plan_from_json(std::string_view text, const JoinGraph& graph) {
  try {
    const auto node = nlohmann::json::parse(text);
    AugmentationPlan plan;
    plan.budget = node.at("budget").get<std::size_t>();
    plan.t_iq = node.at("t_iq").get<double>();
    plan.heap_size = node.at("heap_size").get<std::size_t>();
    plan.short_of_budget = node.value("short_of_budget", false);
    for (const auto& i : node.at("items")) {
      PlanItem item;
      item.feature = ColumnRef::parse(i.at("feature").get<std::string>());
      item.path = JoinPath::from_edge_ids(graph, i.at("path").get<std::vector<std::string>>());
      item.est_iq = i.at("est_iq").get<double>();
      item.est_fi = i.at("est_fi").get<double>();
      item.est_ug = i.at("est_ug").get<double>();
      plan.items.push_back(std::move(item));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw_data_error(std::string("malformed plan file: ") + e.what());
  }
}

}  // namespace augplan
