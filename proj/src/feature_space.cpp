#include "augplan/feature_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "augplan/error.hpp"
#include "augplan/random.hpp"

namespace augplan {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void hash_trigrams(std::string_view text, std::span<double> out) {
  // Pad so that short strings still yield at least one trigram.
  const std::string padded = "^" + std::string(text) + "$";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    out[fnv1a(std::string_view(padded).substr(i, 3)) % out.size()] += 1.0;
  }
}

std::vector<std::string> sample_cells(const Column& column) {
  std::vector<std::size_t> present;
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (!column.is_null(r)) present.push_back(r);
  }
  const std::size_t k = std::min(present.size(), kMaxSampleCells);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(column.text(present[i * present.size() / k]));
  return out;
}

namespace {

double signed_log1p(double x) { return x < 0 ? -std::log1p(-x) : std::log1p(x); }

void normalize_block(std::span<double> block, double weight) {
  double ss = 0.0;
  for (double v : block) ss += v * v;
  if (ss <= 0.0) return;
  const double scale = weight / std::sqrt(ss);
  for (double& v : block) v *= scale;
}

double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Embedding embed_column(const std::string& table, const std::string& column, ColumnKind kind,
                       const Column& cells) {
  Embedding e{};
  std::span<double> all(e);
  auto name = all.subspan(0, kNameDims);
  auto kinds = all.subspan(kNameDims, kKindDims);
  auto summary = all.subspan(kNameDims + kKindDims, kSummaryDims);
  auto sample = all.subspan(kNameDims + kKindDims + kSummaryDims, kSampleDims);

  hash_trigrams(table + "." + column, name);
  kinds[static_cast<std::size_t>(kind)] = 1.0;

  if (kind == ColumnKind::numeric) {
    std::vector<double> values;
    for (std::size_t r = 0; r < cells.size(); ++r) {
      if (!cells.is_null(r)) values.push_back(cells.number(r));
    }
    if (!values.empty()) {
      std::sort(values.begin(), values.end());
      const double n = static_cast<double>(values.size());
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      summary[0] = values.front();
      summary[1] = values.back();
      summary[2] = mean;
      summary[3] = std::sqrt(ss / n);
      for (std::size_t q = 0; q < 8; ++q) {
        summary[4 + q] = quantile(values, static_cast<double>(q + 1) / 9.0);
      }
      for (double& v : summary) v = signed_log1p(v);
    }
  }
  for (const std::string& cell : sample_cells(cells)) hash_trigrams(cell, sample);

  normalize_block(name, kNameBlockWeight);
  normalize_block(kinds, 1.0);
  normalize_block(summary, 1.0);
  normalize_block(sample, 1.0);
  normalize_block(all, 1.0);
  return e;
}

FeatureEmbedding embed_feature(const JoinGraph& graph, const FeatureRef& feature) {
  const Column& col = graph.table(feature.table).column(feature.column);
  return {feature, embed_column(feature.table, feature.column, col.kind(), col)};
}

std::vector<FeatureEmbedding> embed_features(const JoinGraph& graph,
                                             const std::vector<FeatureRef>& features) {
  std::vector<FeatureEmbedding> out;
  out.reserve(features.size());
  for (const FeatureRef& f : features) out.push_back(embed_feature(graph, f));
  return out;
}

double cosine(const Embedding& a, const Embedding& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDims; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

bool FeatureCluster::contains(const FeatureRef& f) const {
  return std::binary_search(members.begin(), members.end(), f);
}

std::vector<FeatureCluster> cluster_features(const std::vector<FeatureEmbedding>& embeddings,
                                             const ClusterParams& params) {
  if (!(params.eps > 0.0 && params.eps < 1.0)) throw_usage_error("eps must lie in (0, 1)");
  if (params.min_neighbors < 1) throw_usage_error("min neighbours must be at least 1");

  std::vector<std::size_t> order(embeddings.size());
  std::iota(order.begin(), order.end(), 0);
  // Sort first so the shuffle does not depend on the caller's ordering.
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return embeddings[a].feature < embeddings[b].feature; });
  Rng rng(params.seed);
  rng.shuffle(order);

  std::vector<bool> explored(embeddings.size(), false);
  std::vector<FeatureCluster> clusters;
  for (std::size_t s : order) {
    if (explored[s]) continue;
    std::vector<std::size_t> hood;
    for (std::size_t j : order) {
      if (!explored[j] && cosine(embeddings[s].vector, embeddings[j].vector) >= params.eps) {
        hood.push_back(j);
      }
    }
    if (std::find(hood.begin(), hood.end(), s) == hood.end()) hood.push_back(s);
    if (hood.size() < params.min_neighbors) continue;
    FeatureCluster c;
    c.seed = embeddings[s].feature;
    for (std::size_t j : hood) {
      explored[j] = true;
      c.members.push_back(embeddings[j].feature);
    }
    std::sort(c.members.begin(), c.members.end());
    clusters.push_back(std::move(c));
  }
  for (std::size_t s : order) {
    if (explored[s]) continue;
    FeatureCluster c;
    c.seed = embeddings[s].feature;
    c.members = {c.seed};
    clusters.push_back(std::move(c));
  }
  return clusters;
}

FeatureSpace::FeatureSpace(std::vector<FeatureEmbedding> embeddings,
                           std::vector<FeatureCluster> clusters)
    : embeddings_(std::move(embeddings)), clusters_(std::move(clusters)) {
  for (std::size_t i = 0; i < embeddings_.size(); ++i) index_[embeddings_[i].feature] = i;
  for (std::size_t c = 0; c < clusters_.size(); ++c) {
    for (const FeatureRef& f : clusters_[c].members) {
      if (!index_.contains(f)) throw_data_error("cluster member " + f.to_string() + " has no embedding");
      if (!cluster_.emplace(f, c).second) {
        throw_data_error("feature " + f.to_string() + " appears in two clusters");
      }
    }
  }
  for (const auto& [f, i] : index_) {
    if (!cluster_.contains(f)) throw_data_error("feature " + f.to_string() + " has no cluster");
  }
}

const Embedding& FeatureSpace::embedding(const FeatureRef& f) const {
  auto it = index_.find(f);
  if (it == index_.end()) throw_data_error("unknown feature " + f.to_string());
  return embeddings_[it->second].vector;
}

double FeatureSpace::cosine(const FeatureRef& a, const FeatureRef& b) const {
  return augplan::cosine(embedding(a), embedding(b));
}

std::size_t FeatureSpace::cluster_index(const FeatureRef& f) const {
  auto it = cluster_.find(f);
  if (it == cluster_.end()) throw_data_error("unknown feature " + f.to_string());
  return it->second;
}

const FeatureCluster& FeatureSpace::cluster_of(const FeatureRef& f) const {
  return clusters_[cluster_index(f)];
}

void FeatureSpace::set_known_fi(const FeatureRef& f, double fi) {
  clusters_[cluster_index(f)].known_fi[f] = std::clamp(fi, -1.0, 1.0);
}

std::optional<double> FeatureSpace::known_fi(const FeatureRef& f) const {
  const auto& known = cluster_of(f).known_fi;
  auto it = known.find(f);
  if (it == known.end()) return std::nullopt;
  return it->second;
}

FiEstimate FeatureSpace::fi(const FeatureRef& f) const {
  if (auto k = known_fi(f)) return {*k, true};
  return estimate_fi_unseen(f, cluster_of(f), *this);
}

std::string FeatureSpace::clusters_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const FeatureCluster& c : clusters_) {
    nlohmann::json members = nlohmann::json::array();
    for (const FeatureRef& f : c.members) members.push_back(f.to_string());
    nlohmann::json known = nlohmann::json::object();
    for (const auto& [f, v] : c.known_fi) known[f.to_string()] = v;
    out.push_back({{"seed", c.seed.to_string()}, {"members", members}, {"known_fi", known}});
  }
  return out.dump(2);
}

FiEstimate estimate_fi_unseen(const FeatureRef& feature, const FeatureCluster& cluster,
                              const FeatureSpace& space) {
  if (cluster.known_fi.empty()) return {0.0, false};
  double acc = 0.0;
  for (const auto& [member, fi] : cluster.known_fi) acc += fi * space.cosine(feature, member);
  return {std::clamp(acc / static_cast<double>(cluster.known_fi.size()), -1.0, 1.0), true};
}

}  // namespace augplan
