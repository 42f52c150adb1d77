#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augplan/join_graph.hpp"
#include "augplan/manifest.hpp"
#include "augplan/table.hpp"

namespace augplan {

inline constexpr std::size_t kNameDims = 32;
inline constexpr std::size_t kKindDims = 4;
inline constexpr std::size_t kSummaryDims = 12;
inline constexpr std::size_t kSampleDims = 16;
inline constexpr std::size_t kEmbeddingDims = kNameDims + kKindDims + kSummaryDims + kSampleDims;
inline constexpr std::size_t kMaxSampleCells = 100;
/// Relative weight of the name block; table names differ between otherwise
/// identical columns, so the name counts for less than the content.
inline constexpr double kNameBlockWeight = 0.5;

using Embedding = std::array<double, kEmbeddingDims>;

struct FeatureEmbedding {
  FeatureRef feature;
  Embedding vector{};
};

/// FNV-1a over bytes.
std::uint64_t fnv1a(std::string_view text);

/// Bag of character trigrams hashed into `out` (accumulating counts).
void hash_trigrams(std::string_view text, std::span<double> out);

/// Up to kMaxSampleCells non-null cells, evenly spaced over the column.
std::vector<std::string> sample_cells(const Column& column);

/// Blocks: name trigrams of "table.column", kind one-hot, numeric summary
/// (min, max, mean, std, 8 quantiles; signed log1p), sample trigrams. Each
/// non-zero block is unit-normalised and weighted, then the whole vector is
/// unit-normalised.
Embedding embed_column(const std::string& table, const std::string& column, ColumnKind kind,
                       const Column& cells);
FeatureEmbedding embed_feature(const JoinGraph& graph, const FeatureRef& feature);
std::vector<FeatureEmbedding> embed_features(const JoinGraph& graph,
                                             const std::vector<FeatureRef>& features);

double cosine(const Embedding& a, const Embedding& b);

struct FeatureCluster {
  FeatureRef seed;
  std::vector<FeatureRef> members;  // sorted; includes the seed
  std::map<FeatureRef, double> known_fi;

  bool contains(const FeatureRef& f) const;
};

struct ClusterParams {
  double eps = 0.8;
  std::size_t min_neighbors = 3;
  std::uint64_t seed = 0;
};

/// Single-level ε-neighbourhood clustering. Features are visited in a seeded
/// shuffled order; an unexplored feature whose neighbourhood among unexplored
/// features (itself included, cosine ≥ eps) has at least min_neighbors
/// members claims that neighbourhood. Leftovers become singletons.
std::vector<FeatureCluster> cluster_features(const std::vector<FeatureEmbedding>& embeddings,
                                             const ClusterParams& params);

struct FiEstimate {
  double value = 0.0;
  bool estimated = false;
};

/// Embeddings, clusters and FI values of every candidate feature.
class FeatureSpace {
 public:
  FeatureSpace() = default;
  FeatureSpace(std::vector<FeatureEmbedding> embeddings, std::vector<FeatureCluster> clusters);

  const std::vector<FeatureEmbedding>& embeddings() const { return embeddings_; }
  const std::vector<FeatureCluster>& clusters() const { return clusters_; }
  bool has(const FeatureRef& f) const { return index_.contains(f); }
  const Embedding& embedding(const FeatureRef& f) const;
  double cosine(const FeatureRef& a, const FeatureRef& b) const;
  std::size_t cluster_index(const FeatureRef& f) const;
  const FeatureCluster& cluster_of(const FeatureRef& f) const;

  /// Records a measured FI in the feature's cluster.
  void set_known_fi(const FeatureRef& f, double fi);
  std::optional<double> known_fi(const FeatureRef& f) const;

  /// Known FI if measured, otherwise the cluster-weighted estimate.
  FiEstimate fi(const FeatureRef& f) const;

  std::string clusters_json() const;

 private:
  std::vector<FeatureEmbedding> embeddings_;
  std::vector<FeatureCluster> clusters_;
  std::map<FeatureRef, std::size_t> index_;
  std::map<FeatureRef, std::size_t> cluster_;
};

/// (1/|N|) Σ FI(n)·cos(f, n) over the members N of the cluster with known FI,
/// clipped to [-1, 1]. Unestimated (0) when N is empty.
FiEstimate estimate_fi_unseen(const FeatureRef& feature, const FeatureCluster& cluster,
                              const FeatureSpace& space);

}  // namespace augplan
