#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "augplan/manifest.hpp"
#include "augplan/table.hpp"

namespace augplan {

// Entity model: every row of every table describes one entity, and every key
// column holds that entity's id. The base holds entities 0..rows-1 once each.
// A child table draws match·D of its D distinct entities from its parent and
// the rest fresh; rows repeat entities when distinct < 1. On an edge, only a
// `link` fraction of the left table's entities carry a real key (the rest
// dangle), so the entities reaching a table along a path are an exact set
// intersection.

struct SynthTable {
  std::string name;
  std::string parent;  // empty: the base
  double match = 1.0;
  double link = 1.0;
  double distinct = 1.0;
  std::size_t rows = 0;  // 0: same as the base
  std::size_t noise_features = 1;
  std::size_t categorical_noise = 0;
};

struct SynthCrossEdge {
  std::string left;
  std::string right;
  double link = 1.0;
};

struct SynthPlanted {
  std::string table;  // may be the base name for a pre-existing signal column
  double beta = 1.0;
  double null_fraction = 0.0;
  double weight = 1.0;
};

struct SynthSpec {
  std::string base_name = "base";
  std::size_t rows = 1000;
  std::size_t base_features = 1;
  double base_weight = 0.5;
  double global_noise = 0.3;
  TaskKind task = TaskKind::classification;
  std::vector<SynthTable> tables;
  std::vector<SynthCrossEdge> cross_edges;
  std::vector<SynthPlanted> planted;
  std::size_t ground_truth_hops = 3;
  std::uint64_t seed = 0;
};

/// Random tree over n_tables with depth ≤ hop_depth, match fractions drawn
/// from [min_match, 1] and the given number of planted features with β drawn
/// from [0, 1].
SynthSpec random_synth_spec(std::uint64_t seed, std::size_t n_tables, std::size_t hop_depth,
                            std::size_t planted, double min_match = 0.2,
                            std::size_t rows = 1000);

struct SynthEdgeTruth {
  std::string left;
  std::string right;
  std::string key;  // column name on both sides
  double transitivity = 0.0;
};

struct GroundTruth {
  std::size_t rows = 0;
  std::size_t max_hops = 3;
  std::string base;
  std::map<std::string, std::set<std::size_t>> entities;  // per table
  std::vector<SynthEdgeTruth> edges;
  /// Entities with a real key, per (edge index, table).
  std::map<std::pair<std::size_t, std::string>, std::set<std::size_t>> real_keys;
  std::map<FeatureRef, std::set<std::size_t>> nulls;
  std::map<FeatureRef, double> beta;

  const SynthEdgeTruth* edge_between(const std::string& a, const std::string& b) const;
  /// Base entities reaching the end of a table sequence starting at the base.
  std::set<std::size_t> reached(const std::vector<std::string>& tables) const;
  double reach(const std::vector<std::string>& tables) const;
  /// Exact IQ of carrying `feature` along the table sequence.
  double iq(const std::vector<std::string>& tables, const FeatureRef& feature) const;

  /// Exact reach and per-feature IQ of every table sequence up to max_hops.
  std::string to_json() const;
};

struct SynthDataset {
  std::vector<Table> tables;  // base first
  Manifest manifest;
  GroundTruth truth;
};

/// Throws a data error when the spec cannot be realised.
SynthDataset generate_dataset(const SynthSpec& spec);

/// Writes <name>.csv per table, manifest.json and ground_truth.json.
void write_dataset(const SynthDataset& data, const std::filesystem::path& dir);

}  // namespace augplan
