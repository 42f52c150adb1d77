#include "augplan/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "augplan/error.hpp"
#include "augplan/random.hpp"

namespace augplan {

namespace {

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string entity_id(std::size_t e) { return "e" + std::to_string(e); }

template <class T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, Rng& rng) {
  rng.shuffle(items);
  items.resize(std::min(k, items.size()));
  std::sort(items.begin(), items.end());
  return items;
}

struct Edge {
  std::string left;
  std::string right;
  double link = 1.0;
};

}  // namespace

SynthSpec random_synth_spec(std::uint64_t seed, std::size_t n_tables, std::size_t hop_depth,
                            std::size_t planted, double min_match, std::size_t rows) {
  if (hop_depth == 0) throw_data_error("hop depth must be positive");
  Rng rng(mix_seed(seed, 101));
  SynthSpec spec;
  spec.seed = seed;
  spec.rows = rows;
  std::map<std::string, std::size_t> depth{{spec.base_name, 0}};
  std::vector<std::string> open{spec.base_name};
  for (std::size_t i = 0; i < n_tables; ++i) {
    SynthTable t;
    t.name = "t" + std::to_string(i + 1);
    const std::string parent = open[rng.below(open.size())];
    t.parent = parent == spec.base_name ? "" : parent;
    t.match = rng.uniform(min_match, 1.0);
    t.noise_features = 1;
    depth[t.name] = depth[parent] + 1;
    if (depth[t.name] < hop_depth) open.push_back(t.name);
    spec.tables.push_back(t);
  }
  for (std::size_t p = 0; p < planted && n_tables > 0; ++p) {
    spec.planted.push_back({spec.tables[rng.below(n_tables)].name, rng.uniform(), 0.0, 1.0});
  }
  return spec;
}

const SynthEdgeTruth* GroundTruth::edge_between(const std::string& a, const std::string& b) const {
  for (const SynthEdgeTruth& e : edges) {
    if ((e.left == a && e.right == b) || (e.left == b && e.right == a)) return &e;
  }
  return nullptr;
}

std::set<std::size_t> GroundTruth::reached(const std::vector<std::string>& tables) const {
  if (tables.empty() || tables.front() != base) throw_data_error("ground truth paths start at the base");
  std::set<std::size_t> out;
  for (std::size_t e = 0; e < rows; ++e) out.insert(e);
  for (std::size_t i = 0; i + 1 < tables.size(); ++i) {
    const SynthEdgeTruth* edge = edge_between(tables[i], tables[i + 1]);
    if (!edge) throw_data_error("no generated edge between " + tables[i] + " and " + tables[i + 1]);
    const auto index = static_cast<std::size_t>(edge - edges.data());
    const auto& from = real_keys.at({index, tables[i]});
    const auto& to = real_keys.at({index, tables[i + 1]});
    std::erase_if(out, [&](std::size_t e) { return !from.contains(e) || !to.contains(e); });
  }
  return out;
}

double GroundTruth::reach(const std::vector<std::string>& tables) const {
  return static_cast<double>(reached(tables).size()) / static_cast<double>(rows);
}

double GroundTruth::iq(const std::vector<std::string>& tables, const FeatureRef& feature) const {
  if (tables.back() != feature.table) throw_data_error("feature is not on the path terminal");
  auto got = reached(tables);
  if (auto it = nulls.find(feature); it != nulls.end()) {
    std::erase_if(got, [&](std::size_t e) { return it->second.contains(e); });
  }
  return static_cast<double>(got.size()) / static_cast<double>(rows);
}

std::string GroundTruth::to_json() const {
  nlohmann::json edge_list = nlohmann::json::array();
  std::map<std::string, std::vector<std::string>> adjacent;
  for (const SynthEdgeTruth& e : edges) {
    edge_list.push_back({{"left", e.left + "." + e.key},
                         {"right", e.right + "." + e.key},
                         {"transitivity", e.transitivity}});
    adjacent[e.left].push_back(e.right);
    adjacent[e.right].push_back(e.left);
  }
  for (auto& [t, n] : adjacent) std::sort(n.begin(), n.end());

  std::map<std::string, std::vector<std::string>> features;
  for (const auto& [f, b] : beta) features[f.table].push_back(f.column);
  for (const auto& [f, n] : nulls) {
    auto& list = features[f.table];
    if (std::find(list.begin(), list.end(), f.column) == list.end()) list.push_back(f.column);
  }

  nlohmann::json paths = nlohmann::json::array();
  std::vector<std::string> current{base};
  std::function<void()> walk = [&]() {
    if (current.size() > 1) {
      nlohmann::json iqs = nlohmann::json::object();
      auto fit = features.find(current.back());
      if (fit != features.end()) {
        for (const std::string& c : fit->second) iqs[c] = iq(current, {current.back(), c});
      }
      paths.push_back({{"tables", current}, {"reach", reach(current)}, {"feature_iq", iqs}});
    }
    if (current.size() > max_hops) return;
    for (const std::string& next : adjacent[current.back()]) {
      if (std::find(current.begin(), current.end(), next) != current.end()) continue;
      current.push_back(next);
      walk();
      current.pop_back();
    }
  };
  walk();

  nlohmann::json planted = nlohmann::json::object();
  for (const auto& [f, b] : beta) planted[f.to_string()] = b;
  nlohmann::json out{{"base", base}, {"rows", rows}, {"edges", edge_list},
                     {"planted", planted}, {"paths", paths}};
  return out.dump(2) + "\n";
}

SynthDataset generate_dataset(const SynthSpec& spec) {
  if (spec.rows < 2) throw_data_error("synthetic base needs at least two rows");
  Rng rng(mix_seed(spec.seed, 1));

  std::vector<std::string> order{spec.base_name};
  std::map<std::string, const SynthTable*> by_name;
  for (const SynthTable& t : spec.tables) {
    if (t.name.empty() || t.name == spec.base_name || by_name.contains(t.name) ||
        t.name.find('.') != std::string::npos) {
      throw_data_error("synthetic table name '" + t.name + "' is invalid or repeated");
    }
    const std::string parent = t.parent.empty() ? spec.base_name : t.parent;
    if (parent != spec.base_name && !by_name.contains(parent)) {
      throw_data_error("synthetic table '" + t.name + "' must follow its parent '" + parent + "'");
    }
    for (double v : {t.match, t.link, t.distinct}) {
      if (!(v >= 0.0 && v <= 1.0)) throw_data_error("synthetic fractions must lie in [0, 1]");
    }
    if (t.distinct <= 0.0) throw_data_error("synthetic distinct fraction must be positive");
    by_name[t.name] = &t;
    order.push_back(t.name);
  }

  GroundTruth truth;
  truth.rows = spec.rows;
  truth.base = spec.base_name;
  truth.max_hops = spec.ground_truth_hops;
  std::size_t next_entity = spec.rows;
  std::map<std::string, std::vector<std::size_t>> distinct;  // sorted entity lists
  std::map<std::string, std::vector<std::size_t>> row_entity;

  {
    std::vector<std::size_t> base(spec.rows);
    std::iota(base.begin(), base.end(), 0);
    distinct[spec.base_name] = base;
    row_entity[spec.base_name] = base;
  }
  std::vector<Edge> edges;
  for (const SynthTable& t : spec.tables) {
    const std::string parent = t.parent.empty() ? spec.base_name : t.parent;
    const std::size_t rows = t.rows == 0 ? spec.rows : t.rows;
    const auto d = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t.distinct * static_cast<double>(rows))));
    const auto from_parent = static_cast<std::size_t>(std::llround(t.match * static_cast<double>(d)));
    if (from_parent > distinct[parent].size()) {
      throw_data_error("synthetic table '" + t.name + "' needs " + std::to_string(from_parent) +
                       " parent entities but '" + parent + "' has " +
                       std::to_string(distinct[parent].size()));
    }
    std::vector<std::size_t> ents = sample_without_replacement(distinct[parent], from_parent, rng);
    while (ents.size() < d) ents.push_back(next_entity++);
    std::sort(ents.begin(), ents.end());
    std::vector<std::size_t> rows_e = ents;
    while (rows_e.size() < rows) rows_e.push_back(ents[rng.below(ents.size())]);
    rng.shuffle(rows_e);
    distinct[t.name] = ents;
    row_entity[t.name] = rows_e;
    edges.push_back({parent, t.name, t.link});
  }
  for (const SynthCrossEdge& c : spec.cross_edges) {
    if (!distinct.contains(c.left) || !distinct.contains(c.right) || c.left == c.right) {
      throw_data_error("synthetic cross edge " + c.left + "-" + c.right + " is invalid");
    }
    for (const Edge& e : edges) {
      if ((e.left == c.left && e.right == c.right) || (e.left == c.right && e.right == c.left)) {
        throw_data_error("synthetic cross edge duplicates " + c.left + "-" + c.right);
      }
    }
    edges.push_back({c.left, c.right, c.link});
  }
  for (const auto& [name, ents] : distinct) truth.entities[name] = {ents.begin(), ents.end()};

  std::map<std::string, std::vector<Column>> columns;
  // Key columns: the right side is always real; the left side keeps a link
  // fraction of its entities and dangles the rest.
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    const std::string key = "k_" + e.left + "_" + e.right;
    const auto kept = static_cast<std::size_t>(std::llround(e.link * static_cast<double>(distinct[e.left].size())));
    const auto linked = sample_without_replacement(distinct[e.left], kept, rng);
    const std::set<std::size_t> left_real(linked.begin(), linked.end());
    truth.real_keys[{i, e.left}] = left_real;
    truth.real_keys[{i, e.right}] = truth.entities[e.right];

    std::vector<Cell> left_cells;
    for (std::size_t ent : row_entity[e.left]) {
      left_cells.emplace_back(left_real.contains(ent) ? entity_id(ent)
                                                      : "x" + std::to_string(i) + "_" + std::to_string(ent));
    }
    std::vector<Cell> right_cells;
    for (std::size_t ent : row_entity[e.right]) right_cells.emplace_back(entity_id(ent));
    columns[e.left].emplace_back(key, ColumnKind::key, std::move(left_cells));
    columns[e.right].emplace_back(key, ColumnKind::key, std::move(right_cells));

    std::size_t overlap = 0;
    for (std::size_t ent : truth.entities[e.right]) overlap += left_real.contains(ent) ? 1 : 0;
    const double right_keys = static_cast<double>(truth.entities[e.right].size());
    truth.edges.push_back({e.left, e.right, key, right_keys > 0 ? static_cast<double>(overlap) / right_keys : 0.0});
  }

  // Per-entity values; every entity gets the same draw wherever it appears.
  auto entity_normal = [&](std::uint64_t stream, std::size_t ent) {
    Rng r(mix_seed(mix_seed(spec.seed, stream), ent));
    return r.normal();
  };

  std::vector<double> latent(spec.rows, 0.0);
  for (std::size_t b = 0; b < spec.base_features; ++b) {
    std::vector<Cell> cells;
    for (std::size_t ent = 0; ent < spec.rows; ++ent) {
      const double v = entity_normal(1000 + b, ent);
      latent[ent] += spec.base_weight * v;
      cells.emplace_back(fmt_number(v));
    }
    columns[spec.base_name].emplace_back("b" + std::to_string(b), ColumnKind::numeric, std::move(cells));
  }

  std::map<std::string, std::size_t> planted_count;
  for (std::size_t p = 0; p < spec.planted.size(); ++p) {
    const SynthPlanted& pl = spec.planted[p];
    if (!distinct.contains(pl.table)) throw_data_error("planted feature on unknown table '" + pl.table + "'");
    if (!(pl.beta >= 0.0 && pl.beta <= 1.0) || !(pl.null_fraction >= 0.0 && pl.null_fraction <= 1.0)) {
      throw_data_error("planted feature parameters must lie in [0, 1]");
    }
    const std::string name = "p" + std::to_string(planted_count[pl.table]++);
    const FeatureRef ref{pl.table, name};
    truth.beta[ref] = pl.beta;
    for (std::size_t ent = 0; ent < spec.rows; ++ent) latent[ent] += pl.weight * entity_normal(2000 + p, ent);

    const auto& ents = distinct[pl.table];
    const auto n_null = static_cast<std::size_t>(std::llround(pl.null_fraction * static_cast<double>(ents.size())));
    const auto null_list = sample_without_replacement(ents, n_null, rng);
    const std::set<std::size_t> null_set(null_list.begin(), null_list.end());
    truth.nulls[ref] = null_set;

    std::vector<Cell> cells;
    for (std::size_t ent : row_entity[pl.table]) {
      if (null_set.contains(ent)) {
        cells.emplace_back(std::nullopt);
        continue;
      }
      const double v = pl.beta * entity_normal(2000 + p, ent) + (1.0 - pl.beta) * entity_normal(3000 + p, ent);
      cells.emplace_back(fmt_number(v));
    }
    columns[pl.table].emplace_back(name, ColumnKind::numeric, std::move(cells));
  }

  for (std::size_t ti = 0; ti < spec.tables.size(); ++ti) {
    const SynthTable& t = spec.tables[ti];
    for (std::size_t n = 0; n < t.noise_features; ++n) {
      std::vector<Cell> cells;
      for (std::size_t ent : row_entity[t.name]) {
        cells.emplace_back(fmt_number(entity_normal(4000 + 100 * ti + n, ent)));
      }
      columns[t.name].emplace_back("n" + std::to_string(n), ColumnKind::numeric, std::move(cells));
    }
    for (std::size_t n = 0; n < t.categorical_noise; ++n) {
      std::vector<Cell> cells;
      for (std::size_t ent : row_entity[t.name]) {
        Rng r(mix_seed(mix_seed(spec.seed, 5000 + 100 * ti + n), ent));
        cells.emplace_back("c" + std::to_string(r.below(5)));
      }
      columns[t.name].emplace_back("c" + std::to_string(n), ColumnKind::categorical, std::move(cells));
    }
  }

  {
    std::vector<Cell> cells;
    for (std::size_t ent = 0; ent < spec.rows; ++ent) {
      const double y = latent[ent] + spec.global_noise * entity_normal(6000, ent);
      cells.emplace_back(spec.task == TaskKind::classification ? std::string(y > 0.0 ? "1" : "0")
                                                               : fmt_number(y));
    }
    columns[spec.base_name].emplace_back("label",
                                         spec.task == TaskKind::classification ? ColumnKind::categorical
                                                                               : ColumnKind::numeric,
                                         std::move(cells));
  }

  SynthDataset data;
  for (const std::string& name : order) data.tables.emplace_back(name, std::move(columns[name]));
  data.truth = std::move(truth);

  Manifest& m = data.manifest;
  m.base.source.name = spec.base_name;
  m.base.source.path = spec.base_name + ".csv";
  m.base.target = "label";
  m.base.task = spec.task;
  if (spec.task == TaskKind::classification) m.base.source.kinds["label"] = ColumnKind::categorical;
  for (std::size_t i = 1; i < order.size(); ++i) {
    TableSource s;
    s.name = order[i];
    s.path = order[i] + ".csv";
    m.tables.push_back(std::move(s));
  }
  for (const SynthEdgeTruth& e : data.truth.edges) {
    m.edges.push_back({{e.left, e.key}, {e.right, e.key}});
  }
  m.infer_edges_by_name = false;
  return data;
}

void write_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Table& t : data.tables) write_csv(t, dir / (t.name() + ".csv"));
  write_text_file(dir / "manifest.json", manifest_to_json(data.manifest));
  write_text_file(dir / "ground_truth.json", data.truth.to_json());
}

}  // namespace augplan
