#include "augplan/join_stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "augplan/error.hpp"

namespace augplan {

std::string_view stat_name(std::size_t dim) {
  static constexpr std::array<std::string_view, kStatDims> names = {
      "transitivity", "variance", "entropy", "kl", "pearson", "mi"};
  return names.at(dim);
}

ColumnSample ColumnSample::of(const Column& column) {
  ColumnSample s;
  s.kind = column.kind();
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (column.is_null(r)) continue;
    s.texts.push_back(column.text(r));
    if (column.is_numeric()) s.numbers.push_back(column.number(r));
  }
  return s;
}

ColumnSample ColumnSample::of(const Column& column, std::span<const std::size_t> rows) {
  ColumnSample s;
  s.kind = column.kind();
  for (std::size_t r : rows) {
    if (column.is_null(r)) continue;
    s.texts.push_back(column.text(r));
    if (column.is_numeric()) s.numbers.push_back(column.number(r));
  }
  return s;
}

double transitivity(const Column& left_keys, const Column& right_keys) {
  std::unordered_set<std::string> left;
  for (std::size_t r = 0; r < left_keys.size(); ++r) {
    if (!left_keys.is_null(r)) left.insert(left_keys.text(r));
  }
  std::unordered_set<std::string> right;
  for (std::size_t r = 0; r < right_keys.size(); ++r) {
    if (!right_keys.is_null(r)) right.insert(right_keys.text(r));
  }
  if (right.empty()) {
    throw_data_error("transitivity: column '" + right_keys.name() + "' has no non-null keys");
  }
  std::size_t shared = 0;
  for (const auto& k : right) shared += left.contains(k) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(right.size());
}

double path_transitivity(std::span<const double> per_edge) {
  double product = 1.0;
  for (double t : per_edge) product *= t;
  return product;
}

std::vector<double> frequency_rank_encode(std::span<const std::string> values) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::vector<std::pair<std::string_view, std::size_t>> order(counts.begin(), counts.end());
  // std::map iteration is already value-ascending, so a stable sort on count
  // leaves ties in lexicographic order.
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<std::string_view, double> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i].first] = static_cast<double>(i);
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(rank[v]);
  return out;
}

double variance(std::span<const double> values) {
  if (values.empty()) throw_data_error("variance of an empty column");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(values.size());
}

double variance(const ColumnSample& sample) {
  if (sample.empty()) throw_data_error("variance of an all-null column");
  if (sample.kind == ColumnKind::numeric) return variance(std::span<const double>(sample.numbers));
  const auto encoded = frequency_rank_encode(sample.texts);
  return variance(std::span<const double>(encoded));
}

namespace {

template <class Counts>
double clamped_entropy(const Counts& counts, std::size_t total) {
  double acc = 0.0;
  for (const auto& [value, count] : counts) {
    const double p = static_cast<double>(count) / static_cast<double>(total);
    acc -= p * std::log(std::max(1.0 - p, kEntropyClamp));
  }
  return acc;
}

std::size_t bin_of(double x, double lo, double hi) {
  if (!(hi > lo)) return 0;
  const double t = (x - lo) / (hi - lo) * static_cast<double>(kHistogramBins);
  if (t <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(t), kHistogramBins - 1);
}

}  // namespace

double entropy(const ColumnSample& sample) {
  if (sample.empty()) return 0.0;
  if (sample.kind == ColumnKind::numeric) {
    std::map<double, std::size_t> counts;
    for (double v : sample.numbers) ++counts[v];
    return clamped_entropy(counts, sample.size());
  }
  std::map<std::string_view, std::size_t> counts;
  for (const auto& v : sample.texts) ++counts[v];
  return clamped_entropy(counts, sample.size());
}

double kl_divergence(const ColumnSample& before, const ColumnSample& after) {
  if (before.empty()) throw_data_error("KL divergence with an empty before-column");
  std::vector<double> pb;
  std::vector<double> qa;
  if (before.kind == ColumnKind::numeric && after.numbers.size() == after.texts.size()) {
    const auto [lo_it, hi_it] = std::minmax_element(before.numbers.begin(), before.numbers.end());
    std::vector<double> cb(kHistogramBins, 0.0);
    std::vector<double> ca(kHistogramBins, 0.0);
    for (double v : before.numbers) cb[bin_of(v, *lo_it, *hi_it)] += 1.0;
    for (double v : after.numbers) ca[bin_of(v, *lo_it, *hi_it)] += 1.0;
    pb = std::move(cb);
    qa = std::move(ca);
  } else {
    std::map<std::string_view, std::pair<double, double>> counts;
    for (const auto& v : before.texts) counts[v].first += 1.0;
    for (const auto& v : after.texts) counts[v].second += 1.0;
    for (const auto& [value, c] : counts) {
      pb.push_back(c.first);
      qa.push_back(c.second);
    }
  }
  const double k = static_cast<double>(pb.size());
  const double nb = static_cast<double>(before.size());
  const double na = static_cast<double>(after.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pb.size(); ++i) {
    const double p = (pb[i] + 1.0) / (nb + k);
    const double q = (qa[i] + 1.0) / (na + k);
    acc += p * std::log(p / q);
  }
  return std::max(acc, 0.0);
}

Correlation pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw_data_error("pearson: vectors must have equal length of at least 2");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0;
  double va = 0.0;
  double vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  // Relative threshold: frequency vectors of equal-count keys are constant
  // up to rounding.
  const double tiny = 1e-24 * n;
  if (va <= tiny || vb <= tiny) return Correlation{0.0, true};
  const double r = cov / std::sqrt(va * vb);
  return Correlation{std::clamp(r, -1.0, 1.0), false};
}

std::pair<std::vector<double>, std::vector<double>> aligned_frequencies(const Column& a,
                                                                        const Column& b) {
  std::map<std::string_view, std::pair<double, double>> counts;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a.is_null(r)) continue;
    counts[a.text(r)].first += 1.0;
    na += 1.0;
  }
  for (std::size_t r = 0; r < b.size(); ++r) {
    if (b.is_null(r)) continue;
    counts[b.text(r)].second += 1.0;
    nb += 1.0;
  }
  std::vector<double> fa;
  std::vector<double> fb;
  fa.reserve(counts.size());
  fb.reserve(counts.size());
  for (const auto& [value, c] : counts) {
    fa.push_back(na > 0 ? c.first / na : 0.0);
    fb.push_back(nb > 0 ? c.second / nb : 0.0);
  }
  return {std::move(fa), std::move(fb)};
}

std::vector<std::optional<std::size_t>> discretize(const Column& column) {
  std::vector<std::optional<std::size_t>> codes(column.size());
  if (column.is_numeric()) {
    double lo = 0.0;
    double hi = 0.0;
    bool any = false;
    for (std::size_t r = 0; r < column.size(); ++r) {
      if (column.is_null(r)) continue;
      const double v = column.number(r);
      if (!any) {
        lo = hi = v;
        any = true;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (std::size_t r = 0; r < column.size(); ++r) {
      if (!column.is_null(r)) codes[r] = bin_of(column.number(r), lo, hi);
    }
    return codes;
  }
  std::map<std::string_view, std::size_t> ids;
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (!column.is_null(r)) ids.emplace(column.text(r), 0);
  }
  std::size_t next = 0;
  for (auto& [value, id] : ids) id = next++;
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (!column.is_null(r)) codes[r] = ids[column.text(r)];
  }
  return codes;
}

double mutual_information(std::span<const std::size_t> x, std::span<const std::size_t> y) {
  if (x.size() != y.size()) throw_data_error("mutual information: unpaired inputs");
  if (x.empty()) throw_data_error("mutual information of empty input");
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> px;
  std::map<std::size_t, double> py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], y[i]}] += 1.0;
    px[x[i]] += 1.0;
    py[y[i]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (const auto& [cell, count] : joint) {
    const double pxy = count / n;
    const double denom = (px[cell.first] / n) * (py[cell.second] / n);
    acc += pxy * std::log(pxy / denom);
  }
  return std::max(acc, 0.0);
}

double mutual_information(const Column& x, const Column& y) {
  if (x.size() != y.size()) throw_data_error("mutual information: columns differ in length");
  const auto cx = discretize(x);
  const auto cy = discretize(y);
  std::vector<std::size_t> px;
  std::vector<std::size_t> py;
  for (std::size_t r = 0; r < cx.size(); ++r) {
    if (cx[r] && cy[r]) {
      px.push_back(*cx[r]);
      py.push_back(*cy[r]);
    }
  }
  return mutual_information(px, py);
}

StatVector Normalization::pre_transform(const StatVector& raw) {
  StatVector v = raw;
  v[kVariance] = std::log1p(std::max(v[kVariance], 0.0));
  v[kEntropy] = std::log1p(std::max(v[kEntropy], 0.0));
  return v;
}

Normalization Normalization::fit(std::span<const std::vector<StatVector>> raw_sequences) {
  Normalization n;
  bool any = false;
  for (const auto& seq : raw_sequences) {
    for (const StatVector& raw : seq) {
      const StatVector v = pre_transform(raw);
      for (std::size_t d = 0; d < kStatDims; ++d) {
        if (!any) {
          n.min[d] = v[d];
          n.max[d] = v[d];
        } else {
          n.min[d] = std::min(n.min[d], v[d]);
          n.max[d] = std::max(n.max[d], v[d]);
        }
      }
      any = true;
    }
  }
  return n;
}

StatVector Normalization::apply(const StatVector& raw) const {
  const StatVector v = pre_transform(raw);
  StatVector out{};
  for (std::size_t d = 0; d < kStatDims; ++d) {
    const double span = max[d] - min[d];
    out[d] = span > 0.0 ? std::clamp((v[d] - min[d]) / span, 0.0, 1.0) : 0.0;
  }
  return out;
}

StatVector StatsEngine::edge_feature_vector(const JoinStep& step,
                                            const std::string& carry_column) const {
  auto key = std::make_tuple(step.from, step.to, carry_column);
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  const JoinGraph& g = graph();
  const Column& left_keys = g.table(step.from.table).column(step.from.column);
  const Table& right = g.table(step.to.table);
  const Column& right_keys = right.column(step.to.column);
  const Column& carry = right.column(carry_column);

  StatVector v{};
  bool right_has_keys = right_keys.size() > right_keys.null_count();
  v[kTransitivity] = right_has_keys ? transitivity(left_keys, right_keys) : 0.0;

  const KeyIndex& index = joins_->index(step.to);
  RowSet matched;
  for (std::size_t r = 0; r < left_keys.size(); ++r) {
    if (left_keys.is_null(r)) continue;
    if (auto hit = index.find(left_keys.text(r))) matched.push_back(*hit);
  }
  const ColumnSample after = ColumnSample::of(carry, matched);
  const ColumnSample before = ColumnSample::of(carry);
  v[kVariance] = after.empty() ? 0.0 : variance(after);
  v[kEntropy] = entropy(after);
  v[kKl] = before.empty() ? 0.0 : kl_divergence(before, after);

  const auto [fa, fb] = aligned_frequencies(left_keys, right_keys);
  v[kPearson] = fa.size() >= 2 ? pearson(fa, fb).value : 0.0;

  const auto cx = discretize(right_keys);
  const auto cy = discretize(carry);
  std::vector<std::size_t> px;
  std::vector<std::size_t> py;
  for (std::size_t r = 0; r < cx.size(); ++r) {
    if (cx[r] && cy[r]) {
      px.push_back(*cx[r]);
      py.push_back(*cy[r]);
    }
  }
  v[kMi] = px.empty() ? 0.0 : mutual_information(px, py);

  std::lock_guard lock(mutex_);
  cache_.emplace(key, v);
  return v;
}

std::vector<StatVector> StatsEngine::raw_sequence(const JoinPath& path,
                                                  const std::optional<FeatureRef>& feature) const {
  const auto steps = path.steps(graph());
  std::vector<StatVector> out;
  out.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::string carry;
    if (i + 1 < steps.size()) {
      carry = steps[i + 1].from.column;
    } else if (feature) {
      if (feature->table != steps[i].to.table) {
        throw_data_error("feature '" + feature->to_string() + "' is not on the path terminal");
      }
      carry = feature->column;
    } else {
      carry = steps[i].to.column;
    }
    out.push_back(edge_feature_vector(steps[i], carry));
  }
  return out;
}

PathFeatureSequence StatsEngine::path_feature_sequence(const JoinPath& path,
                                                       const std::optional<FeatureRef>& feature,
                                                       const Normalization& normalization) const {
  PathFeatureSequence seq;
  seq.raw = raw_sequence(path, feature);
  seq.steps.reserve(seq.raw.size());
  for (const StatVector& r : seq.raw) seq.steps.push_back(normalization.apply(r));
  return seq;
}

std::size_t StatsEngine::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::string stats_to_json(const StatVector& stats) {
  nlohmann::json node;
  for (std::size_t d = 0; d < kStatDims; ++d) node[std::string(stat_name(d))] = stats[d];
  return node.dump();
}

}  // namespace augplan
