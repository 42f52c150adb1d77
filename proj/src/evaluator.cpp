#include "augplan/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "augplan/error.hpp"

namespace augplan {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::accuracy: return "accuracy";
    case Metric::f1: return "f1";
    case Metric::neg_mae: return "neg_mae";
    case Metric::neg_mse: return "neg_mse";
  }
  return "unknown";
}

Metric parse_metric(std::string_view text) {
  if (text == "accuracy") return Metric::accuracy;
  if (text == "f1") return Metric::f1;
  if (text == "neg_mae") return Metric::neg_mae;
  if (text == "neg_mse") return Metric::neg_mse;
  throw_usage_error("unknown metric '" + std::string(text) + "'");
}

Metric default_metric(TaskKind task) {
  return task == TaskKind::classification ? Metric::accuracy : Metric::neg_mse;
}

void TaskSpec::validate() const {
  const bool classification_metric = metric == Metric::accuracy || metric == Metric::f1;
  if (classification_metric != (task == TaskKind::classification)) {
    throw_usage_error("metric '" + std::string(to_string(metric)) + "' does not fit a " +
                      std::string(to_string(task)) + " task");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw_usage_error("test fraction must lie in (0, 1)");
  }
}

std::string UtilityScore::to_json() const {
  nlohmann::json node{{"metric", to_string(metric)},
                      {"value", value},
                      {"n_train", n_train},
                      {"n_eval", n_eval},
                      {"seed", split_seed}};
  return node.dump();
}

double accuracy(std::span<const std::string> truth, std::span<const std::string> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw_data_error("accuracy: inputs must be non-empty and paired");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double f1_score(std::span<const std::string> truth, std::span<const std::string> predicted,
                const std::string& positive) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw_data_error("f1: inputs must be non-empty and paired");
  }
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive;
    const bool p = predicted[i] == positive;
    tp += (t && p) ? 1.0 : 0.0;
    fp += (!t && p) ? 1.0 : 0.0;
    fn += (t && !p) ? 1.0 : 0.0;
  }
  if (tp == 0.0) return 0.0;
  return tp / (tp + 0.5 * (fp + fn));
}

double mean_absolute_error(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw_data_error("mae: inputs must be non-empty and paired");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += std::abs(truth[i] - predicted[i]);
  return acc / static_cast<double>(truth.size());
}

double mean_squared_error(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw_data_error("mse: inputs must be non-empty and paired");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    acc += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  }
  return acc / static_cast<double>(truth.size());
}

SplitRows split_rows(const Table& table, const RowSet& rows, const TaskSpec& spec) {
  const Column& target = table.column(spec.target);
  auto rank = [&](std::size_t r) { return mix_seed(spec.split_seed, r); };
  auto by_rank = [&](std::size_t a, std::size_t b) {
    const auto ra = rank(a);
    const auto rb = rank(b);
    return ra != rb ? ra < rb : a < b;
  };
  std::map<std::string, RowSet> groups;
  for (std::size_t r : rows) {
    if (target.is_null(r)) continue;
    const std::string key = spec.task == TaskKind::classification ? target.text(r) : std::string();
    groups[key].push_back(r);
  }
  SplitRows split;
  for (auto& [label, members] : groups) {
    std::sort(members.begin(), members.end(), by_rank);
    auto n_test = static_cast<std::size_t>(
        std::llround(spec.test_fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < n_test ? split.test : split.train).push_back(members[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

struct EncodedFeature {
  std::size_t column = 0;
  bool numeric = false;
  double mean = 0.0;
  double scale = 1.0;
  std::vector<std::string> categories;  // one-hot slots; an "other" slot follows
  std::string mode;
  bool indicator = false;
  std::size_t offset = 0;
  std::size_t width = 0;
};

class Encoder {
 public:
  Encoder(const Table& table, const RowSet& view, const RowSet& train, const std::string& target,
          std::size_t top_categories) {
    const auto& cols = table.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const Column& col = cols[c];
      if (col.name() == target || col.kind() == ColumnKind::key) continue;
      std::size_t present = 0;
      for (std::size_t r : view) present += col.is_null(r) ? 0 : 1;
      if (present == 0) continue;

      EncodedFeature f;
      f.column = c;
      f.numeric = col.is_numeric();
      f.indicator = present < view.size();
      f.offset = dimension_;
      if (f.numeric) {
        double sum = 0.0;
        double n = 0.0;
        for (std::size_t r : train) {
          if (col.is_null(r)) continue;
          sum += col.number(r);
          n += 1.0;
        }
        f.mean = n > 0 ? sum / n : 0.0;
        double ss = 0.0;
        for (std::size_t r : train) {
          if (!col.is_null(r)) ss += (col.number(r) - f.mean) * (col.number(r) - f.mean);
        }
        const double sd = n > 0 ? std::sqrt(ss / n) : 0.0;
        f.scale = sd > 1e-12 ? sd : 1.0;
        f.width = 1;
      } else {
        std::map<std::string, std::size_t> counts;
        for (std::size_t r : train) {
          if (!col.is_null(r)) ++counts[col.text(r)];
        }
        std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
        std::stable_sort(order.begin(), order.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        for (std::size_t i = 0; i < order.size() && i < top_categories; ++i) {
          f.categories.push_back(order[i].first);
        }
        if (!order.empty()) f.mode = order.front().first;
        f.width = f.categories.size() + 1;
      }
      if (f.indicator) f.width += 1;
      dimension_ += f.width;
      features_.push_back(std::move(f));
    }
  }

  std::size_t dimension() const { return dimension_; }

  void encode(const Table& table, std::size_t row, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const EncodedFeature& f : features_) {
      const Column& col = table.columns()[f.column];
      const bool null = col.is_null(row);
      if (f.numeric) {
        out[f.offset] = null ? 0.0 : (col.number(row) - f.mean) / f.scale;
      } else {
        const std::string* value = null ? (f.mode.empty() ? nullptr : &f.mode) : &col.text(row);
        if (value) {
          auto it = std::find(f.categories.begin(), f.categories.end(), *value);
          const auto slot = static_cast<std::size_t>(it - f.categories.begin());
          out[f.offset + slot] = 1.0;
        }
      }
      if (f.indicator && null) out[f.offset + f.width - 1] = 1.0;
    }
  }

 private:
  std::vector<EncodedFeature> features_;
  std::size_t dimension_ = 0;
};

class LinearPredictor final : public Predictor {
 public:
  LinearPredictor(Encoder encoder, std::vector<std::string> classes, std::vector<double> weights,
                  double target_mean, double target_scale)
      : encoder_(std::move(encoder)),
        classes_(std::move(classes)),
        weights_(std::move(weights)),
        target_mean_(target_mean),
        target_scale_(target_scale) {}

  std::string predict_label(const Table& table, std::size_t row) const override {
    const auto scores = raw_scores(table, row);
    const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
    return classes_[static_cast<std::size_t>(best)];
  }

  double predict_value(const Table& table, std::size_t row) const override {
    return target_mean_ + target_scale_ * raw_scores(table, row).front();
  }

 private:
  std::vector<double> raw_scores(const Table& table, std::size_t row) const {
    const std::size_t d = encoder_.dimension();
    std::vector<double> x(d);
    encoder_.encode(table, row, x);
    const std::size_t outputs = std::max<std::size_t>(classes_.size(), 1);
    std::vector<double> s(outputs, 0.0);
    for (std::size_t k = 0; k < outputs; ++k) {
      const double* w = weights_.data() + k * (d + 1);
      double acc = w[d];
      for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
      s[k] = acc;
    }
    return s;
  }

  Encoder encoder_;
  std::vector<std::string> classes_;
  std::vector<double> weights_;
  double target_mean_;
  double target_scale_;
};

}  // namespace

std::unique_ptr<Predictor> LinearLearner::fit(const Table& table, const RowSet& view,
                                              const RowSet& train, const TaskSpec& spec) const {
  const Column& target = table.column(spec.target);
  Encoder encoder(table, view, train, spec.target, config_.top_categories);
  const std::size_t d = encoder.dimension();
  const std::size_t n = train.size();
  if (n == 0) throw_data_error("no training rows");

  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    encoder.encode(table, train[i], std::span<double>(x.data() + i * d, d));
  }

  const double lr = config_.learning_rate;
  const double l2 = config_.l2;
  if (spec.task == TaskKind::classification) {
    std::set<std::string> labels;
    for (std::size_t r : train) labels.insert(target.text(r));
    if (labels.size() < 2) throw_data_error("degenerate target: a single class in the training split");
    std::vector<std::string> classes(labels.begin(), labels.end());
    const std::size_t k = classes.size();
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<std::size_t>(
          std::lower_bound(classes.begin(), classes.end(), target.text(train[i])) - classes.begin());
    }
    std::vector<double> w(k * (d + 1), 0.0);
    std::vector<double> grad(w.size());
    std::vector<double> p(k);
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data() + i * d;
        double top = -1e300;
        for (std::size_t c = 0; c < k; ++c) {
          const double* wc = w.data() + c * (d + 1);
          double acc = wc[d];
          for (std::size_t j = 0; j < d; ++j) acc += wc[j] * xi[j];
          p[c] = acc;
          top = std::max(top, acc);
        }
        double z = 0.0;
        for (double& v : p) {
          v = std::exp(v - top);
          z += v;
        }
        for (std::size_t c = 0; c < k; ++c) {
          const double err = p[c] / z - (c == y[i] ? 1.0 : 0.0);
          double* gc = grad.data() + c * (d + 1);
          for (std::size_t j = 0; j < d; ++j) gc[j] += err * xi[j];
          gc[d] += err;
        }
      }
      for (std::size_t c = 0; c < k; ++c) {
        double* wc = w.data() + c * (d + 1);
        const double* gc = grad.data() + c * (d + 1);
        for (std::size_t j = 0; j < d; ++j) wc[j] -= lr * (gc[j] / static_cast<double>(n) + l2 * wc[j]);
        wc[d] -= lr * gc[d] / static_cast<double>(n);
      }
    }
    return std::make_unique<LinearPredictor>(std::move(encoder), std::move(classes), std::move(w),
                                             0.0, 1.0);
  }

  if (!target.is_numeric()) throw_data_error("regression target '" + spec.target + "' is not numeric");
  double mean = 0.0;
  for (std::size_t r : train) mean += target.number(r);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t r : train) ss += (target.number(r) - mean) * (target.number(r) - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  const double scale = sd > 1e-12 ? sd : 1.0;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (target.number(train[i]) - mean) / scale;

  std::vector<double> w(d + 1, 0.0);
  std::vector<double> grad(d + 1);
  const double step = std::min(lr, 0.2);
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = x.data() + i * d;
      double pred = w[d];
      for (std::size_t j = 0; j < d; ++j) pred += w[j] * xi[j];
      const double err = pred - y[i];
      for (std::size_t j = 0; j < d; ++j) grad[j] += err * xi[j];
      grad[d] += err;
    }
    for (std::size_t j = 0; j < d; ++j) w[j] -= step * (grad[j] / static_cast<double>(n) + l2 * w[j]);
    w[d] -= step * grad[d] / static_cast<double>(n);
  }
  return std::make_unique<LinearPredictor>(std::move(encoder), std::vector<std::string>{},
                                           std::move(w), mean, scale);
}

const Learner& default_learner() {
  static const LinearLearner learner;
  return learner;
}

RowSet all_rows(const Table& table) {
  RowSet rows(table.row_count());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  return rows;
}

namespace {

std::string positive_label(const Column& target, const RowSet& rows) {
  std::set<std::string> labels;
  for (std::size_t r : rows) {
    if (!target.is_null(r)) labels.insert(target.text(r));
  }
  if (labels.size() != 2) throw_data_error("F1 needs exactly two classes");
  return *labels.rbegin();
}

}  // namespace

double score_predictor(const Predictor& predictor, const Table& table, const RowSet& rows,
                       const TaskSpec& spec) {
  const Column& target = table.column(spec.target);
  if (spec.task == TaskKind::classification) {
    std::vector<std::string> truth;
    std::vector<std::string> pred;
    for (std::size_t r : rows) {
      truth.push_back(target.text(r));
      pred.push_back(predictor.predict_label(table, r));
    }
    if (spec.metric == Metric::f1) return f1_score(truth, pred, positive_label(target, all_rows(table)));
    return accuracy(truth, pred);
  }
  std::vector<double> truth;
  std::vector<double> pred;
  for (std::size_t r : rows) {
    truth.push_back(target.number(r));
    pred.push_back(predictor.predict_value(table, r));
  }
  if (spec.metric == Metric::neg_mae) return -mean_absolute_error(truth, pred);
  return -mean_squared_error(truth, pred);
}

UtilityScore utility_score(const Table& table, const RowSet& rows, const TaskSpec& spec,
                           const Learner& learner) {
  spec.validate();
  if (!table.has_column(spec.target)) {
    throw_data_error("table '" + table.name() + "' has no target column '" + spec.target + "'");
  }
  RowSet usable;
  const Column& target = table.column(spec.target);
  for (std::size_t r : rows) {
    if (!target.is_null(r)) usable.push_back(r);
  }
  if (usable.size() < kMinEvaluationRows) {
    throw_data_error("too few rows to evaluate (" + std::to_string(usable.size()) + ")");
  }
  if (spec.metric == Metric::f1) positive_label(target, usable);
  const SplitRows split = split_rows(table, usable, spec);
  if (split.test.empty()) throw_data_error("empty evaluation split");
  const auto predictor = learner.fit(table, usable, split.train, spec);
  UtilityScore score;
  score.value = score_predictor(*predictor, table, split.test, spec);
  score.metric = spec.metric;
  score.n_train = split.train.size();
  score.n_eval = split.test.size();
  score.split_seed = spec.split_seed;
  return score;
}

UtilityScore utility_score(const Table& table, const TaskSpec& spec, const Learner& learner) {
  return utility_score(table, all_rows(table), spec, learner);
}

double utility_gain(const Table& augmented, const UtilityScore& base_score, const TaskSpec& spec,
                    const Learner& learner) {
  if (base_score.metric != spec.metric || base_score.split_seed != spec.split_seed) {
    throw_data_error("utility gain: base score uses a different metric or split seed");
  }
  return utility_score(augmented, spec, learner).value - base_score.value;
}

double utility_gain(const AugmentedTable& aug, const UtilityScore& base_score,
                    const TaskSpec& spec, const Learner& learner) {
  return utility_gain(aug.to_table(), base_score, spec, learner);
}

double compute_fi(const std::vector<AugmentedTable>& observed, const UtilityScore& base_score,
                  const TaskSpec& spec, const Learner& learner) {
  if (base_score.metric != spec.metric || base_score.split_seed != spec.split_seed) {
    throw_data_error("feature importance: base score uses a different metric or split seed");
  }
  bool any = false;
  double best = 0.0;
  for (const AugmentedTable& aug : observed) {
    if (aug.non_na_index.size() < kMinEvaluationRows) continue;
    double gain = 0.0;
    try {
      gain = utility_score(aug.to_table(), aug.non_na_index, spec, learner).value - base_score.value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::data) throw;
      continue;
    }
    if (!any || gain > best) best = gain;
    any = true;
  }
  if (!any) throw_data_error("feature importance unestimable: no observation has enough non-NA rows");
  return std::clamp(best, -1.0, 1.0);
}

std::size_t hypergeometric_draw(std::size_t population, std::size_t successes, std::size_t draws,
                                Rng& rng) {
  if (successes > population || draws > population) {
    throw_data_error("hypergeometric draw: counts exceed the population");
  }
  std::size_t remaining = population;
  std::size_t good = successes;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    if (rng.below(remaining) < good) {
      ++hits;
      --good;
    }
    --remaining;
  }
  return hits;
}

double subset_score_error(std::size_t population, std::size_t successes, std::size_t draws,
                          Rng& rng) {
  const std::size_t m = hypergeometric_draw(population, successes, draws, rng);
  const double big_n = static_cast<double>(population);
  const double n = static_cast<double>(draws);
  if (draws == 0) return 0.0;
  return (n / big_n) * (static_cast<double>(m) / n - static_cast<double>(successes) / big_n);
}

}  // namespace augplan
