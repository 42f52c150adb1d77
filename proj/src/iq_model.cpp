#include "augplan/iq_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <json.hpp>

#include "augplan/error.hpp"

namespace augplan {

namespace {

using Hidden = std::array<double, IqModel::kHidden>;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct StepCache {
  std::array<double, IqModel::kConcat> input{};  // [x; h_prev]
  Hidden c_prev{};
  Hidden i{}, f{}, g{}, o{};
  Hidden c{};
  Hidden tanh_c{};
  Hidden h{};
};

constexpr std::size_t kBiasOffset = IqModel::kWeightSize;
constexpr std::size_t kHeadOffset = kBiasOffset + IqModel::kGates;
constexpr std::size_t kHeadBias = kHeadOffset + IqModel::kHidden;

/// Runs the recurrence, returning the sigmoid output and filling `cache`.
double run(std::span<const double> p, std::span<const StatVector> steps,
           std::vector<StepCache>& cache) {
  constexpr std::size_t H = IqModel::kHidden;
  constexpr std::size_t I = IqModel::kInput;
  constexpr std::size_t C = IqModel::kConcat;
  if (steps.empty()) throw_data_error("IQ model needs at least one step");
  cache.assign(steps.size(), StepCache{});
  Hidden h{};
  Hidden c{};
  for (std::size_t t = 0; t < steps.size(); ++t) {
    StepCache& s = cache[t];
    for (std::size_t k = 0; k < I; ++k) s.input[k] = steps[t][k];
    for (std::size_t k = 0; k < H; ++k) s.input[I + k] = h[k];
    s.c_prev = c;
    std::array<double, IqModel::kGates> z{};
    for (std::size_t r = 0; r < IqModel::kGates; ++r) {
      const double* row = p.data() + r * C;
      double acc = p[kBiasOffset + r];
      for (std::size_t k = 0; k < C; ++k) acc += row[k] * s.input[k];
      z[r] = acc;
    }
    for (std::size_t k = 0; k < H; ++k) {
      s.i[k] = sigmoid(z[k]);
      s.f[k] = sigmoid(z[H + k]);
      s.g[k] = std::tanh(z[2 * H + k]);
      s.o[k] = sigmoid(z[3 * H + k]);
      s.c[k] = s.f[k] * c[k] + s.i[k] * s.g[k];
      s.tanh_c[k] = std::tanh(s.c[k]);
      s.h[k] = s.o[k] * s.tanh_c[k];
    }
    h = s.h;
    c = s.c;
  }
  double out = p[kHeadBias];
  for (std::size_t k = 0; k < H; ++k) out += p[kHeadOffset + k] * h[k];
  return sigmoid(out);
}

}  // namespace

IqModel IqModel::initialized(std::uint64_t seed) {
  IqModel model;
  model.seed_ = seed;
  Rng rng(seed);
  for (double& w : model.params_) w = rng.uniform(-kInitRange, kInitRange);
  return model;
}

double IqModel::forward(std::span<const StatVector> steps) const {
  std::vector<StepCache> cache;
  return run(params_, steps, cache);
}

double IqModel::predict(std::span<const StatVector> steps) const {
  return std::clamp(forward(steps), 1e-12, 1.0 - 1e-12);
}

double IqModel::backward(std::span<const StatVector> steps, double coef,
                         std::optional<double> label, std::vector<double>* grad,
                         std::vector<StatVector>* dinputs) const {
  constexpr std::size_t H = kHidden;
  constexpr std::size_t I = kInput;
  constexpr std::size_t C = kConcat;
  std::vector<StepCache> cache;
  const double y = run(params_, steps, cache);
  const double dloss_dy = label ? coef * (y - *label) : coef;
  const double dz_out = dloss_dy * y * (1.0 - y);

  const Hidden& h_last = cache.back().h;
  if (grad) {
    for (std::size_t k = 0; k < H; ++k) (*grad)[kHeadOffset + k] += dz_out * h_last[k];
    (*grad)[kHeadBias] += dz_out;
  }
  if (dinputs) dinputs->assign(steps.size(), StatVector{});

  Hidden dh{};
  for (std::size_t k = 0; k < H; ++k) dh[k] = dz_out * params_[kHeadOffset + k];
  Hidden dc{};
  for (std::size_t t = steps.size(); t-- > 0;) {
    const StepCache& s = cache[t];
    std::array<double, kGates> dz{};
    for (std::size_t k = 0; k < H; ++k) {
      const double d_o = dh[k] * s.tanh_c[k];
      dc[k] += dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
      const double d_i = dc[k] * s.g[k];
      const double d_g = dc[k] * s.i[k];
      const double d_f = dc[k] * s.c_prev[k];
      dz[k] = d_i * s.i[k] * (1.0 - s.i[k]);
      dz[H + k] = d_f * s.f[k] * (1.0 - s.f[k]);
      dz[2 * H + k] = d_g * (1.0 - s.g[k] * s.g[k]);
      dz[3 * H + k] = d_o * s.o[k] * (1.0 - s.o[k]);
      dc[k] *= s.f[k];
    }
    std::array<double, C> dinput{};
    for (std::size_t r = 0; r < kGates; ++r) {
      const double d = dz[r];
      if (d == 0.0) continue;
      const double* row = params_.data() + r * C;
      if (grad) {
        double* grow = grad->data() + r * C;
        for (std::size_t k = 0; k < C; ++k) grow[k] += d * s.input[k];
        (*grad)[kBiasOffset + r] += d;
      }
      for (std::size_t k = 0; k < C; ++k) dinput[k] += row[k] * d;
    }
    if (dinputs) {
      for (std::size_t k = 0; k < I; ++k) (*dinputs)[t][k] = dinput[k];
    }
    for (std::size_t k = 0; k < H; ++k) dh[k] = dinput[I + k];
  }
  return y;
}

double IqModel::loss(const std::vector<std::vector<StatVector>>& sequences,
                     std::span<const double> labels, std::vector<double>* grad) const {
  if (sequences.size() != labels.size() || sequences.empty()) {
    throw_data_error("IQ loss: sequences and labels must be non-empty and paired");
  }
  if (grad) grad->assign(kParamCount, 0.0);
  const double n = static_cast<double>(sequences.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (grad) {
      const double diff = backward(sequences[i], 2.0 / n, labels[i], grad, nullptr) - labels[i];
      total += diff * diff;
    } else {
      const double diff = forward(sequences[i]) - labels[i];
      total += diff * diff;
    }
  }
  return total / n;
}

std::vector<StatVector> IqModel::input_gradient(std::span<const StatVector> steps) const {
  std::vector<StatVector> d;
  backward(steps, 1.0, std::nullopt, nullptr, &d);
  return d;
}

std::string IqModel::to_json() const {
  using nlohmann::json;
  json root;
  root["architecture"] = {{"cell", "lstm"},
                          {"input", kInput},
                          {"hidden", kHidden},
                          {"layers", 1},
                          {"gate_order", "i,f,g,o"},
                          {"output", "sigmoid"}};
  std::span<const double> p = params_;
  root["gate_weights"] = std::vector<double>(p.begin(), p.begin() + kWeightSize);
  root["gate_bias"] = std::vector<double>(p.begin() + kBiasOffset, p.begin() + kHeadOffset);
  root["head_weights"] = std::vector<double>(p.begin() + kHeadOffset, p.begin() + kHeadBias);
  root["head_bias"] = p[kHeadBias];
  json norm = json::array();
  for (std::size_t d = 0; d < kStatDims; ++d) {
    norm.push_back({{"stat", stat_name(d)}, {"min", normalization_.min[d]}, {"max", normalization_.max[d]}});
  }
  root["normalization"] = norm;
  root["seed"] = seed_;
  root["training"] = {{"lr", training_.lr},
                      {"epochs", training_.epochs},
                      {"best_epoch", training_.best_epoch},
                      {"best_mse", training_.best_mse},
                      {"samples", training_.samples}};
  return root.dump(2) + "\n";
}

IqModel IqModel::from_json(std::string_view text) {
  using nlohmann::json;
  IqModel model;
  try {
    const json root = json::parse(text);
    const json& arch = root.at("architecture");
    if (arch.at("input").get<std::size_t>() != kInput || arch.at("hidden").get<std::size_t>() != kHidden) {
      throw_data_error("IQ model: architecture mismatch");
    }
    auto copy = [&](const char* key, std::size_t offset, std::size_t count) {
      const auto values = root.at(key).get<std::vector<double>>();
      if (values.size() != count) throw_data_error(std::string("IQ model: bad length for ") + key);
      std::copy(values.begin(), values.end(), model.params_.begin() + static_cast<std::ptrdiff_t>(offset));
    };
    copy("gate_weights", 0, kWeightSize);
    copy("gate_bias", kBiasOffset, kGates);
    copy("head_weights", kHeadOffset, kHidden);
    model.params_[kHeadBias] = root.at("head_bias").get<double>();
    const json& norm = root.at("normalization");
    if (norm.size() != kStatDims) throw_data_error("IQ model: bad normalization length");
    for (std::size_t d = 0; d < kStatDims; ++d) {
      model.normalization_.min[d] = norm[d].at("min").get<double>();
      model.normalization_.max[d] = norm[d].at("max").get<double>();
    }
    model.seed_ = root.at("seed").get<std::uint64_t>();
    const json& tr = root.at("training");
    model.training_ = TrainingInfo{tr.at("lr").get<double>(), tr.at("epochs").get<std::size_t>(),
                                   tr.at("best_epoch").get<std::size_t>(),
                                   tr.at("best_mse").get<double>(), tr.at("samples").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw_data_error(std::string("IQ model: malformed JSON: ") + e.what());
  }
  for (double v : model.params_) {
    if (!std::isfinite(v)) throw_data_error("IQ model: non-finite parameter");
  }
  return model;
}

std::vector<StatVector> normalized_steps(const IqModel& model, const std::vector<StatVector>& raw) {
  std::vector<StatVector> out;
  out.reserve(raw.size());
  for (const StatVector& r : raw) out.push_back(model.normalization().apply(r));
  return out;
}

IqModel train_iq_model(const std::vector<IqSample>& samples, const IqHyper& hyper) {
  if (samples.empty()) throw_data_error("IQ training needs at least one sample");
  std::vector<std::vector<StatVector>> raw;
  std::vector<double> labels;
  for (const IqSample& s : samples) {
    if (s.raw.empty()) throw_data_error("IQ training sample with an empty sequence");
    raw.push_back(s.raw);
    labels.push_back(s.label);
  }
  IqModel model = IqModel::initialized(hyper.seed);
  model.set_normalization(Normalization::fit(raw));
  std::vector<std::vector<StatVector>> inputs;
  inputs.reserve(raw.size());
  for (const auto& r : raw) inputs.push_back(normalized_steps(model, r));

  std::vector<double> best(model.params().begin(), model.params().end());
  double best_loss = 0.0;
  std::size_t best_epoch = 0;
  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch <= hyper.epochs; ++epoch) {
    const bool last = epoch == hyper.epochs;
    const double l = model.loss(inputs, labels, last ? nullptr : &grad);
    if (!std::isfinite(l)) {
      throw_stage_error("IQ training diverged at epoch " + std::to_string(epoch));
    }
    if (epoch == 0 || l < best_loss) {
      best_loss = l;
      best_epoch = epoch;
      std::copy(model.params().begin(), model.params().end(), best.begin());
    }
    if (last) break;
    auto p = model.mutable_params();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= hyper.lr * grad[k];
  }
  std::copy(best.begin(), best.end(), model.mutable_params().begin());
  model.set_training(TrainingInfo{hyper.lr, hyper.epochs, best_epoch, best_loss, samples.size()});
  return model;
}

double predict_iq(const IqModel& model, const StatsEngine& stats, const JoinPath& path,
                  const FeatureRef& feature) {
  if (path.empty()) return 1.0;
  const auto seq = stats.path_feature_sequence(path, feature, model.normalization());
  return model.predict(seq.steps);
}

double baseline_transitivity_product(const StatsEngine& stats, const JoinPath& path) {
  std::vector<double> per_edge;
  for (const JoinStep& step : path.steps(stats.graph())) {
    per_edge.push_back(stats.edge_feature_vector(step, step.to.column)[kTransitivity]);
  }
  return path_transitivity(per_edge);
}

double baseline_random(std::uint64_t seed) { return RandomIqBaseline(seed).next(); }

StatVector saliency(const IqModel& model, std::span<const StatVector> steps) {
  const auto d = model.input_gradient(steps);
  StatVector out{};
  for (const StatVector& step : d) {
    for (std::size_t k = 0; k < kStatDims; ++k) out[k] += std::abs(step[k]);
  }
  for (double& v : out) v /= static_cast<double>(d.size());
  return out;
}

double gradient_check(const IqModel& model, const std::vector<StatVector>& steps, double label) {
  const std::vector<std::vector<StatVector>> batch{steps};
  const std::array<double, 1> labels{label};
  std::vector<double> analytic;
  model.loss(batch, labels, &analytic);

  constexpr double h = 1e-5;
  IqModel probe = model;
  auto p = probe.mutable_params();
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double saved = p[k];
    p[k] = saved + h;
    const double up = probe.loss(batch, labels, nullptr);
    p[k] = saved - h;
    const double down = probe.loss(batch, labels, nullptr);
    p[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), kGradientCheckFloor});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

double LearnedIqEstimator::pair_iq(const JoinPath& path, const FeatureRef& feature) const {
  return predict_iq(*model_, *stats_, path, feature);
}

double LearnedIqEstimator::path_iq(const JoinPath& path) const {
  if (path.empty()) return 1.0;
  const auto features = stats_->graph().features_of(path.terminal());
  if (features.empty()) {
    const auto seq = stats_->path_feature_sequence(path, std::nullopt, model_->normalization());
    return model_->predict(seq.steps);
  }
  double best = 0.0;
  for (const FeatureRef& f : features) best = std::max(best, pair_iq(path, f));
  return best;
}

double ExactIqEstimator::pair_iq(const JoinPath& path, const FeatureRef& feature) const {
  if (path.empty()) return 1.0;
  return integration_quality(joins_->execute(path, feature));
}

double ExactIqEstimator::path_iq(const JoinPath& path) const {
  if (path.empty()) return 1.0;
  return joins_->reach(path);
}

double TransitivityIqEstimator::path_iq(const JoinPath& path) const {
  return baseline_transitivity_product(*stats_, path);
}

}  // namespace augplan
