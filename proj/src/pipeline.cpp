#include "augplan/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include <json.hpp>

#include "augplan/error.hpp"
#include "augplan/explore.hpp"
#include "augplan/join_engine.hpp"
#include "augplan/join_graph.hpp"
#include "augplan/join_stats.hpp"
#include "augplan/manifest.hpp"
#include "augplan/planner.hpp"
#include "augplan/synthgen.hpp"

namespace augplan {

namespace fs = std::filesystem;
using nlohmann::json;

Stage parse_stage(std::string_view text) {
  static const std::pair<std::string_view, Stage> names[] = {
      {"validate", Stage::validate}, {"graph", Stage::graph},     {"explore", Stage::explore},
      {"plan", Stage::plan},         {"augment", Stage::augment}, {"eval", Stage::eval},
      {"synth", Stage::synth},       {"oracle", Stage::oracle}};
  for (const auto& [name, stage] : names) {
    if (name == text) return stage;
  }
  throw_usage_error("unknown stage '" + std::string(text) + "'");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::validate: return "validate";
    case Stage::graph: return "graph";
    case Stage::explore: return "explore";
    case Stage::plan: return "plan";
    case Stage::augment: return "augment";
    case Stage::eval: return "eval";
    case Stage::synth: return "synth";
    case Stage::oracle: return "oracle";
  }
  return "unknown";
}

void RunConfig::validate() const {
  if (explore_budget == 0) throw_usage_error("--explore-budget must be positive");
  if (budget == 0) throw_usage_error("--budget must be positive");
  if (!(t_iq >= 0.0 && t_iq <= 1.0)) throw_usage_error("--t-iq must lie in [0, 1]");
  if (heap_multiple == 0) throw_usage_error("--heap-multiple must be positive");
  if (max_hops == 0) throw_usage_error("--max-hops must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw_usage_error("--eps must lie in (0, 1)");
  if (min_neighbors == 0) throw_usage_error("--min-neighbors must be positive");
  if (iq_epochs == 0) throw_usage_error("--iq-epochs must be positive");
  if (!(iq_lr > 0.0)) throw_usage_error("--iq-lr must be positive");
  if (synth_hops == 0) throw_usage_error("--synth-hops must be positive");
}

WorkdirLock::WorkdirLock(const fs::path& workdir) : path_(workdir / artifact::kLock) {
  fs::create_directories(workdir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw_stage_error("workdir " + workdir.string() + " is locked by another run (" + path_.string() + ")");
    }
    throw_stage_error("cannot create lock " + path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

WorkdirLock::~WorkdirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::stage: return 3;
  }
  return 3;
}

namespace {

struct Context {
  Manifest manifest;
  JoinGraph graph;
  JoinEngine joins;
  StatsEngine stats;

  explicit Context(const RunConfig& config)
      : manifest(load_manifest_file(config.manifest)),
        graph(load_join_graph(manifest)),
        joins(graph),
        stats(joins) {}
};

fs::path require_artifact(const RunConfig& config, const char* name, Stage producer) {
  const fs::path p = config.workdir / name;
  if (!fs::exists(p)) {
    throw_stage_error("missing artifact " + p.string() + "; run the '" +
                      std::string(to_string(producer)) + "' stage first");
  }
  return p;
}

void require_manifest(const RunConfig& config) {
  if (config.manifest.empty()) throw_usage_error("--manifest is required for this stage");
}

TaskSpec task_spec(const RunConfig& config, const JoinGraph& graph) {
  return task_for(graph, config.metric, config.seed);
}

void write_artifact(const RunConfig& config, const char* name, std::string_view content,
                    std::ostream& log) {
  write_text_file(config.workdir / name, content);
  log << "wrote " << (config.workdir / name).string() << "\n";
}

void stage_validate(const RunConfig& config, std::ostream& log) {
  Context ctx(config);
  const Table& base = ctx.graph.base_table();
  log << "manifest ok: base '" << base.name() << "' (" << base.row_count() << " rows), "
      << ctx.graph.tables().size() << " tables, " << ctx.graph.edges().size() << " edges, "
      << ctx.graph.all_features().size() << " candidate features\n";
  for (const std::string& w : ctx.graph.warnings()) log << "warning: " << w << "\n";
}

void stage_graph(const RunConfig& config, std::ostream& log) {
  Context ctx(config);
  json tables = json::array();
  for (const auto& t : ctx.graph.tables()) {
    json cols = json::array();
    for (const Column& c : t->columns()) {
      cols.push_back({{"name", c.name()}, {"kind", to_string(c.kind())}, {"nulls", c.null_count()}});
    }
    tables.push_back({{"name", t->name()}, {"rows", t->row_count()}, {"columns", cols}});
  }
  json edges = json::array();
  for (const JoinEdge& e : ctx.graph.edges()) {
    const Column& l = ctx.graph.table(e.left.table).column(e.left.column);
    const Column& r = ctx.graph.table(e.right.table).column(e.right.column);
    edges.push_back({{"id", e.id()},
                     {"left", e.left.to_string()},
                     {"right", e.right.to_string()},
                     {"transitivity_left_to_right", transitivity(l, r)},
                     {"transitivity_right_to_left", transitivity(r, l)}});
  }
  json by_length = json::object();
  std::vector<JoinPath> paths;
  for (JoinPath& p : enumerate_paths(ctx.graph, config.max_hops)) {
    if (!p.empty()) paths.push_back(std::move(p));
  }
  for (const auto& [len, n] : count_paths_by_length(paths)) by_length[std::to_string(len)] = n;
  json features = json::array();
  for (const FeatureRef& f : ctx.graph.all_features()) features.push_back(f.to_string());
  json out{{"base", ctx.graph.base()},
           {"target", ctx.graph.target()},
           {"task", to_string(ctx.graph.task())},
           {"tables", tables},
           {"edges", edges},
           {"max_hops", config.max_hops},
           {"paths_by_length", by_length},
           {"features", features},
           {"warnings", ctx.graph.warnings()}};
  write_artifact(config, artifact::kGraph, out.dump(2) + "\n", log);
}

void stage_explore(const RunConfig& config, std::ostream& log) {
  Context ctx(config);
  ExploreConfig ec;
  ec.budget = config.explore_budget;
  ec.max_hops = config.max_hops;
  ec.clusters = {config.eps, config.min_neighbors, config.seed};
  ec.iq = {config.iq_lr, config.iq_epochs, config.seed};
  ec.task = task_spec(config, ctx.graph);
  const ExploreResult result = run_explore(ctx.stats, ec);
  log << "explored " << result.selected.size() << " pairs, " << result.labels.fi.size()
      << " features with measured FI, base " << to_string(result.base_score.metric) << " "
      << result.base_score.value << "\n";
  write_artifact(config, artifact::kIqModel, result.model.to_json(), log);
  write_artifact(config, artifact::kFi, fi_json(result.space, result.base_score), log);
  write_artifact(config, artifact::kExploreReport, explore_report_json(result, ctx.graph), log);
  write_artifact(config, artifact::kExploreTiming, explore_timing_json(result, ctx.graph), log);
}

struct Models {
  IqModel model;
  FeatureSpace space;
  UtilityScore base_score;
};

Models load_models(const RunConfig& config, const JoinGraph& graph) {
  const fs::path model_path = require_artifact(config, artifact::kIqModel, Stage::explore);
  const fs::path fi_path = require_artifact(config, artifact::kFi, Stage::explore);
  Models m;
  m.model = IqModel::from_json(read_text_file(model_path));
  m.space = fi_from_json(read_text_file(fi_path), graph, &m.base_score);
  return m;
}

PlannerConfig planner_config(const RunConfig& config) {
  return {config.budget, config.t_iq, config.heap_multiple, config.max_hops};
}

void stage_plan(const RunConfig& config, std::ostream& log) {
  Context ctx(config);
  const Models m = load_models(config, ctx.graph);
  const LearnedIqEstimator estimator(m.model, ctx.stats);
  SearchResult search;
  const AugmentationPlan plan = plan_augmentation(ctx.graph, estimator, m.space, planner_config(config), &search);
  log << "plan: " << plan.items.size() << " items, objective " << plan.objective() << ", "
      << search.expansions << " expansions, " << search.pruned << " pruned\n";
  if (plan.short_of_budget) log << "warning: plan is shorter than the budget\n";
  write_artifact(config, artifact::kPlan, plan_to_json(plan, ctx.graph), log);
}

std::vector<AugmentedTable> materialize(const AugmentationPlan& plan, const JoinEngine& joins) {
  std::vector<AugmentedTable> augs;
  for (const PlanItem& item : plan.items) augs.push_back(joins.execute(item.path, item.feature));
  return augs;
}

void stage_augment(const RunConfig& config, std::ostream& log) {
  Context ctx(config);
  const fs::path plan_path = require_artifact(config, artifact::kPlan, Stage::plan);
  const AugmentationPlan plan = plan_from_json(read_text_file(plan_path), ctx.graph);
  const Table augmented = combine_augmentations(ctx.graph.base_table(), materialize(plan, ctx.joins));
  write_csv(augmented, config.workdir / artifact::kAugmented);
  log << "wrote " << (config.workdir / artifact::kAugmented).string() << " ("
      << augmented.columns().size() << " columns)\n";
}

/// Kinds to reapply after reading a base-derived CSV back from disk.
std::map<std::string, ColumnKind> reload_kinds(const Context& ctx, const Table& table) {
  std::map<std::string, ColumnKind> kinds;
  const Table& base = ctx.graph.base_table();
  for (const Column& c : table.columns()) {
    if (base.has_column(c.name())) {
      kinds[c.name()] = base.column(c.name()).kind();
      continue;
    }
    const auto split = c.name().find("__");
    if (split == std::string::npos) continue;
    const std::string t = c.name().substr(0, split);
    const std::string col = c.name().substr(split + 2);
    if (ctx.graph.has_table(t) && ctx.graph.table(t).has_column(col)) {
      const ColumnKind k = ctx.graph.table(t).column(col).kind();
      kinds[c.name()] = k == ColumnKind::key ? ColumnKind::categorical : k;
    }
  }
  return kinds;
}

void stage_eval(const RunConfig& config, std::ostream& log) {
  Context ctx(config);
  fs::path input = config.eval_input ? *config.eval_input
                                     : require_artifact(config, artifact::kAugmented, Stage::augment);
  if (!fs::exists(input)) throw_stage_error("missing input " + input.string());
  Table loaded = read_csv_table(input, ctx.graph.base());
  const Table table = loaded.with_kinds(reload_kinds(ctx, loaded));
  const TaskSpec spec = task_spec(config, ctx.graph);
  const UtilityScore base = utility_score(ctx.graph.base_table(), spec);
  const UtilityScore augmented = utility_score(table, spec);
  const double gain = augmented.value - base.value;
  log << "base " << base.value << ", augmented " << augmented.value << ", gain " << gain << "\n";
  json out{{"input", input.filename().string()},
           {"base", json::parse(base.to_json())},
           {"augmented", json::parse(augmented.to_json())},
           {"utility_gain", gain}};
  write_artifact(config, artifact::kReport, out.dump(2) + "\n", log);
}

void stage_synth(const RunConfig& config, std::ostream& log) {
  SynthSpec spec = random_synth_spec(config.seed, config.synth_tables, config.synth_hops,
                                     config.synth_planted, 0.2, config.synth_rows);
  const SynthDataset data = generate_dataset(spec);
  write_dataset(data, config.synth_out);
  log << "wrote synthetic dataset with " << data.tables.size() << " tables to "
      << config.synth_out.string() << "\n";
}

json plan_summary(const AugmentationPlan& plan, double realized) {
  json features = json::array();
  for (const FeatureRef& f : plan.features()) features.push_back(f.to_string());
  return {{"objective", plan.objective()}, {"features", features}, {"realized_gain", realized}};
}

void stage_oracle(const RunConfig& config, std::ostream& log) {
  Context ctx(config);
  const Models m = load_models(config, ctx.graph);
  const LearnedIqEstimator estimator(m.model, ctx.stats);
  const FiTable fi = fi_table(m.space);
  const TaskSpec spec = task_spec(config, ctx.graph);
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };

  auto t0 = clock::now();
  SearchResult search;
  const AugmentationPlan planned = plan_augmentation(ctx.graph, estimator, m.space, planner_config(config), &search);
  const double planner_s = seconds(t0);
  t0 = clock::now();
  const AugmentationPlan exhaustive = exhaustive_oracle(ctx.graph, estimator, fi, config.budget, config.max_hops);
  const double exhaustive_s = seconds(t0);
  t0 = clock::now();
  const AugmentationPlan greedy = greedy_baseline(ctx.graph, estimator, fi, config.budget, config.max_hops);
  const double greedy_s = seconds(t0);

  auto realized = [&](const AugmentationPlan& plan) {
    const Table t = combine_augmentations(ctx.graph.base_table(), materialize(plan, ctx.joins));
    return utility_score(t, spec).value - m.base_score.value;
  };
  json out{{"budget", config.budget},
           {"t_iq", config.t_iq},
           {"heap_size", config.budget * config.heap_multiple},
           {"expansions", search.expansions},
           {"planner", plan_summary(planned, realized(planned))},
           {"exhaustive", plan_summary(exhaustive, realized(exhaustive))},
           {"greedy", plan_summary(greedy, realized(greedy))}};
  log << "objective: planner " << planned.objective() << ", exhaustive " << exhaustive.objective()
      << ", greedy " << greedy.objective() << "\n";
  write_artifact(config, artifact::kOracleReport, out.dump(2) + "\n", log);
  json timing{{"planner_seconds", planner_s}, {"exhaustive_seconds", exhaustive_s}, {"greedy_seconds", greedy_s}};
  write_artifact(config, artifact::kOracleTiming, timing.dump(2) + "\n", log);
}

}  // namespace

void run_stage(Stage stage, const RunConfig& config, std::ostream& log) {
  config.validate();
  if (stage == Stage::synth) {
    stage_synth(config, log);
    return;
  }
  require_manifest(config);
  if (stage == Stage::validate) {
    stage_validate(config, log);
    return;
  }
  WorkdirLock lock(config.workdir);
  switch (stage) {
    case Stage::graph: stage_graph(config, log); break;
    case Stage::explore: stage_explore(config, log); break;
    case Stage::plan: stage_plan(config, log); break;
    case Stage::augment: stage_augment(config, log); break;
    case Stage::eval: stage_eval(config, log); break;
    case Stage::oracle: stage_oracle(config, log); break;
    default: break;
  }
}

}  // namespace augplan
