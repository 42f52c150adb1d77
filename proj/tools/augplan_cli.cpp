// augplan: plan and apply feature augmentation over a repository of joinable tables.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "augplan/error.hpp"
#include "augplan/pipeline.hpp"

int main(int argc, char** argv) {
  using augplan::RunConfig;
  RunConfig config;
  std::string stage_name;
  std::string manifest;
  std::string workdir = config.workdir.string();
  std::string metric;
  std::string eval_input;
  std::string synth_out = config.synth_out.string();

  CLI::App app{"Relational feature augmentation planner"};
  app.add_option("stage", stage_name, "validate | graph | explore | plan | augment | eval | synth | oracle")
      ->required();
  app.add_option("--manifest", manifest, "Repository manifest (JSON)")->envname("AUGPLAN_MANIFEST");
  app.add_option("--workdir", workdir, "Artifact directory")->envname("AUGPLAN_WORKDIR")->capture_default_str();
  app.add_option("--explore-budget", config.explore_budget, "Feature-path pairs labelled during exploration")
      ->envname("AUGPLAN_EXPLORE_BUDGET")->capture_default_str();
  app.add_option("--budget", config.budget, "Features in the plan (B)")->envname("AUGPLAN_BUDGET")->capture_default_str();
  app.add_option("--t-iq", config.t_iq, "IQ pruning threshold")->envname("AUGPLAN_T_IQ")->capture_default_str();
  app.add_option("--heap-multiple", config.heap_multiple, "Heap size as a multiple of B")
      ->envname("AUGPLAN_HEAP_MULTIPLE")->capture_default_str();
  app.add_option("--max-hops", config.max_hops, "Longest join path")->envname("AUGPLAN_MAX_HOPS")->capture_default_str();
  app.add_option("--eps", config.eps, "Cosine threshold for feature clusters")->envname("AUGPLAN_EPS")->capture_default_str();
  app.add_option("--min-neighbors", config.min_neighbors, "Minimum cluster neighbourhood")
      ->envname("AUGPLAN_MIN_NEIGHBORS")->capture_default_str();
  app.add_option("--seed", config.seed, "Seed for splits, clustering and training")->envname("AUGPLAN_SEED")->capture_default_str();
  app.add_option("--metric", metric, "accuracy | f1 | neg_mae | neg_mse")->envname("AUGPLAN_METRIC");
  app.add_option("--iq-epochs", config.iq_epochs, "IQ model training epochs")->envname("AUGPLAN_IQ_EPOCHS")->capture_default_str();
  app.add_option("--iq-lr", config.iq_lr, "IQ model learning rate")->envname("AUGPLAN_IQ_LR")->capture_default_str();
  app.add_option("--input", eval_input, "CSV to evaluate (eval; defaults to the augmented table)");
  app.add_option("--out", synth_out, "Output directory (synth)")->capture_default_str();
  app.add_option("--tables", config.synth_tables, "Candidate tables (synth)")->capture_default_str();
  app.add_option("--hops", config.synth_hops, "Tree depth (synth)")->capture_default_str();
  app.add_option("--planted", config.synth_planted, "Planted features (synth)")->capture_default_str();
  app.add_option("--rows", config.synth_rows, "Base rows (synth)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    config.manifest = manifest;
    config.workdir = workdir;
    config.synth_out = synth_out;
    if (!metric.empty()) config.metric = augplan::parse_metric(metric);
    if (!eval_input.empty()) config.eval_input = eval_input;
    augplan::run_stage(augplan::parse_stage(stage_name), config, std::cout);
  } catch (const augplan::Error& e) {
    std::cerr << "augplan " << stage_name << ": " << e.what() << "\n";
    return augplan::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "augplan " << stage_name << ": " << e.what() << "\n";
    return 3;
  }
  return 0;
}
