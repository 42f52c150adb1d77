#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "augplan/error.hpp"
#include "augplan/pipeline.hpp"
#include "augplan/synthgen.hpp"
#include "augplan/table.hpp"

using namespace augplan;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("augplan_pipe_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Two strong planted signals one and two hops out, a lossy decoy and noise.
SynthSpec pipeline_spec() {
  SynthSpec spec;
  spec.rows = 600;
  spec.seed = 21;
  spec.base_weight = 0.3;
  spec.global_noise = 0.1;
  spec.tables = {{"near", "", 0.9}, {"far", "near", 0.9}, {"lossy", "", 0.3}, {"noise", "", 1.0, 1.0, 1.0, 0, 2, 1}};
  spec.planted = {{"near", 1.0, 0.0, 1.0}, {"far", 1.0, 0.0, 0.8}, {"lossy", 0.5, 0.0, 0.3}};
  return spec;
}

RunConfig config_for(const fs::path& data, const fs::path& work) {
  RunConfig c;
  c.manifest = data / "manifest.json";
  c.workdir = work;
  c.budget = 5;
  c.explore_budget = 20;
  c.iq_epochs = 150;
  c.seed = 3;
  return c;
}

void run(Stage stage, const RunConfig& c) {
  std::ostringstream log;
  run_stage(stage, c, log);
}

}  // namespace

TEST_CASE("plan without explore artifacts is a stage failure") {
  const fs::path data = fresh_dir("noexplore_data");
  write_dataset(generate_dataset(pipeline_spec()), data);
  const RunConfig c = config_for(data, fresh_dir("noexplore_work"));
  try {
    run(Stage::plan, c);
    FAIL("plan ran without artifacts");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::stage);
    CHECK(exit_code(e.kind()) == 3);
    CHECK(std::string(e.what()).find("iq_model.json") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(c.workdir / artifact::kLock));
}

TEST_CASE("eval on the unaugmented base gains nothing") {
  const fs::path data = fresh_dir("evalbase_data");
  const SynthDataset ds = generate_dataset(pipeline_spec());
  write_dataset(ds, data);
  RunConfig c = config_for(data, fresh_dir("evalbase_work"));
  c.eval_input = data / (ds.tables.front().name() + ".csv");
  run(Stage::eval, c);
  const json report = json::parse(read_text_file(c.workdir / artifact::kReport));
  CHECK(report["utility_gain"].get<double>() == 0.0);
}

TEST_CASE("usage errors map to exit code 1") {
  RunConfig c;
  c.budget = 0;
  try {
    run(Stage::validate, c);
    FAIL("budget 0 accepted");
  } catch (const Error& e) {
    CHECK(exit_code(e.kind()) == 1);
  }
  CHECK_THROWS_AS(parse_stage("deploy"), Error);
}

TEST_CASE("full pipeline on a synthetic repository") {
  const fs::path data = fresh_dir("full_data");
  write_dataset(generate_dataset(pipeline_spec()), data);
  const RunConfig c = config_for(data, fresh_dir("full_work"));
  for (Stage s : {Stage::validate, Stage::graph, Stage::explore, Stage::plan, Stage::augment, Stage::eval}) run(s, c);

  const json plan = json::parse(read_text_file(c.workdir / artifact::kPlan));
  REQUIRE(plan["items"].size() >= 1);
  CHECK(plan["items"].size() <= 5);
  std::set<std::string> features;
  for (const auto& item : plan["items"]) features.insert(item["feature"].get<std::string>());
  CHECK(features.size() == plan["items"].size());

  CHECK(fs::exists(c.workdir / artifact::kAugmented));
  const json report = json::parse(read_text_file(c.workdir / artifact::kReport));
  CHECK(report["utility_gain"].get<double>() > 0.0);
  CHECK_FALSE(fs::exists(c.workdir / artifact::kLock));
}
