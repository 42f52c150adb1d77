#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "augplan/error.hpp"
#include "augplan/evaluator.hpp"

namespace augplan {

enum class Stage { validate, graph, explore, plan, augment, eval, synth, oracle };

Stage parse_stage(std::string_view text);
std::string_view to_string(Stage stage);

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path workdir = "work";
  std::size_t explore_budget = 40;
  std::size_t budget = 5;
  double t_iq = 0.1;
  std::size_t heap_multiple = 5;
  std::size_t max_hops = 3;
  double eps = 0.8;
  std::size_t min_neighbors = 3;
  std::uint64_t seed = 7;
  std::optional<Metric> metric;
  std::size_t iq_epochs = 1000;
  double iq_lr = 1.0;

  // eval
  std::optional<std::filesystem::path> eval_input;
  // synth
  std::filesystem::path synth_out = "synth";
  std::size_t synth_tables = 6;
  std::size_t synth_hops = 2;
  std::size_t synth_planted = 3;
  std::size_t synth_rows = 1000;

  /// Throws a usage error when a knob is out of range.
  void validate() const;
};

/// Workdir artifact names.
namespace artifact {
inline constexpr const char* kGraph = "graph.json";
inline constexpr const char* kIqModel = "iq_model.json";
inline constexpr const char* kFi = "fi.json";
inline constexpr const char* kExploreReport = "explore_report.json";
inline constexpr const char* kExploreTiming = "explore_timing.json";
inline constexpr const char* kPlan = "plan.json";
inline constexpr const char* kAugmented = "augmented.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kOracleReport = "oracle_report.json";
inline constexpr const char* kOracleTiming = "oracle_timing.json";
inline constexpr const char* kLock = ".lock";
}  // namespace artifact

/// Holds the workdir lock for its lifetime.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& workdir);
  ~WorkdirLock();
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Runs one stage; progress lines go to `log`. Throws augplan::Error.
void run_stage(Stage stage, const RunConfig& config, std::ostream& log);

int exit_code(ErrorKind kind);

}  // namespace augplan
