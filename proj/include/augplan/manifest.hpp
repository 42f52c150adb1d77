#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "augplan/table.hpp"

namespace augplan {

enum class TaskKind { classification, regression };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

/// "table.column" reference. Table names may not contain '.'; the column part may.
struct ColumnRef {
  std::string table;
  std::string column;

  std::string to_string() const { return table + "." + column; }
  static ColumnRef parse(std::string_view text);

  auto operator<=>(const ColumnRef&) const = default;
};

/// A candidate feature is a column addressed by table and name.
using FeatureRef = ColumnRef;

struct TableSource {
  std::string name;
  std::filesystem::path path;
  std::map<std::string, ColumnKind> kinds;
};

struct BaseDescriptor {
  TableSource source;
  std::string target;
  TaskKind task = TaskKind::classification;
};

struct DeclaredEdge {
  ColumnRef left;
  ColumnRef right;
};

struct Manifest {
  BaseDescriptor base;
  std::vector<TableSource> tables;
  std::vector<DeclaredEdge> edges;
  bool infer_edges_by_name = false;
};

/// Parses and validates manifest JSON. Relative table paths resolve against
/// `base_dir`.
Manifest load_manifest(std::string_view manifest_text, const std::filesystem::path& base_dir = {});
Manifest load_manifest_file(const std::filesystem::path& path);

std::string manifest_to_json(const Manifest& manifest);

/// Ingests every table named by the manifest. Declared edge endpoints become
/// key columns; per-table "kinds" overrides are applied afterwards.
std::vector<Table> load_tables(const Manifest& manifest);

}  // namespace augplan
