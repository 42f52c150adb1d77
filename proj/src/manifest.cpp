#include "augplan/manifest.hpp"

#include <set>

#include <json.hpp>

#include "augplan/error.hpp"

namespace augplan {

using nlohmann::json;

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::classification ? "classification" : "regression";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "classification") return TaskKind::classification;
  if (text == "regression") return TaskKind::regression;
  throw_data_error("unknown task kind '" + std::string(text) + "'");
}

ColumnRef ColumnRef::parse(std::string_view text) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size()) {
    throw_data_error("malformed column reference '" + std::string(text) +
                     "', expected table.column");
  }
  return ColumnRef{std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
}

namespace {

const json& require(const json& object, const char* key, const std::string& where) {
  if (!object.is_object() || !object.contains(key)) {
    throw_data_error("manifest: missing '" + std::string(key) + "' in " + where);
  }
  return object.at(key);
}

std::string require_string(const json& object, const char* key, const std::string& where) {
  const json& value = require(object, key, where);
  if (!value.is_string()) {
    throw_data_error("manifest: '" + std::string(key) + "' in " + where + " must be a string");
  }
  return value.get<std::string>();
}

TableSource parse_source(const json& node, const std::filesystem::path& base_dir,
                         const std::string& where) {
  TableSource source;
  source.name = require_string(node, "name", where);
  if (source.name.find('.') != std::string::npos) {
    throw_data_error("manifest: table name '" + source.name + "' may not contain '.'");
  }
  std::filesystem::path path = require_string(node, "path", where);
  source.path = path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  if (node.contains("kinds")) {
    const json& kinds = node.at("kinds");
    if (!kinds.is_object()) throw_data_error("manifest: 'kinds' in " + where + " must be an object");
    for (const auto& [column, kind] : kinds.items()) {
      if (!kind.is_string()) throw_data_error("manifest: kind for '" + column + "' must be a string");
      source.kinds[column] = parse_column_kind(kind.get<std::string>());
    }
  }
  return source;
}

json source_to_json(const TableSource& source) {
  json node;
  node["name"] = source.name;
  node["path"] = source.path.generic_string();
  if (!source.kinds.empty()) {
    json kinds = json::object();
    for (const auto& [column, kind] : source.kinds) kinds[column] = std::string(to_string(kind));
    node["kinds"] = kinds;
  }
  return node;
}

}  // namespace

Manifest load_manifest(std::string_view manifest_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(manifest_text);
  } catch (const json::parse_error& e) {
    throw_data_error(std::string("manifest: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw_data_error("manifest: top level must be an object");

  Manifest manifest;
  if (!root.contains("base_table")) throw_data_error("manifest: missing base_table");
  const json& base = root.at("base_table");
  manifest.base.source = parse_source(base, base_dir, "base_table");
  manifest.base.target = require_string(base, "target", "base_table");
  manifest.base.task = parse_task_kind(require_string(base, "task", "base_table"));

  std::set<std::string> names{manifest.base.source.name};
  if (root.contains("tables")) {
    const json& tables = root.at("tables");
    if (!tables.is_array()) throw_data_error("manifest: 'tables' must be an array");
    for (std::size_t i = 0; i < tables.size(); ++i) {
      TableSource source = parse_source(tables[i], base_dir, "tables[" + std::to_string(i) + "]");
      if (!names.insert(source.name).second) {
        throw_data_error("manifest: duplicate table name '" + source.name + "'");
      }
      manifest.tables.push_back(std::move(source));
    }
  }

  if (root.contains("edges")) {
    const json& edges = root.at("edges");
    if (!edges.is_array()) throw_data_error("manifest: 'edges' must be an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string where = "edges[" + std::to_string(i) + "]";
      DeclaredEdge edge{ColumnRef::parse(require_string(edges[i], "left", where)),
                        ColumnRef::parse(require_string(edges[i], "right", where))};
      for (const ColumnRef* end : {&edge.left, &edge.right}) {
        if (!names.contains(end->table)) {
          throw_data_error("manifest: " + where + " references undeclared table '" + end->table +
                           "'");
        }
      }
      manifest.edges.push_back(std::move(edge));
    }
  }

  if (root.contains("infer_edges_by_name")) {
    const json& flag = root.at("infer_edges_by_name");
    if (!flag.is_boolean()) throw_data_error("manifest: 'infer_edges_by_name' must be a boolean");
    manifest.infer_edges_by_name = flag.get<bool>();
  }
  return manifest;
}

Manifest load_manifest_file(const std::filesystem::path& path) {
  return load_manifest(read_text_file(path), path.parent_path());
}

std::string manifest_to_json(const Manifest& manifest) {
  json root;
  json base = source_to_json(manifest.base.source);
  base["target"] = manifest.base.target;
  base["task"] = std::string(to_string(manifest.base.task));
  root["base_table"] = base;
  root["tables"] = json::array();
  for (const auto& source : manifest.tables) root["tables"].push_back(source_to_json(source));
  root["edges"] = json::array();
  for (const auto& edge : manifest.edges) {
    root["edges"].push_back({{"left", edge.left.to_string()}, {"right", edge.right.to_string()}});
  }
  root["infer_edges_by_name"] = manifest.infer_edges_by_name;
  return root.dump(2) + "\n";
}

std::vector<Table> load_tables(const Manifest& manifest) {
  std::vector<const TableSource*> sources{&manifest.base.source};
  for (const auto& s : manifest.tables) sources.push_back(&s);

  std::vector<Table> tables;
  tables.reserve(sources.size());
  for (const TableSource* source : sources) {
    Table table = read_csv_table(source->path, source->name);
    std::map<std::string, ColumnKind> kinds;
    for (const auto& edge : manifest.edges) {
      for (const ColumnRef* end : {&edge.left, &edge.right}) {
        if (end->table == source->name) kinds[end->column] = ColumnKind::key;
      }
    }
    for (const auto& [column, kind] : source->kinds) kinds[column] = kind;
    tables.push_back(table.with_kinds(kinds));
  }
  const Table& base = tables.front();
  if (!base.has_column(manifest.base.target)) {
    throw_data_error("base table '" + base.name() + "' has no target column '" +
                     manifest.base.target + "'");
  }
  return tables;
}

}  // namespace augplan
