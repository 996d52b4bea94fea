#include <fstream>

#include "synthweave/csv.hpp"

namespace synthweave {

const ColumnSchema* Schema::find(std::string_view name) const {
  for (const auto& [n, c] : columns) {
    if (n == name) return &c;
  }
  return nullptr;
}

void Schema::set(std::string name, ColumnSchema column) {
  for (auto& [n, c] : columns) {
    if (n == name) {
      c = std::move(column);
      return;
    }
  }
  columns.emplace_back(std::move(name), std::move(column));
}

Schema Schema::of(const Dataset& data) {
  Schema s;
  for (const auto& c : data.columns()) {
    ColumnSchema cs;
    cs.kind = c.kind();
    cs.levels = c.levels();
    s.columns.emplace_back(c.name(), std::move(cs));
  }
  return s;
}

namespace {

Kind parse_kind(const std::string& text) {
  if (text == "numeric" || text == "number" || text == "continuous") return Kind::numeric;
  if (text == "categorical" || text == "factor" || text == "category") return Kind::categorical;
  throw DataError("schema: unknown column kind '" + text + "'");
}

}  // namespace

Schema Schema::from_json(const nlohmann::json& doc) {
  const nlohmann::json& root = doc.contains("schema") ? doc.at("schema") : doc;
  if (!root.contains("columns") || !root.at("columns").is_object()) {
    throw DataError("schema: expected a \"columns\" object");
  }
  Schema s;
  if (root.contains("missing_token")) s.missing_token = root.at("missing_token").get<std::string>();
  // nlohmann::json objects are sorted by key; an optional "order" array keeps file order.
  std::vector<std::string> order;
  if (root.contains("order")) {
    order = root.at("order").get<std::vector<std::string>>();
  } else {
    for (auto it = root.at("columns").begin(); it != root.at("columns").end(); ++it) order.push_back(it.key());
  }
  for (const auto& name : order) {
    if (!root.at("columns").contains(name)) throw DataError("schema: order names unknown column '" + name + "'");
    const auto& entry = root.at("columns").at(name);
    ColumnSchema cs;
    if (entry.is_string()) {
      cs.kind = parse_kind(entry.get<std::string>());
    } else if (entry.is_object()) {
      cs.kind = parse_kind(entry.at("kind").get<std::string>());
      if (entry.contains("levels")) cs.levels = entry.at("levels").get<std::vector<std::string>>();
      cs.infer_levels = entry.value("infer_levels", false);
      cs.missing_as_level = entry.value("missing_as_level", false);
    } else {
      throw DataError("schema: bad entry for column '" + name + "'");
    }
    s.columns.emplace_back(name, std::move(cs));
  }
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Schema::to_json() const {
  nlohmann::json cols = nlohmann::json::object();
  nlohmann::json order = nlohmann::json::array();
  for (const auto& [name, c] : columns) {
    nlohmann::json e;
    e["kind"] = std::string(kind_name(c.kind));
    if (c.kind == Kind::categorical) {
      if (!c.levels.empty()) e["levels"] = c.levels;
      if (c.infer_levels) e["infer_levels"] = true;
      if (c.missing_as_level) e["missing_as_level"] = true;
    }
    cols[name] = e;
    order.push_back(name);
  }
  return {{"columns", cols}, {"order", order}, {"missing_token", missing_token}};
}

}  // namespace synthweave
