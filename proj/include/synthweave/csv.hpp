#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthweave/dataset.hpp"

namespace synthweave {

struct ColumnSchema {
  Kind kind = Kind::numeric;
  /// Level table for categoricals; empty means "infer from the data".
  std::vector<std::string> levels;
  /// Accept levels missing from `levels`, appending them in order of appearance.
  bool infer_levels = false;
  /// Cells equal to the missing token become an ordinary level of that name.
  bool missing_as_level = false;
};

/// Explicit column typing for CSV ingestion; no type inference is done.
struct Schema {
  std::vector<std::pair<std::string, ColumnSchema>> columns;
  std::string missing_token = "NA";

  const ColumnSchema* find(std::string_view name) const;
  void set(std::string name, ColumnSchema column);

  /// Schema reproducing `data` exactly (explicit level tables).
  static Schema of(const Dataset& data);

  /// Accepts {"columns": {...}, "missing_token": ...} or a document with a
  /// nested "schema" object of that form. A column entry is either the kind
  /// name or {"kind", "levels", "infer_levels", "missing_as_level"}.
  static Schema from_json(const nlohmann::json& doc);
  static Schema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

Dataset read_csv(std::istream& in, const Schema& schema, const std::string& name = {});
Dataset read_csv(const std::filesystem::path& path, const Schema& schema);

/// Writes a header row then one record per row. A "synthetic_label" metadata
/// entry is emitted first as a "# SYNTHETIC DATA: <label>" comment line.
void write_csv(const Dataset& data, std::ostream& out, const std::string& missing_token = "NA");
void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& missing_token = "NA");

}  // namespace synthweave
