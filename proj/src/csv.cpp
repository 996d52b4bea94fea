#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "synthweave/csv.hpp"

namespace synthweave {

namespace {

struct Field {
  std::string text;
  bool quoted = false;
};

/// Reads one RFC-4180 record. Returns false at end of input. Comment lines
/// (starting with '#') and blank lines are skipped.
bool next_record(std::istream& in, std::vector<Field>& fields, std::size_t& line, std::string* label = nullptr) {
  fields.clear();
  for (;;) {
    int c = in.peek();
    if (c == EOF) return false;
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      ++line;
      constexpr std::string_view stamp = "# SYNTHETIC DATA: ";
      if (label && skip.starts_with(stamp)) {
        *label = skip.substr(stamp.size());
        if (!label->empty() && label->back() == '\r') label->pop_back();
      }
      continue;
    }
    if (c == '\n' || c == '\r') {
      in.get();
      if (c == '\r' && in.peek() == '\n') in.get();
      ++line;
      continue;
    }
    break;
  }
  ++line;
  Field field;
  bool in_quotes = false;
  bool after_quote = false;
  for (;;) {
    int c = in.get();
    if (c == EOF) {
      if (in_quotes) throw DataError("line " + std::to_string(line) + ": unterminated quoted field");
      fields.push_back(std::move(field));
      return true;
    }
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.text.push_back('"');
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field.text.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field = Field{};
      after_quote = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (c == '"' && field.text.empty() && !after_quote) {
      in_quotes = true;
      field.quoted = true;
    } else {
      field.text.push_back(static_cast<char>(c));
    }
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

struct ColumnBuilder {
  std::string name;
  ColumnSchema schema;
  std::vector<double> numbers;
  std::vector<std::int32_t> codes;
  std::vector<std::uint8_t> missing;
  std::vector<std::string> levels;
  std::unordered_map<std::string, std::int32_t> index;
  bool fixed_levels = false;

  void init() {
    levels = schema.levels;
    for (std::size_t i = 0; i < levels.size(); ++i) index.emplace(levels[i], static_cast<std::int32_t>(i));
    fixed_levels = !levels.empty() && !schema.infer_levels;
  }

  void push(const Field& f, const std::string& missing_token, std::size_t line) {
    const bool is_missing = !f.quoted && f.text == missing_token;
    if (schema.kind == Kind::numeric) {
      if (is_missing) {
        numbers.push_back(0.0);
        missing.push_back(1);
        return;
      }
      auto t = trim(f.text);
      double v = 0.0;
      auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw DataError("line " + std::to_string(line) + ", column '" + name + "': cannot parse '" + f.text +
                        "' as a number");
      }
      numbers.push_back(v);
      missing.push_back(0);
      return;
    }
    if (is_missing && !schema.missing_as_level) {
      codes.push_back(0);
      missing.push_back(1);
      return;
    }
    auto it = index.find(f.text);
    if (it == index.end()) {
      if (fixed_levels) {
        throw DataError("line " + std::to_string(line) + ", column '" + name + "': unknown level '" + f.text + "'");
      }
      it = index.emplace(f.text, static_cast<std::int32_t>(levels.size())).first;
      levels.push_back(f.text);
    }
    codes.push_back(it->second);
    missing.push_back(0);
  }

  Column finish() {
    if (schema.kind == Kind::numeric) return Column::numeric(name, std::move(numbers), std::move(missing));
    // A categorical with no observed values still needs a level table.
    if (levels.empty()) levels.push_back(schema.missing_as_level ? std::string("NA") : std::string("(none)"));
    return Column::categorical(name, std::move(levels), std::move(codes), std::move(missing));
  }
};

bool needs_quotes(std::string_view s) {
  if (s.empty()) return false;
  if (s.front() == ' ' || s.back() == ' ' || s.front() == '#') return true;
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void write_field(std::ostream& out, std::string_view s, bool force_quotes) {
  if (!force_quotes && !needs_quotes(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

Dataset read_csv(std::istream& in, const Schema& schema, const std::string& name) {
  std::vector<Field> fields;
  std::size_t line = 0;
  // Strip a UTF-8 byte-order mark.
  if (in.peek() == 0xEF) {
    char bom[3];
    in.read(bom, 3);
  }
  std::string label;
  if (!next_record(in, fields, line, &label)) throw DataError("CSV input has no header row");

  std::vector<ColumnBuilder> builders;
  std::set<std::string> seen;
  for (auto& f : fields) {
    if (f.text.empty()) throw DataError("CSV header has an empty column name");
    if (!seen.insert(f.text).second) throw DataError("CSV header repeats column name '" + f.text + "'");
    const ColumnSchema* cs = schema.find(f.text);
    if (!cs) throw DataError("column '" + f.text + "' is not described by the schema");
    ColumnBuilder b;
    b.name = f.text;
    b.schema = *cs;
    b.init();
    builders.push_back(std::move(b));
  }
  for (const auto& [n, c] : schema.columns) {
    if (!seen.count(n)) throw DataError("schema column '" + n + "' is absent from the CSV header");
  }

  while (next_record(in, fields, line)) {
    if (fields.size() != builders.size()) {
      throw DataError("line " + std::to_string(line) + ": expected " + std::to_string(builders.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < builders.size(); ++j) builders[j].push(fields[j], schema.missing_token, line);
  }

  std::vector<Column> columns;
  columns.reserve(builders.size());
  for (auto& b : builders) columns.push_back(b.finish());
  Dataset out(std::move(columns), name);
  if (!label.empty()) out.metadata()["synthetic_label"] = label;
  return out;
}

Dataset read_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file " + path.string());
  try {
    return read_csv(in, schema, path.stem().string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_csv(const Dataset& data, std::ostream& out, const std::string& missing_token) {
  if (auto it = data.metadata().find("synthetic_label"); it != data.metadata().end()) {
    out << "# SYNTHETIC DATA: " << it->second << '\n';
  }
  for (std::size_t j = 0; j < data.n_cols(); ++j) {
    if (j) out << ',';
    write_field(out, data.column(j).name(), false);
  }
  out << '\n';
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t j = 0; j < data.n_cols(); ++j) {
      if (j) out << ',';
      const Column& c = data.column(j);
      if (c.missing(i)) {
        out << missing_token;
      } else {
        const std::string text = c.format(i);
        // A level spelled like the missing token must stay distinguishable.
        write_field(out, text, c.is_categorical() && text == missing_token);
      }
    }
    out << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& missing_token) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CSV file " + path.string());
  write_csv(data, out, missing_token);
  out.flush();
  if (!out) throw DataError("I/O failure writing " + path.string());
}

}  // namespace synthweave
