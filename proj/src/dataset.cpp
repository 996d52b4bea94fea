#include "synthweave/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace synthweave {

std::string_view kind_name(Kind kind) {
  return kind == Kind::categorical ? "categorical" : "numeric";
}

namespace {

std::vector<std::uint8_t> normalise_mask(std::vector<std::uint8_t> mask, std::size_t n,
                                         const std::string& name) {
  if (mask.empty()) return std::vector<std::uint8_t>(n, 0);
  if (mask.size() != n) throw DataError("column '" + name + "': missing mask length mismatch");
  for (auto& m : mask) m = m ? 1 : 0;
  return mask;
}

}  // namespace

Column Column::numeric(std::string name, std::vector<double> values, std::vector<std::uint8_t> missing) {
  if (name.empty()) throw DataError("column name must be non-empty");
  Column c;
  c.kind_ = Kind::numeric;
  c.missing_ = normalise_mask(std::move(missing), values.size(), name);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (c.missing_[i]) values[i] = 0.0;
  }
  c.numbers_ = std::move(values);
  c.name_ = std::move(name);
  return c;
}

Column Column::categorical(std::string name, std::vector<std::string> levels, std::vector<std::int32_t> codes,
                           std::vector<std::uint8_t> missing) {
  if (name.empty()) throw DataError("column name must be non-empty");
  if (levels.empty()) throw DataError("categorical column '" + name + "' needs at least one level");
  std::set<std::string> seen;
  for (const auto& l : levels) {
    if (!seen.insert(l).second) throw DataError("categorical column '" + name + "' repeats level '" + l + "'");
  }
  Column c;
  c.kind_ = Kind::categorical;
  c.missing_ = normalise_mask(std::move(missing), codes.size(), name);
  const auto n_levels = static_cast<std::int32_t>(levels.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (c.missing_[i]) {
      codes[i] = 0;
    } else if (codes[i] < 0 || codes[i] >= n_levels) {
      throw DataError("categorical column '" + name + "': code out of range at row " + std::to_string(i));
    }
  }
  c.codes_ = std::move(codes);
  c.levels_ = std::move(levels);
  c.name_ = std::move(name);
  return c;
}

Column Column::empty_like(const Column& prototype, std::size_t n_rows) {
  Column c;
  c.name_ = prototype.name_;
  c.kind_ = prototype.kind_;
  c.levels_ = prototype.levels_;
  c.missing_.assign(n_rows, 1);
  if (c.is_numeric()) {
    c.numbers_.assign(n_rows, 0.0);
  } else {
    c.codes_.assign(n_rows, 0);
  }
  return c;
}

std::optional<std::int32_t> Column::find_level(std::string_view level) const {
  auto it = std::find(levels_.begin(), levels_.end(), level);
  if (it == levels_.end()) return std::nullopt;
  return static_cast<std::int32_t>(it - levels_.begin());
}

std::size_t Column::missing_count() const {
  return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), std::uint8_t{1}));
}

void Column::set_number(std::size_t row, double value) {
  numbers_.at(row) = value;
  missing_[row] = 0;
}

void Column::set_code(std::size_t row, std::int32_t code) {
  if (code < 0 || static_cast<std::size_t>(code) >= levels_.size()) {
    throw DataError("column '" + name_ + "': code out of range");
  }
  codes_.at(row) = code;
  missing_[row] = 0;
}

void Column::set_missing(std::size_t row) {
  missing_.at(row) = 1;
  if (is_numeric()) {
    numbers_[row] = 0.0;
  } else {
    codes_[row] = 0;
  }
}

Column Column::subset(std::span<const std::size_t> rows) const {
  Column c;
  c.name_ = name_;
  c.kind_ = kind_;
  c.levels_ = levels_;
  c.missing_.reserve(rows.size());
  if (is_numeric()) {
    c.numbers_.reserve(rows.size());
    for (auto r : rows) {
      c.numbers_.push_back(numbers_.at(r));
      c.missing_.push_back(missing_[r]);
    }
  } else {
    c.codes_.reserve(rows.size());
    for (auto r : rows) {
      c.codes_.push_back(codes_.at(r));
      c.missing_.push_back(missing_[r]);
    }
  }
  return c;
}

Column Column::renamed(std::string name) const {
  Column c = *this;
  c.name_ = std::move(name);
  return c;
}

std::string Column::format(std::size_t row, std::string_view missing_token) const {
  if (missing(row)) return std::string(missing_token);
  if (is_categorical()) return levels_[static_cast<std::size_t>(codes_[row])];
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, numbers_[row]);
  return std::string(buf, res.ptr);
}

bool Column::same_domain(const Column& other) const {
  return kind_ == other.kind_ && levels_ == other.levels_;
}

bool operator==(const Column& a, const Column& b) {
  return a.name_ == b.name_ && a.kind_ == b.kind_ && a.levels_ == b.levels_ && a.missing_ == b.missing_ &&
         a.numbers_ == b.numbers_ && a.codes_ == b.codes_;
}

Dataset::Dataset(std::size_t n_rows, std::string name) : name_(std::move(name)), n_rows_(n_rows) {}

Dataset::Dataset(std::vector<Column> columns, std::string name) : name_(std::move(name)) {
  if (!columns.empty()) n_rows_ = columns.front().size();
  for (auto& c : columns) add_column(std::move(c));
}

const Column& Dataset::column(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw DataError("unknown column '" + std::string(name) + "'");
  return columns_[*idx];
}

std::optional<std::size_t> Dataset::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name() == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name());
  return out;
}

void Dataset::add_column(Column column) {
  if (column.name().empty()) throw DataError("column name must be non-empty");
  if (has(column.name())) throw DataError("duplicate column name '" + column.name() + "'");
  if (columns_.empty() && n_rows_ == 0) n_rows_ = column.size();
  if (column.size() != n_rows_) {
    throw DataError("column '" + column.name() + "' has " + std::to_string(column.size()) + " rows, expected " +
                    std::to_string(n_rows_));
  }
  columns_.push_back(std::move(column));
}

void Dataset::replace_column(Column column) {
  auto idx = index_of(column.name());
  if (!idx) throw DataError("unknown column '" + column.name() + "'");
  if (column.size() != n_rows_) throw DataError("column '" + column.name() + "' row count mismatch");
  columns_[*idx] = std::move(column);
}

Dataset Dataset::select(std::span<const std::string> names) const {
  Dataset out(n_rows_, name_);
  for (const auto& n : names) out.add_column(column(n));
  out.metadata_ = metadata_;
  return out;
}

Dataset Dataset::subset_rows(std::span<const std::size_t> rows) const {
  Dataset out(rows.size(), name_);
  for (const auto& c : columns_) out.add_column(c.subset(rows));
  out.metadata_ = metadata_;
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.n_rows_ == b.n_rows_ && a.columns_ == b.columns_;
}

Dataset concat_rows(std::span<const Dataset> parts) {
  if (parts.empty()) return Dataset{};
  const Dataset& first = parts.front();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.n_cols() != first.n_cols()) throw DataError("concat_rows: column count mismatch");
    total += p.n_rows();
  }
  Dataset out(total, first.name());
  for (std::size_t j = 0; j < first.n_cols(); ++j) {
    const Column& proto = first.column(j);
    Column col = Column::empty_like(proto, total);
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const Column& src = p.column(j);
      if (src.name() != proto.name() || !src.same_domain(proto)) {
        throw DataError("concat_rows: schema mismatch in column '" + proto.name() + "'");
      }
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (src.missing(i)) continue;
        if (src.is_numeric()) {
          col.set_number(offset + i, src.number(i));
        } else {
          col.set_code(offset + i, src.code(i));
        }
      }
      offset += src.size();
    }
    out.add_column(std::move(col));
  }
  out.metadata() = first.metadata();
  return out;
}

}  // namespace synthweave
