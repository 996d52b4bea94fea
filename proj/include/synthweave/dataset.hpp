#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace synthweave {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data (CSV parse failures, schema mismatches).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A model could not be fitted or sampled.
class FitError : public Error {
 public:
  using Error::Error;
};

enum class Kind { categorical, numeric };

std::string_view kind_name(Kind kind);

/// One variable of a microdata table. Categorical values are interned codes
/// into a level table; missingness is tracked in a separate mask, never as a
/// sentinel value.
class Column {
 public:
  Column() = default;

  static Column numeric(std::string name, std::vector<double> values,
                        std::vector<std::uint8_t> missing = {});
  static Column categorical(std::string name, std::vector<std::string> levels,
                            std::vector<std::int32_t> codes, std::vector<std::uint8_t> missing = {});
  /// An all-missing column of the given shape, used as a fill target.
  static Column empty_like(const Column& prototype, std::size_t n_rows);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  bool is_numeric() const { return kind_ == Kind::numeric; }
  bool is_categorical() const { return kind_ == Kind::categorical; }
  std::size_t size() const { return missing_.size(); }

  const std::vector<std::string>& levels() const { return levels_; }
  std::size_t level_count() const { return levels_.size(); }
  std::optional<std::int32_t> find_level(std::string_view level) const;

  bool missing(std::size_t row) const { return missing_[row] != 0; }
  double number(std::size_t row) const { return numbers_[row]; }
  std::int32_t code(std::size_t row) const { return codes_[row]; }

  std::span<const double> numbers() const { return numbers_; }
  std::span<const std::int32_t> codes() const { return codes_; }
  std::span<const std::uint8_t> missing_mask() const { return missing_; }

  std::size_t missing_count() const;
  bool has_missing() const { return missing_count() > 0; }

  void set_number(std::size_t row, double value);
  void set_code(std::size_t row, std::int32_t code);
  void set_missing(std::size_t row);

  Column subset(std::span<const std::size_t> rows) const;
  Column renamed(std::string name) const;

  /// Text of a cell as written to CSV; missing cells yield `missing_token`.
  std::string format(std::size_t row, std::string_view missing_token = "NA") const;

  /// Same kind and, for categoricals, the same level table.
  bool same_domain(const Column& other) const;

  friend bool operator==(const Column& a, const Column& b);

 private:
  std::string name_;
  Kind kind_ = Kind::numeric;
  std::vector<std::string> levels_;
  std::vector<double> numbers_;
  std::vector<std::int32_t> codes_;
  std::vector<std::uint8_t> missing_;
};

/// Column-ordered table; every column has exactly n_rows values and column
/// names are unique.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t n_rows, std::string name = {});
  explicit Dataset(std::vector<Column> columns, std::string name = {});

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t index) const { return columns_.at(index); }
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool has(std::string_view name) const { return index_of(name).has_value(); }
  std::vector<std::string> names() const;

  void add_column(Column column);
  void replace_column(Column column);

  Dataset select(std::span<const std::string> names) const;
  Dataset subset_rows(std::span<const std::size_t> rows) const;

  /// Free-form provenance stamps (e.g. the synthetic-data label).
  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  /// Value-for-value equality of the columns (metadata ignored).
  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::string name_;
  std::size_t n_rows_ = 0;
  std::vector<Column> columns_;
  std::map<std::string, std::string> metadata_;
};

/// Row-wise concatenation of datasets sharing one schema.
Dataset concat_rows(std::span<const Dataset> parts);

}  // namespace synthweave
