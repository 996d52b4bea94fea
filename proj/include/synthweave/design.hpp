#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthweave/dataset.hpp"

namespace synthweave {

enum class ReferenceLevel {
  /// First level present in the fitting data.
  first,
  /// Most frequent level in the fitting data (ties: lowest code).
  modal,
};

struct DesignTerm {
  enum class Type { intercept, dummy, numeric, missing_indicator };
  Type type = Type::intercept;
  std::string variable;
  std::string label;
  /// Level name for dummies ("NA" for the missing pseudo-level).
  std::string level;
  double center = 0.0;
  double scale = 1.0;
};

/// Main-effects design: intercept, one dummy per non-reference categorical
/// level (missing counts as a level when present), and numeric predictors as
/// centred linear terms plus a missing indicator when they have gaps.
/// Constant columns other than the intercept are dropped with a note.
class DesignEncoder {
 public:
  struct Options {
    bool intercept = true;
    ReferenceLevel reference = ReferenceLevel::first;
    /// Divide numeric terms by their standard deviation.
    bool standardize = false;
  };

  static DesignEncoder fit(const Dataset& predictors, const Options& options);
  static DesignEncoder fit(const Dataset& predictors) { return fit(predictors, Options{}); }

  /// Encodes rows of `data`, which must contain every predictor by name.
  /// Categorical levels are matched by name; unseen levels encode as the reference.
  Eigen::MatrixXd encode(const Dataset& data) const;

  const std::vector<DesignTerm>& terms() const { return terms_; }
  std::size_t cols() const { return terms_.size(); }
  std::vector<std::string> labels() const;
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::vector<DesignTerm> terms_;
  std::vector<std::string> notes_;
};

}  // namespace synthweave
