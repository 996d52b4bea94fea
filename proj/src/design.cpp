#include "synthweave/design.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace synthweave {

namespace {

constexpr const char* kMissingLevel = "NA";

}  // namespace

DesignEncoder DesignEncoder::fit(const Dataset& predictors, const Options& options) {
  DesignEncoder enc;
  if (options.intercept) enc.terms_.push_back({DesignTerm::Type::intercept, "", "(Intercept)", "", 0.0, 1.0});
  const std::size_t n = predictors.n_rows();

  for (const auto& col : predictors.columns()) {
    if (col.is_categorical()) {
      const std::size_t l = col.level_count();
      std::vector<std::size_t> counts(l + 1, 0);  // slot l = missing
      for (std::size_t i = 0; i < n; ++i) ++counts[col.missing(i) ? l : static_cast<std::size_t>(col.code(i))];
      std::vector<std::size_t> present;
      for (std::size_t k = 0; k <= l; ++k) {
        if (counts[k] > 0) present.push_back(k);
      }
      if (present.size() <= 1) {
        enc.notes_.push_back("dropped constant predictor '" + col.name() + "'");
        continue;
      }
      std::size_t ref = present.front();
      if (options.reference == ReferenceLevel::modal) {
        for (auto k : present) {
          if (counts[k] > counts[ref]) ref = k;
        }
      }
      for (auto k : present) {
        if (k == ref) continue;
        const std::string level = k == l ? std::string(kMissingLevel) : col.levels()[k];
        enc.terms_.push_back({DesignTerm::Type::dummy, col.name(), col.name() + level, level, 0.0, 1.0});
      }
      continue;
    }

    double sum = 0.0;
    std::size_t observed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!col.missing(i)) {
        sum += col.number(i);
        ++observed;
      }
    }
    const std::size_t n_missing = n - observed;
    if (observed > 0) {
      const double m = sum / static_cast<double>(observed);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!col.missing(i)) ss += (col.number(i) - m) * (col.number(i) - m);
      }
      const double sd = observed > 1 ? std::sqrt(ss / static_cast<double>(observed - 1)) : 0.0;
      if (sd > 0.0) {
        enc.terms_.push_back({DesignTerm::Type::numeric, col.name(), col.name(), "", m,
                              options.standardize ? sd : 1.0});
      } else {
        enc.notes_.push_back("dropped constant predictor '" + col.name() + "'");
      }
    }
    if (n_missing > 0 && observed > 0) {
      enc.terms_.push_back(
          {DesignTerm::Type::missing_indicator, col.name(), col.name() + "NA", kMissingLevel, 0.0, 1.0});
    } else if (n_missing > 0) {
      enc.notes_.push_back("dropped all-missing predictor '" + col.name() + "'");
    }
  }
  return enc;
}

std::vector<std::string> DesignEncoder::labels() const {
  std::vector<std::string> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(t.label);
  return out;
}

Eigen::MatrixXd DesignEncoder::encode(const Dataset& data) const {
  const auto n = static_cast<Eigen::Index>(data.n_rows());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(terms_.size()));
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const DesignTerm& term = terms_[t];
    auto out = x.col(static_cast<Eigen::Index>(t));
    switch (term.type) {
      case DesignTerm::Type::intercept:
        out.setOnes();
        break;
      case DesignTerm::Type::numeric: {
        const Column& col = data.column(term.variable);
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto r = static_cast<std::size_t>(i);
          out(i) = col.missing(r) ? 0.0 : (col.number(r) - term.center) / term.scale;
        }
        break;
      }
      case DesignTerm::Type::missing_indicator: {
        const Column& col = data.column(term.variable);
        for (Eigen::Index i = 0; i < n; ++i) out(i) = col.missing(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
        break;
      }
      case DesignTerm::Type::dummy: {
        const Column& col = data.column(term.variable);
        if (term.level == kMissingLevel && !col.find_level(kMissingLevel)) {
          for (Eigen::Index i = 0; i < n; ++i) out(i) = col.missing(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
          break;
        }
        auto code = col.find_level(term.level);
        if (!code) break;
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto r = static_cast<std::size_t>(i);
          out(i) = !col.missing(r) && col.code(r) == *code ? 1.0 : 0.0;
        }
        break;
      }
    }
  }
  return x;
}

}  // namespace synthweave
