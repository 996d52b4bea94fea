#include "synthweave/models.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "synthweave/stats.hpp"

namespace synthweave {

namespace {

void require_rows(const Column& target, const char* method) {
  if (target.size() == 0) throw FitError(std::string(method) + " for '" + target.name() + "': empty column");
  if (target.has_missing()) {
    throw FitError(std::string(method) + " for '" + target.name() + "': target has missing values");
  }
}

void require_numeric(const Column& target, const char* method) {
  if (!target.is_numeric()) throw FitError(std::string(method) + " needs a numeric target, '" + target.name() + "' is categorical");
}

Column draw_from(const Column& donors, std::span<const std::uint32_t> pool, std::size_t n, Rng& rng) {
  Column out = Column::empty_like(donors, n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint32_t d = pool[rng.index(pool.size())];
    if (donors.is_categorical()) {
      out.set_code(r, donors.code(d));
    } else {
      out.set_number(r, donors.number(d));
    }
  }
  return out;
}

std::vector<std::string> names_of(const Dataset& d) { return d.names(); }

void note_aliasing(FitSummary& s, const DesignEncoder& enc, const std::vector<bool>& aliased) {
  for (const auto& note : enc.notes()) s.warnings.push_back(note);
  for (std::size_t j = 0; j < aliased.size(); ++j) {
    if (aliased[j]) s.warnings.push_back("aliased design column '" + enc.terms()[j].label + "' dropped");
  }
}

void record_coefficients(FitSummary& s, const DesignEncoder& enc, const Eigen::VectorXd& beta) {
  for (std::size_t j = 0; j < enc.cols(); ++j) s.values.emplace_back(enc.terms()[j].label, beta(static_cast<Eigen::Index>(j)));
}

class SampleConditional final : public FittedConditional {
 public:
  explicit SampleConditional(const Column& values) : values_(values) {
    pool_.resize(values.size());
    for (std::size_t i = 0; i < pool_.size(); ++i) pool_[i] = static_cast<std::uint32_t>(i);
    summary_.method = "sample";
    summary_.n_fit = values.size();
  }
  Column sample(const Dataset& predictors, Rng& rng) const override {
    return draw_from(values_, pool_, predictors.n_rows(), rng);
  }

 private:
  Column values_;
  std::vector<std::uint32_t> pool_;
};

class CartConditional final : public FittedConditional {
 public:
  CartConditional(const Column& target, const Dataset& predictors, const CartMethod& m, Execution exec)
      : tree_(fit_cart(target, predictors, CartParams{m.min_bucket, m.complexity}, exec)) {
    summary_.method = "cart";
    summary_.n_fit = target.size();
    summary_.predictors = names_of(predictors);
    summary_.values = {{"leaves", static_cast<double>(tree_.leaf_count())},
                       {"depth", static_cast<double>(tree_.depth())}};
  }
  Column sample(const Dataset& predictors, Rng& rng) const override { return cart_sample(tree_, predictors, rng); }

 private:
  CartTree tree_;
};

class NormRankConditional final : public FittedConditional {
 public:
  NormRankConditional(const Column& target, const Dataset& predictors, const NormRankMethod& m)
      : encoder_(DesignEncoder::fit(predictors)), scale_(m.residual_scale), prototype_(Column::empty_like(target, 0)) {
    const auto y = target.numbers();
    const auto z = blom_scores(y);
    const Eigen::MatrixXd x = encoder_.encode(predictors);
    fit_ = fit_ols(x, z);
    sorted_.assign(y.begin(), y.end());
    std::sort(sorted_.begin(), sorted_.end());
    summary_.method = "normrank";
    summary_.n_fit = target.size();
    summary_.predictors = names_of(predictors);
    record_coefficients(summary_, encoder_, fit_.beta);
    summary_.values.emplace_back("residual_sd", fit_.residual_sd);
    note_aliasing(summary_, encoder_, fit_.aliased);
  }

  Column sample(const Dataset& predictors, Rng& rng) const override {
    const std::size_t n = predictors.n_rows();
    Column out = Column::empty_like(prototype_, n);
    const Eigen::VectorXd mu = encoder_.encode(predictors) * fit_.beta;
    const double m = static_cast<double>(sorted_.size());
    const double sd = fit_.residual_sd * scale_;
    for (std::size_t r = 0; r < n; ++r) {
      const double u = normal_cdf(mu(static_cast<Eigen::Index>(r)) + sd * rng.normal());
      // Invert the Blom plotting positions (i - 0.375) / (m + 0.25), i = 1..m.
      const double pos = u * (m + 0.25) + 0.375 - 1.0;
      double v;
      if (pos <= 0.0) {
        v = sorted_.front();
      } else if (pos >= m - 1.0) {
        v = sorted_.back();
      } else {
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        v = sorted_[lo] + frac * (sorted_[lo + 1] - sorted_[lo]);
      }
      out.set_number(r, v);
    }
    return out;
  }

 private:
  DesignEncoder encoder_;
  double scale_;
  Column prototype_;
  OlsFit fit_;
  std::vector<double> sorted_;
};

class TransformNormalConditional final : public FittedConditional {
 public:
  TransformNormalConditional(const Column& target, const Dataset& predictors, Transform t)
      : encoder_(DesignEncoder::fit(predictors)), transform_(t), prototype_(Column::empty_like(target, 0)) {
    std::vector<double> y(target.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double v = target.number(i);
      if (t == Transform::sqrt && v < 0.0) {
        throw FitError("square-root transform of '" + target.name() + "': negative value " + target.format(i) +
                       " in row " + std::to_string(i + 1));
      }
      y[i] = apply_transform(t, v);
    }
    fit_ = fit_ols(encoder_.encode(predictors), y);
    summary_.method = t == Transform::sqrt ? "sqrtnorm" : t == Transform::cuberoot ? "cubertnorm" : "normal";
    summary_.n_fit = target.size();
    summary_.predictors = names_of(predictors);
    record_coefficients(summary_, encoder_, fit_.beta);
    summary_.values.emplace_back("residual_sd", fit_.residual_sd);
    note_aliasing(summary_, encoder_, fit_.aliased);
  }

  Column sample(const Dataset& predictors, Rng& rng) const override {
    const std::size_t n = predictors.n_rows();
    Column out = Column::empty_like(prototype_, n);
    const Eigen::VectorXd mu = encoder_.encode(predictors) * fit_.beta;
    for (std::size_t r = 0; r < n; ++r) {
      out.set_number(r, invert_transform(transform_, rng.normal(mu(static_cast<Eigen::Index>(r)), fit_.residual_sd)));
    }
    return out;
  }

 private:
  DesignEncoder encoder_;
  Transform transform_;
  Column prototype_;
  OlsFit fit_;
};

std::vector<std::int32_t> present_levels(const Column& target) {
  std::vector<std::uint8_t> seen(target.level_count(), 0);
  for (std::size_t i = 0; i < target.size(); ++i) seen[static_cast<std::size_t>(target.code(i))] = 1;
  std::vector<std::int32_t> out;
  for (std::size_t l = 0; l < seen.size(); ++l) {
    if (seen[l]) out.push_back(static_cast<std::int32_t>(l));
  }
  return out;
}

class LogitConditional final : public FittedConditional {
 public:
  LogitConditional(const Column& target, const Dataset& predictors, const LogitMethod& m)
      : encoder_(DesignEncoder::fit(predictors)), prototype_(Column::empty_like(target, 0)) {
    if (!target.is_categorical()) throw FitError("logit needs a categorical target, '" + target.name() + "' is numeric");
    const auto present = present_levels(target);
    if (present.size() != 2) {
      throw FitError("logit needs a binary target; '" + target.name() + "' has " + std::to_string(present.size()) +
                     " observed levels");
    }
    low_ = present[0];
    high_ = present[1];
    std::vector<double> y(target.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = target.code(i) == high_ ? 1.0 : 0.0;
    LogitOptions opts;
    opts.max_iter = static_cast<int>(m.max_iter);
    opts.tol = m.tol;
    fit_ = fit_logit(encoder_.encode(predictors), y, {}, opts);
    beta_ = fit_.beta;
    for (Eigen::Index j = 0; j < beta_.size(); ++j) {
      if (std::isnan(beta_(j))) beta_(j) = 0.0;
    }
    summary_.method = "logit";
    summary_.n_fit = target.size();
    summary_.predictors = names_of(predictors);
    record_coefficients(summary_, encoder_, beta_);
    summary_.values.emplace_back("iterations", fit_.iterations);
    note_aliasing(summary_, encoder_, fit_.aliased);
    for (const auto& w : fit_.warnings) summary_.warnings.push_back("'" + target.name() + "': " + w);
  }

  Column sample(const Dataset& predictors, Rng& rng) const override {
    const std::size_t n = predictors.n_rows();
    Column out = Column::empty_like(prototype_, n);
    const Eigen::VectorXd eta = encoder_.encode(predictors) * beta_;
    for (std::size_t r = 0; r < n; ++r) {
      out.set_code(r, rng.uniform() < logistic(eta(static_cast<Eigen::Index>(r))) ? high_ : low_);
    }
    return out;
  }

  const LogitFit& fit() const { return fit_; }

 private:
  DesignEncoder encoder_;
  Column prototype_;
  LogitFit fit_;
  Eigen::VectorXd beta_;
  std::int32_t low_ = 0;
  std::int32_t high_ = 1;
};

class MultinomialConditional final : public FittedConditional {
 public:
  MultinomialConditional(const Column& target, const Dataset& predictors, const MultinomialMethod& m)
      : encoder_(DesignEncoder::fit(predictors)), prototype_(Column::empty_like(target, 0)) {
    if (!target.is_categorical()) {
      throw FitError("multinomial needs a categorical target, '" + target.name() + "' is numeric");
    }
    if (present_levels(target).size() < 2) {
      throw FitError("multinomial for '" + target.name() + "' needs at least two observed levels");
    }
    MultinomialOptions opts;
    opts.max_iter = static_cast<int>(m.max_iter);
    opts.tol = m.tol;
    try {
      fit_ = fit_multinomial(encoder_.encode(predictors), target.codes(), target.level_count(), opts);
    } catch (const FitError& e) {
      throw FitError("multinomial for '" + target.name() + "': " + e.what());
    }
    summary_.method = "multinomial";
    summary_.n_fit = target.size();
    summary_.predictors = names_of(predictors);
    for (std::size_t q = 1; q < fit_.present.size(); ++q) {
      const auto l = fit_.present[q];
      for (std::size_t j = 0; j < encoder_.cols(); ++j) {
        summary_.values.emplace_back(target.levels()[static_cast<std::size_t>(l)] + ":" + encoder_.terms()[j].label,
                                     fit_.beta(static_cast<Eigen::Index>(j), l));
      }
    }
    summary_.values.emplace_back("iterations", fit_.iterations);
    note_aliasing(summary_, encoder_, fit_.aliased);
    for (const auto& w : fit_.warnings) summary_.warnings.push_back("'" + target.name() + "': " + w);
  }

  Column sample(const Dataset& predictors, Rng& rng) const override {
    const std::size_t n = predictors.n_rows();
    Column out = Column::empty_like(prototype_, n);
    const Eigen::MatrixXd prob = multinomial_probabilities(fit_, encoder_.encode(predictors));
    for (std::size_t r = 0; r < n; ++r) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::int32_t chosen = fit_.present.back();
      for (auto l : fit_.present) {
        acc += prob(static_cast<Eigen::Index>(r), l);
        if (u < acc) {
          chosen = l;
          break;
        }
      }
      out.set_code(r, chosen);
    }
    return out;
  }

 private:
  DesignEncoder encoder_;
  Column prototype_;
  MultinomialFit fit_;
};

class NestedConditional final : public FittedConditional {
 public:
  NestedConditional(const Column& target, const Column& group) : target_(target), group_name_(group.name()) {
    if (!group.is_categorical()) throw FitError("grouping column '" + group.name() + "' must be categorical");
    if (group.size() != target.size()) throw FitError("grouping column '" + group.name() + "' differs in length");
    group_levels_ = group.levels();
    pools_.resize(group_levels_.size() + 1);
    for (std::size_t i = 0; i < target.size(); ++i) {
      const std::size_t slot = group.missing(i) ? group_levels_.size() : static_cast<std::size_t>(group.code(i));
      pools_[slot].push_back(static_cast<std::uint32_t>(i));
    }
    summary_.method = "nested";
    summary_.n_fit = target.size();
    summary_.predictors = {group.name()};

    if (target.is_categorical()) {
      std::vector<std::int32_t> owner(target.level_count(), -1);
      std::vector<std::string> spanning;
      for (std::size_t i = 0; i < target.size(); ++i) {
        auto& o = owner[static_cast<std::size_t>(target.code(i))];
        const std::int32_t g = group.missing(i) ? -2 : group.code(i);
        if (o == -1) {
          o = g;
        } else if (o != g && o != -3) {
          o = -3;
          spanning.push_back(target.levels()[static_cast<std::size_t>(target.code(i))]);
        }
      }
      if (!spanning.empty()) {
        std::string list;
        for (std::size_t k = 0; k < spanning.size() && k < 10; ++k) list += (k ? ", " : "") + spanning[k];
        if (spanning.size() > 10) list += ", ...";
        summary_.warnings.push_back("'" + target.name() + "' is not nested in '" + group.name() + "': " +
                                    std::to_string(spanning.size()) + " level(s) occur in several groups (" + list +
                                    "); sampling within observed pairs");
      }
    }
  }

  Column sample(const Dataset& predictors, Rng& rng) const override {
    const Column& g = predictors.column(group_name_);
    const std::size_t n = predictors.n_rows();
    std::vector<std::int32_t> map(g.level_count(), -1);
    std::unordered_map<std::string, std::int32_t> index;
    for (std::size_t l = 0; l < group_levels_.size(); ++l) index.emplace(group_levels_[l], static_cast<std::int32_t>(l));
    for (std::size_t l = 0; l < g.level_count(); ++l) {
      auto it = index.find(g.levels()[l]);
      if (it != index.end()) map[l] = it->second;
    }
    Column out = Column::empty_like(target_, n);
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t slot;
      if (g.missing(r)) {
        slot = group_levels_.size();
      } else {
        const auto m = map[static_cast<std::size_t>(g.code(r))];
        if (m < 0 || pools_[static_cast<std::size_t>(m)].empty()) {
          throw FitError("nested synthesis of '" + target_.name() + "': no observed donors for " + group_name_ +
                         " = '" + g.levels()[static_cast<std::size_t>(g.code(r))] + "'");
        }
        slot = static_cast<std::size_t>(m);
      }
      const auto& pool = pools_[slot];
      if (pool.empty()) {
        throw FitError("nested synthesis of '" + target_.name() + "': no observed donors for missing " + group_name_);
      }
      const std::uint32_t d = pool[rng.index(pool.size())];
      if (target_.is_categorical()) {
        out.set_code(r, target_.code(d));
      } else {
        out.set_number(r, target_.number(d));
      }
    }
    return out;
  }

 private:
  Column target_;
  std::string group_name_;
  std::vector<std::string> group_levels_;
  std::vector<std::vector<std::uint32_t>> pools_;
};

}  // namespace

double apply_transform(Transform transform, double v) {
  switch (transform) {
    case Transform::sqrt:
      return std::sqrt(v);
    case Transform::cuberoot:
      return std::cbrt(v);
    case Transform::identity:
      break;
  }
  return v;
}

double invert_transform(Transform transform, double v) {
  switch (transform) {
    case Transform::sqrt:
      return v * v;
    case Transform::cuberoot:
      return v * v * v;
    case Transform::identity:
      break;
  }
  return v;
}

ConditionalPtr fit_sample(const Column& values) {
  require_rows(values, "sample");
  return std::make_unique<SampleConditional>(values);
}

ConditionalPtr fit_cart_conditional(const Column& target, const Dataset& predictors, const CartMethod& method,
                                    Execution exec) {
  require_rows(target, "cart");
  return std::make_unique<CartConditional>(target, predictors, method, exec);
}

ConditionalPtr fit_normrank(const Column& target, const Dataset& predictors, const NormRankMethod& method) {
  require_rows(target, "normrank");
  require_numeric(target, "normrank");
  return std::make_unique<NormRankConditional>(target, predictors, method);
}

ConditionalPtr fit_transform_normal(const Column& target, const Dataset& predictors, Transform transform) {
  require_rows(target, "normal");
  require_numeric(target, "normal");
  return std::make_unique<TransformNormalConditional>(target, predictors, transform);
}

ConditionalPtr fit_logit_conditional(const Column& target, const Dataset& predictors, const LogitMethod& method) {
  require_rows(target, "logit");
  return std::make_unique<LogitConditional>(target, predictors, method);
}

ConditionalPtr fit_multinomial_conditional(const Column& target, const Dataset& predictors,
                                           const MultinomialMethod& method) {
  require_rows(target, "multinomial");
  return std::make_unique<MultinomialConditional>(target, predictors, method);
}

ConditionalPtr fit_nested(const Column& target, const Column& group) {
  require_rows(target, "nested");
  return std::make_unique<NestedConditional>(target, group);
}

ConditionalPtr fit_conditional(const MethodSpec& method, const Column& target, const Dataset& predictors,
                               Execution exec) {
  return std::visit(
      [&](const auto& m) -> ConditionalPtr {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SampleMethod>) {
          return fit_sample(target);
        } else if constexpr (std::is_same_v<M, CartMethod>) {
          return fit_cart_conditional(target, predictors, m, exec);
        } else if constexpr (std::is_same_v<M, NormRankMethod>) {
          return fit_normrank(target, predictors, m);
        } else if constexpr (std::is_same_v<M, TransformNormalMethod>) {
          return fit_transform_normal(target, predictors, m.transform);
        } else if constexpr (std::is_same_v<M, LogitMethod>) {
          return fit_logit_conditional(target, predictors, m);
        } else if constexpr (std::is_same_v<M, MultinomialMethod>) {
          return fit_multinomial_conditional(target, predictors, m);
        } else {
          if (!predictors.has(m.group_column)) {
            throw FitError("nested method for '" + target.name() + "' needs grouping column '" + m.group_column + "'");
          }
          return fit_nested(target, predictors.column(m.group_column));
        }
      },
      method);
}

}  // namespace synthweave
