#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "synthweave/cart.hpp"
#include "synthweave/dataset.hpp"
#include "synthweave/design.hpp"
#include "synthweave/kernels.hpp"
#include "synthweave/plan.hpp"
#include "synthweave/regression.hpp"
#include "synthweave/rng.hpp"

namespace synthweave {

struct FitSummary {
  std::string method;
  std::size_t n_fit = 0;
  std::vector<std::string> predictors;
  /// Named scalar results (coefficients, residual sd, leaf count, ...).
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::string> warnings;
};

/// A conditional distribution fitted on original data, sampled row by row
/// from (synthetic) predictor values.
class FittedConditional {
 public:
  virtual ~FittedConditional() = default;
  /// One draw per row of `predictors`; the output has the target's name and domain.
  virtual Column sample(const Dataset& predictors, Rng& rng) const = 0;
  const FitSummary& summary() const { return summary_; }

 protected:
  FitSummary summary_;
};

using ConditionalPtr = std::unique_ptr<FittedConditional>;

/// Bootstrap of the observed values. `n_rows` of `predictors` sets the draw count.
ConditionalPtr fit_sample(const Column& values);

ConditionalPtr fit_cart_conditional(const Column& target, const Dataset& predictors, const CartMethod& method,
                                    Execution exec = Execution::parallel);

/// Normal-scores regression; sampling maps Phi(z*) through the linear
/// interpolation of the sorted targets at their Blom plotting positions.
ConditionalPtr fit_normrank(const Column& target, const Dataset& predictors, const NormRankMethod& method = {});

ConditionalPtr fit_transform_normal(const Column& target, const Dataset& predictors, Transform transform);

ConditionalPtr fit_logit_conditional(const Column& target, const Dataset& predictors, const LogitMethod& method = {});

ConditionalPtr fit_multinomial_conditional(const Column& target, const Dataset& predictors,
                                           const MultinomialMethod& method = {});

/// Bootstrap within levels of `group`. The predictors passed to sample()
/// must contain a column named like `group`.
ConditionalPtr fit_nested(const Column& target, const Column& group);

/// Dispatches on the method. Nested methods look up their group column in `predictors`.
ConditionalPtr fit_conditional(const MethodSpec& method, const Column& target, const Dataset& predictors,
                               Execution exec = Execution::parallel);

double apply_transform(Transform transform, double v);
double invert_transform(Transform transform, double v);

}  // namespace synthweave
