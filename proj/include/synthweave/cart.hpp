#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synthweave/dataset.hpp"
#include "synthweave/kernels.hpp"
#include "synthweave/rng.hpp"

namespace synthweave {

struct CartParams {
  std::size_t min_bucket = 5;
  double complexity = 1e-8;
};

/// Side a value is sent to at an internal node.
enum class Side : std::uint8_t { unseen = 0, left = 1, right = 2 };

struct CartNode {
  std::int32_t left = -1;
  std::int32_t right = -1;
  /// Index into CartTree::predictor_names; -1 at leaves.
  std::int32_t predictor = -1;
  bool numeric_split = false;
  /// Numeric split: values <= threshold go left.
  double threshold = 0.0;
  /// Side for missing numeric values; unseen if the node had none at fit time.
  Side missing_side = Side::unseen;
  /// Categorical split: side per training level, with one extra slot for missing.
  std::vector<Side> level_side;
  /// Values unseen at fit time follow the child that received more rows.
  bool majority_left = true;
  /// Impurity decrease achieved by the split.
  double improvement = 0.0;
  /// Leaf donors: row indices into the training data.
  std::vector<std::uint32_t> donors;

  bool is_leaf() const { return left < 0; }
};

/// Binary recursive partition of the training rows. Categorical targets use
/// Gini impurity, numeric targets the within-node sum of squares.
struct CartTree {
  std::vector<CartNode> nodes;
  std::vector<std::string> predictor_names;
  std::vector<Kind> predictor_kinds;
  /// Training level tables of categorical predictors (empty for numeric ones).
  std::vector<std::vector<std::string>> predictor_levels;
  /// Training target; leaves draw donor values from it.
  Column target;
  double root_impurity = 0.0;
  CartParams params;

  std::size_t leaf_count() const;
  std::size_t depth() const;
};

/// Greedy exhaustive CART. A split is kept when it lowers impurity by more
/// than complexity * root impurity and leaves both children with at least
/// min_bucket rows. Categorical predictors with up to 12 present levels are
/// split over all level subsets; above that, levels are ordered by target
/// mean (or first-level share) and only contiguous splits are searched.
/// Predictor search runs across OpenMP threads for large nodes; both
/// execution modes grow the identical tree.
CartTree fit_cart(const Column& target, const Dataset& predictors, const CartParams& params,
                  Execution exec = Execution::parallel);

/// Leaf reached by each row of `data`.
std::vector<std::int32_t> cart_route(const CartTree& tree, const Dataset& data);

/// Routes each row and draws its value uniformly from the donors of its leaf.
Column cart_sample(const CartTree& tree, const Dataset& new_predictors, Rng& rng);

}  // namespace synthweave
