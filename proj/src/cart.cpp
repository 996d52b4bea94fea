#include "synthweave/cart.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace synthweave {

namespace {

constexpr std::size_t kExhaustiveLevels = 12;
constexpr std::size_t kParallelNodeRows = 4096;

struct Predictor {
  bool numeric = false;
  const double* values = nullptr;
  const std::uint8_t* missing = nullptr;
  const std::int32_t* codes = nullptr;
  std::size_t levels = 0;  // categorical: training levels; slot `levels` holds missing
  std::vector<std::uint32_t> order;  // numeric: presorted rows, missing last
};

// Running target statistics of a row set.
struct Stats {
  double n = 0.0;
  double sum = 0.0;
  double sumsq = 0.0;
  std::vector<double> counts;
};

struct Split {
  double gain = 0.0;
  bool found = false;
  bool numeric = false;
  double threshold = 0.0;
  Side missing_side = Side::unseen;
  std::vector<Side> level_side;
};

class Grower {
 public:
  Grower(const Column& target, const Dataset& predictors, const CartParams& params, Execution exec)
      : target_(target), params_(params), exec_(exec), n_(target.size()) {
    categorical_ = target.is_categorical();
    k_ = target.level_count();
    if (!categorical_) {
      double m = 0.0;
      for (std::size_t i = 0; i < n_; ++i) m += target.number(i);
      m /= static_cast<double>(n_);
      y_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) y_[i] = target.number(i) - m;
    }
    for (const auto& col : predictors.columns()) {
      Predictor p;
      p.missing = col.missing_mask().data();
      if (col.is_numeric()) {
        p.numeric = true;
        p.values = col.numbers().data();
        p.order.resize(n_);
        std::iota(p.order.begin(), p.order.end(), 0u);
        std::stable_sort(p.order.begin(), p.order.end(), [&](std::uint32_t a, std::uint32_t b) {
          if (p.missing[a] || p.missing[b]) return !p.missing[a] && p.missing[b];
          return p.values[a] < p.values[b];
        });
      } else {
        p.codes = col.codes().data();
        p.levels = col.level_count();
      }
      preds_.push_back(std::move(p));
    }
    rows_.resize(n_);
    std::iota(rows_.begin(), rows_.end(), 0u);
    goes_left_.assign(n_, 0);
    scratch_.resize(n_);
  }

  void grow(CartTree& tree) {
    Stats root = stats_of(0, n_);
    tree.root_impurity = impurity(root);
    const double min_gain = (params_.complexity + 1e-10) * tree.root_impurity;

    struct Pending {
      std::int32_t node;
      std::size_t begin, end;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, n_}};
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      const std::size_t size = cur.end - cur.begin;
      SplitResult best;
      const Stats st = stats_of(cur.begin, cur.end);
      const double node_imp = impurity(st);
      if (size >= 2 * params_.min_bucket && node_imp > 1e-12 * tree.root_impurity && node_imp > 0.0) {
        best = search(cur.begin, cur.end, st, node_imp);
      }
      if (!best.found || !(best.gain > min_gain)) {
        tree.nodes[static_cast<std::size_t>(cur.node)].donors.assign(rows_.begin() + static_cast<std::ptrdiff_t>(cur.begin),
                                                                      rows_.begin() + static_cast<std::ptrdiff_t>(cur.end));
        continue;
      }

      std::size_t n_left = 0;
      for (std::size_t i = cur.begin; i < cur.end; ++i) {
        const std::uint32_t r = rows_[i];
        goes_left_[r] = route_left(best, r) ? 1 : 0;
        n_left += goes_left_[r];
      }
      partition(rows_, cur.begin, cur.end);
      for (auto& p : preds_) {
        if (p.numeric) partition(p.order, cur.begin, cur.end);
      }

      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      CartNode& node = tree.nodes[static_cast<std::size_t>(cur.node)];
      node.left = left_id;
      node.right = left_id + 1;
      node.predictor = best.predictor;
      node.numeric_split = best.numeric;
      node.threshold = best.threshold;
      node.missing_side = best.missing_side;
      node.level_side = std::move(best.level_side);
      node.majority_left = 2 * n_left >= size;
      node.improvement = best.gain;
      stack.push_back({left_id + 1, cur.begin + n_left, cur.end});
      stack.push_back({left_id, cur.begin, cur.begin + n_left});
    }
  }

 private:
  struct SplitResult : Split {
    std::int32_t predictor = -1;
  };

  Stats empty_stats() const {
    Stats s;
    if (categorical_) s.counts.assign(k_, 0.0);
    return s;
  }

  void add(Stats& s, std::uint32_t r) const {
    s.n += 1.0;
    if (categorical_) {
      s.counts[static_cast<std::size_t>(target_.code(r))] += 1.0;
    } else {
      s.sum += y_[r];
      s.sumsq += y_[r] * y_[r];
    }
  }

  static void merge(Stats& into, const Stats& from, double sign = 1.0) {
    into.n += sign * from.n;
    into.sum += sign * from.sum;
    into.sumsq += sign * from.sumsq;
    for (std::size_t k = 0; k < into.counts.size(); ++k) into.counts[k] += sign * from.counts[k];
  }

  double impurity(const Stats& s) const {
    if (s.n <= 0.0) return 0.0;
    if (categorical_) {
      double sq = 0.0;
      for (double c : s.counts) sq += c * c;
      return std::max(0.0, s.n - sq / s.n);
    }
    return std::max(0.0, s.sumsq - s.sum * s.sum / s.n);
  }

  Stats stats_of(std::size_t begin, std::size_t end) const {
    Stats s = empty_stats();
    for (std::size_t i = begin; i < end; ++i) add(s, rows_[i]);
    return s;
  }

  bool route_left(const SplitResult& split, std::uint32_t r) const {
    const Predictor& p = preds_[static_cast<std::size_t>(split.predictor)];
    Side side;
    if (split.numeric) {
      side = p.missing[r] ? split.missing_side : (p.values[r] <= split.threshold ? Side::left : Side::right);
    } else {
      side = split.level_side[p.missing[r] ? p.levels : static_cast<std::size_t>(p.codes[r])];
    }
    return side == Side::left;
  }

  SplitResult search(std::size_t begin, std::size_t end, const Stats& total, double node_imp) {
    const auto m = static_cast<std::int64_t>(preds_.size());
    std::vector<Split> found(preds_.size());
    const bool par = exec_ == Execution::parallel && end - begin >= kParallelNodeRows && m > 1;
#pragma omp parallel for schedule(dynamic, 1) if (par)
    for (std::int64_t j = 0; j < m; ++j) {
      const auto& p = preds_[static_cast<std::size_t>(j)];
      found[static_cast<std::size_t>(j)] =
          p.numeric ? numeric_split(p, begin, end, total, node_imp) : categorical_split(p, begin, end, node_imp);
    }
    SplitResult best;
    for (std::size_t j = 0; j < found.size(); ++j) {
      if (found[j].found && (!best.found || found[j].gain > best.gain)) {
        static_cast<Split&>(best) = std::move(found[j]);
        best.predictor = static_cast<std::int32_t>(j);
      }
    }
    return best;
  }

  bool sizes_ok(double nl, double nr) const {
    const auto mb = static_cast<double>(params_.min_bucket);
    return nl >= mb && nr >= mb;
  }

  Split numeric_split(const Predictor& p, std::size_t begin, std::size_t end, const Stats& total,
                      double node_imp) const {
    Split best;
    std::size_t last = end;
    while (last > begin && p.missing[p.order[last - 1]]) --last;
    Stats miss = empty_stats();
    for (std::size_t i = last; i < end; ++i) add(miss, p.order[i]);
    Stats observed = total;
    merge(observed, miss, -1.0);

    auto consider = [&](const Stats& l, const Stats& r, double threshold, Side miss_side) {
      if (!sizes_ok(l.n, r.n)) return;
      const double gain = node_imp - impurity(l) - impurity(r);
      if (!best.found || gain > best.gain) {
        best.found = true;
        best.gain = gain;
        best.numeric = true;
        best.threshold = threshold;
        best.missing_side = miss_side;
      }
    };

    if (miss.n > 0.0 && observed.n > 0.0) {
      consider(observed, miss, std::numeric_limits<double>::infinity(), Side::right);
    }
    Stats left = empty_stats();
    for (std::size_t i = begin; i + 1 < last; ++i) {
      add(left, p.order[i]);
      const double v = p.values[p.order[i]];
      const double next = p.values[p.order[i + 1]];
      if (!(v < next)) continue;
      double cut = v + (next - v) / 2.0;
      if (!(cut < next)) cut = v;
      Stats right = observed;
      merge(right, left, -1.0);
      if (miss.n > 0.0) {
        Stats lm = left;
        merge(lm, miss);
        consider(lm, right, cut, Side::left);
        Stats rm = right;
        merge(rm, miss);
        consider(left, rm, cut, Side::right);
      } else {
        consider(left, right, cut, Side::unseen);
      }
    }
    return best;
  }

  // Ordering score used when there are too many levels for exhaustive search.
  double level_score(const Stats& s) const {
    if (categorical_) return s.counts.empty() ? 0.0 : s.counts[0] / s.n;
    return s.sum / s.n;
  }

  Split categorical_split(const Predictor& p, std::size_t begin, std::size_t end, double node_imp) const {
    Split best;
    std::vector<Stats> per(p.levels + 1, empty_stats());
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t r = rows_[i];
      add(per[p.missing[r] ? p.levels : static_cast<std::size_t>(p.codes[r])], r);
    }
    std::vector<std::size_t> present;
    for (std::size_t l = 0; l <= p.levels; ++l) {
      if (per[l].n > 0.0) present.push_back(l);
    }
    if (present.size() < 2) return best;

    auto record = [&](double gain, const std::vector<std::uint8_t>& right_of_present) {
      best.found = true;
      best.gain = gain;
      best.numeric = false;
      best.level_side.assign(p.levels + 1, Side::unseen);
      for (std::size_t q = 0; q < present.size(); ++q) {
        best.level_side[present[q]] = right_of_present[q] ? Side::right : Side::left;
      }
    };

    Stats all = empty_stats();
    for (auto l : present) merge(all, per[l]);

    if (present.size() <= kExhaustiveLevels) {
      // Gray-code walk over subsets of present[1..] sent right.
      const std::size_t free = present.size() - 1;
      const std::uint64_t total = std::uint64_t{1} << free;
      std::vector<std::uint8_t> right_of(present.size(), 0);
      Stats right = empty_stats();
      for (std::uint64_t g = 1; g < total; ++g) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(g));
        const std::size_t q = bit + 1;
        right_of[q] ^= 1;
        merge(right, per[present[q]], right_of[q] ? 1.0 : -1.0);
        Stats left = all;
        merge(left, right, -1.0);
        if (!sizes_ok(left.n, right.n)) continue;
        const double gain = node_imp - impurity(left) - impurity(right);
        if (!best.found || gain > best.gain) record(gain, right_of);
      }
      return best;
    }

    std::vector<std::size_t> ordered(present.size());
    std::iota(ordered.begin(), ordered.end(), 0);
    std::stable_sort(ordered.begin(), ordered.end(), [&](std::size_t a, std::size_t b) {
      return level_score(per[present[a]]) < level_score(per[present[b]]);
    });
    Stats left = empty_stats();
    for (std::size_t c = 0; c + 1 < ordered.size(); ++c) {
      merge(left, per[present[ordered[c]]]);
      Stats right = all;
      merge(right, left, -1.0);
      if (!sizes_ok(left.n, right.n)) continue;
      const double gain = node_imp - impurity(left) - impurity(right);
      if (!best.found || gain > best.gain) {
        std::vector<std::uint8_t> right_of(present.size(), 1);
        for (std::size_t d = 0; d <= c; ++d) right_of[ordered[d]] = 0;
        record(gain, right_of);
      }
    }
    return best;
  }

  void partition(std::vector<std::uint32_t>& arr, std::size_t begin, std::size_t end) {
    std::size_t w = begin;
    std::size_t s = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t r = arr[i];
      if (goes_left_[r]) {
        arr[w++] = r;
      } else {
        scratch_[s++] = r;
      }
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(s),
              arr.begin() + static_cast<std::ptrdiff_t>(w));
  }

  const Column& target_;
  CartParams params_;
  Execution exec_;
  std::size_t n_;
  bool categorical_ = false;
  std::size_t k_ = 0;
  std::vector<double> y_;
  std::vector<Predictor> preds_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
};

}  // namespace

std::size_t CartTree::leaf_count() const {
  std::size_t c = 0;
  for (const auto& node : nodes) c += node.is_leaf() ? 1 : 0;
  return c;
}

std::size_t CartTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const CartNode& node = nodes[static_cast<std::size_t>(id)];
    if (!node.is_leaf()) {
      stack.push_back({node.left, d + 1});
      stack.push_back({node.right, d + 1});
    }
  }
  return deepest;
}

CartTree fit_cart(const Column& target, const Dataset& predictors, const CartParams& params, Execution exec) {
  if (target.size() == 0) throw FitError("cannot fit a tree for '" + target.name() + "' on zero rows");
  if (target.has_missing()) throw FitError("tree target '" + target.name() + "' has missing values");
  if (predictors.n_cols() > 0 && predictors.n_rows() != target.size()) {
    throw FitError("tree predictors and target '" + target.name() + "' differ in length");
  }
  if (params.min_bucket == 0) throw FitError("min_bucket must be positive");
  if (target.is_categorical() && target.level_count() == 0) {
    throw FitError("categorical target '" + target.name() + "' has no levels");
  }

  CartTree tree;
  tree.params = params;
  tree.target = target;
  for (const auto& col : predictors.columns()) {
    tree.predictor_names.push_back(col.name());
    tree.predictor_kinds.push_back(col.kind());
    tree.predictor_levels.push_back(col.is_categorical() ? col.levels() : std::vector<std::string>{});
  }
  Grower grower(target, predictors, params, exec);
  grower.grow(tree);
  return tree;
}

namespace {

// Per-predictor lookup from the new data's encoding to the training encoding.
struct Binding {
  const Column* column = nullptr;
  std::vector<std::int32_t> level_map;  // new code -> training code, -1 unseen
};

std::vector<Binding> bind(const CartTree& tree, const Dataset& data) {
  std::vector<Binding> out(tree.predictor_names.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const Column& col = data.column(tree.predictor_names[j]);
    if (col.kind() != tree.predictor_kinds[j]) {
      throw FitError("predictor '" + col.name() + "' changed kind since the tree was fitted");
    }
    out[j].column = &col;
    if (col.is_categorical()) {
      std::unordered_map<std::string, std::int32_t> index;
      const auto& lv = tree.predictor_levels[j];
      for (std::size_t l = 0; l < lv.size(); ++l) index.emplace(lv[l], static_cast<std::int32_t>(l));
      out[j].level_map.reserve(col.level_count());
      for (const auto& name : col.levels()) {
        auto it = index.find(name);
        out[j].level_map.push_back(it == index.end() ? -1 : it->second);
      }
    }
  }
  return out;
}

std::int32_t route_row(const CartTree& tree, const std::vector<Binding>& bound, std::size_t r) {
  std::int32_t id = 0;
  for (;;) {
    const CartNode& node = tree.nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return id;
    const Binding& b = bound[static_cast<std::size_t>(node.predictor)];
    const Column& col = *b.column;
    Side side = Side::unseen;
    if (node.numeric_split) {
      if (col.missing(r)) {
        side = node.missing_side;
      } else {
        side = col.number(r) <= node.threshold ? Side::left : Side::right;
      }
    } else {
      std::int32_t code = -1;
      if (col.missing(r)) {
        code = static_cast<std::int32_t>(node.level_side.size()) - 1;
      } else {
        code = b.level_map[static_cast<std::size_t>(col.code(r))];
      }
      if (code >= 0) side = node.level_side[static_cast<std::size_t>(code)];
    }
    if (side == Side::unseen) side = node.majority_left ? Side::left : Side::right;
    id = side == Side::left ? node.left : node.right;
  }
}

}  // namespace

std::vector<std::int32_t> cart_route(const CartTree& tree, const Dataset& data) {
  const auto bound = bind(tree, data);
  std::vector<std::int32_t> out(data.n_rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = route_row(tree, bound, r);
  return out;
}

Column cart_sample(const CartTree& tree, const Dataset& new_predictors, Rng& rng) {
  const std::size_t n = new_predictors.n_rows();
  const auto bound = bind(tree, new_predictors);
  Column out = Column::empty_like(tree.target, n);
  for (std::size_t r = 0; r < n; ++r) {
    const CartNode& leaf = tree.nodes[static_cast<std::size_t>(route_row(tree, bound, r))];
    const std::uint32_t donor = leaf.donors[rng.index(leaf.donors.size())];
    if (tree.target.is_categorical()) {
      out.set_code(r, tree.target.code(donor));
    } else {
      out.set_number(r, tree.target.number(donor));
    }
  }
  return out;
}

}  // namespace synthweave
