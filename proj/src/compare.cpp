#include "synthweave/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "synthweave/stats.hpp"

namespace synthweave {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<double> observed_sorted(const Column& c) {
  std::vector<double> v;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.missing(i)) v.push_back(c.number(i));
  }
  std::sort(v.begin(), v.end());
  return v;
}

NumericSummary summarize(const Column& c) {
  NumericSummary s;
  s.missing = c.missing_count();
  const auto v = observed_sorted(c);
  if (v.empty()) return s;
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q3 = quantile_sorted(v, 0.75);
  s.mean = mean(v);
  return s;
}

// Level name per row with missing as "NA"; levels in order of first appearance
// over the original level table then the synthetic one.
struct Labels {
  std::vector<std::string> levels;
  std::vector<std::int32_t> a;
  std::vector<std::int32_t> b;
};

Labels label_rows(const Column& ca, const Column& cb) {
  Labels out;
  std::unordered_map<std::string, std::int32_t> index;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = index.emplace(s, static_cast<std::int32_t>(out.levels.size()));
    if (inserted) out.levels.push_back(s);
    return it->second;
  };
  for (const auto& l : ca.levels()) intern(l);
  for (const auto& l : cb.levels()) intern(l);
  const bool na = ca.has_missing() || cb.has_missing();
  const std::int32_t na_code = na ? intern(ca.find_level("NA") || cb.find_level("NA") ? "<NA>" : "NA") : -1;
  auto code_of = [&](const Column& c, std::size_t i) {
    return c.missing(i) ? na_code : index.at(c.levels()[static_cast<std::size_t>(c.code(i))]);
  };
  for (std::size_t i = 0; i < ca.size(); ++i) out.a.push_back(code_of(ca, i));
  for (std::size_t i = 0; i < cb.size(); ++i) out.b.push_back(code_of(cb, i));
  return out;
}

}  // namespace

std::vector<UnivariateComparison> compare_univariate(const Dataset& original, const Dataset& synthetic,
                                                     std::size_t histogram_bins) {
  std::vector<UnivariateComparison> out;
  for (const auto& ca : original.columns()) {
    if (!synthetic.has(ca.name())) continue;
    const Column& cb = synthetic.column(ca.name());
    if (ca.kind() != cb.kind()) throw DataError("variable '" + ca.name() + "' differs in kind between the datasets");
    UnivariateComparison cmp;
    cmp.variable = ca.name();
    cmp.kind = ca.kind();
    const double na = std::max<double>(1.0, static_cast<double>(ca.size()));
    const double nb = std::max<double>(1.0, static_cast<double>(cb.size()));

    if (ca.is_categorical()) {
      const Labels lab = label_rows(ca, cb);
      std::vector<double> fa(lab.levels.size(), 0.0);
      std::vector<double> fb(lab.levels.size(), 0.0);
      for (auto c : lab.a) fa[static_cast<std::size_t>(c)] += 1.0;
      for (auto c : lab.b) fb[static_cast<std::size_t>(c)] += 1.0;
      for (std::size_t l = 0; l < lab.levels.size(); ++l) {
        cmp.shares.push_back({lab.levels[l], fa[l] / na, fb[l] / nb});
      }
    } else {
      cmp.original = summarize(ca);
      cmp.synthetic = summarize(cb);
      const auto va = observed_sorted(ca);
      const auto vb = observed_sorted(cb);
      if (!va.empty()) {
        const double lo = va.front();
        const double hi = va.back();
        for (std::size_t k = 0; k <= histogram_bins; ++k) {
          cmp.breaks.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(histogram_bins));
        }
        std::vector<double> ha(histogram_bins, 0.0);
        std::vector<double> hb(histogram_bins, 0.0);
        auto bin = [&](double v) {
          if (!(hi > lo)) return std::size_t{0};
          const double pos = (v - lo) / (hi - lo) * static_cast<double>(histogram_bins);
          return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(histogram_bins - 1)));
        };
        for (double v : va) ha[bin(v)] += 1.0;
        for (double v : vb) hb[bin(v)] += 1.0;
        for (std::size_t k = 0; k < histogram_bins; ++k) {
          cmp.shares.push_back({"[" + fmt(cmp.breaks[k]) + "," + fmt(cmp.breaks[k + 1]) + (k + 1 == histogram_bins ? "]" : ")"),
                                ha[k] / na, hb[k] / nb});
        }
        if (!vb.empty()) cmp.range_exceeded = vb.front() < lo || vb.back() > hi;
      }
      if (ca.has_missing() || cb.has_missing()) {
        cmp.shares.push_back({"NA", static_cast<double>(ca.missing_count()) / na,
                              static_cast<double>(cb.missing_count()) / nb});
      }
    }
    for (const auto& s : cmp.shares) {
      cmp.max_abs_difference = std::max(cmp.max_abs_difference, std::abs(s.original - s.synthetic));
    }
    out.push_back(std::move(cmp));
  }
  return out;
}

std::vector<std::pair<double, double>> BivariateComparison::level_percentages(const std::string& level) const {
  auto it = std::find(outcome_levels.begin(), outcome_levels.end(), level);
  if (it == outcome_levels.end()) throw DataError("'" + level + "' is not a level of '" + outcome_variable + "'");
  const auto k = static_cast<std::size_t>(it - outcome_levels.begin());
  std::vector<std::pair<double, double>> out;
  for (const auto& b : bands) out.emplace_back(b.pct_original[k], b.pct_synthetic[k]);
  return out;
}

BivariateComparison compare_bivariate(const Dataset& original, const Dataset& synthetic,
                                      const std::string& band_variable, const std::string& outcome_variable,
                                      std::span<const double> cuts) {
  for (const auto* d : {&original, &synthetic}) {
    if (!d->has(band_variable)) throw DataError("unknown column '" + band_variable + "'");
    if (!d->has(outcome_variable)) throw DataError("unknown column '" + outcome_variable + "'");
  }
  const Column& oa = original.column(outcome_variable);
  const Column& ob = synthetic.column(outcome_variable);
  if (!oa.is_categorical() || !ob.is_categorical()) {
    throw DataError("outcome '" + outcome_variable + "' must be categorical");
  }
  const Column& ba = original.column(band_variable);
  const Column& bb = synthetic.column(band_variable);
  if (ba.kind() != bb.kind()) throw DataError("variable '" + band_variable + "' differs in kind between the datasets");

  BivariateComparison out;
  out.band_variable = band_variable;
  out.outcome_variable = outcome_variable;
  const Labels outcome = label_rows(oa, ob);
  out.outcome_levels = outcome.levels;

  std::vector<std::string> band_labels;
  std::vector<std::int32_t> band_a;
  std::vector<std::int32_t> band_b;
  if (ba.is_categorical()) {
    Labels lab = label_rows(ba, bb);
    band_labels = std::move(lab.levels);
    band_a = std::move(lab.a);
    band_b = std::move(lab.b);
  } else {
    std::vector<double> c(cuts.begin(), cuts.end());
    if (c.empty()) {
      const auto v = observed_sorted(ba);
      for (int q = 1; q < 5 && !v.empty(); ++q) {
        const double br = quantile_sorted(v, q / 5.0);
        if (c.empty() || br > c.back()) c.push_back(br);
      }
    }
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (std::size_t k = 0; k <= c.size(); ++k) {
      if (c.empty()) {
        band_labels.push_back("all");
      } else if (k == 0) {
        band_labels.push_back("<" + fmt(c[0]));
      } else if (k == c.size()) {
        band_labels.push_back(">=" + fmt(c[k - 1]));
      } else {
        band_labels.push_back("[" + fmt(c[k - 1]) + "," + fmt(c[k]) + ")");
      }
    }
    const bool na = ba.has_missing() || bb.has_missing();
    const auto na_code = static_cast<std::int32_t>(band_labels.size());
    if (na) band_labels.push_back("NA");
    auto band_of = [&](const Column& col, std::size_t i) {
      if (col.missing(i)) return na_code;
      return static_cast<std::int32_t>(std::upper_bound(c.begin(), c.end(), col.number(i)) - c.begin());
    };
    for (std::size_t i = 0; i < ba.size(); ++i) band_a.push_back(band_of(ba, i));
    for (std::size_t i = 0; i < bb.size(); ++i) band_b.push_back(band_of(bb, i));
  }

  const std::size_t nl = out.outcome_levels.size();
  std::vector<std::vector<double>> ca(band_labels.size(), std::vector<double>(nl, 0.0));
  std::vector<std::vector<double>> cb(band_labels.size(), std::vector<double>(nl, 0.0));
  for (std::size_t i = 0; i < band_a.size(); ++i) {
    ca[static_cast<std::size_t>(band_a[i])][static_cast<std::size_t>(outcome.a[i])] += 1.0;
  }
  for (std::size_t i = 0; i < band_b.size(); ++i) {
    cb[static_cast<std::size_t>(band_b[i])][static_cast<std::size_t>(outcome.b[i])] += 1.0;
  }
  for (std::size_t k = 0; k < band_labels.size(); ++k) {
    BandShares bs;
    bs.band = band_labels[k];
    for (double v : ca[k]) bs.n_original += v;
    for (double v : cb[k]) bs.n_synthetic += v;
    for (std::size_t l = 0; l < nl; ++l) {
      bs.pct_original.push_back(bs.n_original > 0 ? 100.0 * ca[k][l] / bs.n_original : 0.0);
      bs.pct_synthetic.push_back(bs.n_synthetic > 0 ? 100.0 * cb[k][l] / bs.n_synthetic : 0.0);
      if (bs.n_original > 0 && bs.n_synthetic > 0) {
        out.max_abs_difference =
            std::max(out.max_abs_difference, std::abs(bs.pct_original[l] - bs.pct_synthetic[l]));
      }
    }
    out.bands.push_back(std::move(bs));
  }
  return out;
}

}  // namespace synthweave
