#include "synthweave/toy_census.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "synthweave/rng.hpp"

namespace synthweave {

namespace {

const std::vector<std::string> kSex = {"Male", "Female"};
const std::vector<std::string> kMar = {"Single", "Married", "Widowed"};
const std::vector<std::string> kRelat = {"Head", "Spouse", "Child", "Other"};
const std::vector<std::string> kOcc = {"None",         "Agriculture", "Mining",   "Manufacturing", "Construction",
                                       "Transport",    "Dealing",     "Domestic", "Professional"};
const std::vector<std::string> kOccPrefix = {"NON", "AGR", "MIN", "MAN", "CON", "TRA", "DEA", "DOM", "PRO"};
const std::vector<int> kOccFineCount = {1, 8, 5, 15, 6, 7, 8, 5, 6};
const std::vector<std::string> kServants = {"0", "1", "2", "3+"};
const std::vector<std::string> kEmploy = {"Employer", "Worker", "OwnAccount"};

enum Occ { kNone, kAgr, kMin, kMan, kCon, kTra, kDea, kDom, kPro };

std::size_t draw(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return weights.size() - 1;
}

std::vector<double> male_occupation(std::size_t region, int age) {
  std::vector<double> w = {0.05, 0.18, 0.08, 0.28, 0.10, 0.12, 0.10, 0.02, 0.07};
  switch (region) {
    case 0: w[kMin] *= 3.0; w[kMan] *= 1.3; break;
    case 1: w[kMan] *= 1.5; w[kMin] *= 1.5; break;
    case 2: w[kAgr] *= 2.0; break;
    case 3: w[kAgr] *= 0.2; w[kMin] *= 0.05; w[kDea] *= 1.6; w[kTra] *= 1.4; w[kPro] *= 1.5; break;
    case 4: w[kAgr] *= 1.3; break;
    default: w[kAgr] *= 1.6; w[kMin] *= 1.2; break;
  }
  if (age >= 65) w[kNone] *= 8.0;
  if (age < 18) w[kPro] *= 0.2;
  return w;
}

std::vector<double> female_occupation(std::size_t region, std::size_t mar, int age) {
  std::vector<double> w;
  if (mar == 0) {
    w = {0.25, 0.03, 0.005, 0.25, 0.002, 0.01, 0.08, 0.33, 0.04};
  } else if (mar == 1) {
    w = {0.85, 0.02, 0.001, 0.05, 0.001, 0.002, 0.04, 0.03, 0.006};
  } else {
    w = {0.60, 0.03, 0.001, 0.10, 0.001, 0.005, 0.10, 0.15, 0.013};
  }
  if (region == 3) w[kDom] *= 1.4;
  if (region == 0 || region == 1) w[kMan] *= 1.4;
  if (age >= 65) w[kNone] *= 4.0;
  return w;
}

}  // namespace

double interpolate_knots(const std::vector<std::pair<double, double>>& knots, double x) {
  if (knots.empty()) return 0.0;
  if (x <= knots.front().first) return knots.front().second;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (x <= knots[k].first) {
      const auto [x0, y0] = knots[k - 1];
      const auto [x1, y1] = knots[k];
      return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
  }
  return knots.back().second;
}

ToyCensus generate_toy_census(const ToyCensusSpec& spec) {
  if (spec.regions.size() != spec.region_weights.size() || spec.regions.empty()) {
    throw DataError("toy census: regions and region weights differ in length");
  }
  if (!(spec.pperroom_missing >= 0.0 && spec.pperroom_missing <= 1.0)) {
    throw DataError("toy census: pperroom missing share must lie in [0, 1]");
  }
  const std::size_t n = spec.n_rows;
  Rng rng(spec.seed);

  std::vector<std::string> occ_fine_levels;
  std::vector<std::vector<double>> fine_weights(kOcc.size());
  std::vector<std::int32_t> fine_offset(kOcc.size());
  for (std::size_t o = 0; o < kOcc.size(); ++o) {
    fine_offset[o] = static_cast<std::int32_t>(occ_fine_levels.size());
    for (int k = 0; k < kOccFineCount[o]; ++k) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%s%02d", kOccPrefix[o].c_str(), k);
      occ_fine_levels.emplace_back(buf);
      fine_weights[o].push_back(1.0 / std::pow(k + 1.0, 0.8));
    }
  }

  std::vector<double> age_weights(100);
  for (int a = 0; a < 100; ++a) age_weights[static_cast<std::size_t>(a)] = std::exp(-a / spec.age_scale);

  std::vector<std::int32_t> region(n), sex(n), mar(n), relat(n), occ(n), fine(n), servants(n), employ(n);
  std::vector<std::uint8_t> employ_missing(n, 0);
  std::vector<double> age(n), ppr(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = draw(rng, spec.region_weights);
    const std::size_t s = rng.uniform() < spec.female_share ? 1 : 0;
    const int a = static_cast<int>(draw(rng, age_weights));

    std::size_t m = 0;
    if (a >= 16) {
      double pw = interpolate_knots(spec.widowed_knots, a) * (s == 1 ? 1.3 : 0.7);
      double pm = interpolate_knots(spec.married_knots, a);
      pw = std::min(pw, 1.0 - pm);
      const double u = rng.uniform();
      m = u < pm ? 1 : (u < pm + pw ? 2 : 0);
    }

    std::vector<double> rw;
    if (a < 16) {
      rw = {0.0, 0.0, 0.95, 0.05};
    } else if (m == 1) {
      rw = s == 0 ? std::vector<double>{0.90, 0.02, 0.0, 0.08} : std::vector<double>{0.04, 0.88, 0.0, 0.08};
    } else if (m == 2) {
      rw = {0.6, 0.0, 0.1, 0.3};
    } else if (a < 30) {
      rw = {0.1, 0.0, 0.6, 0.3};
    } else {
      rw = {0.35, 0.0, 0.2, 0.45};
    }
    const std::size_t rel = draw(rng, rw);

    std::size_t o = kNone;
    if (a >= 14) o = draw(rng, s == 0 ? male_occupation(r, a) : female_occupation(r, m, a));
    const std::size_t f = draw(rng, fine_weights[o]);

    std::vector<double> sw;
    if (rel == 0) {
      switch (o) {
        case kPro: sw = {0.30, 0.35, 0.20, 0.15}; break;
        case kDea: sw = {0.60, 0.25, 0.10, 0.05}; break;
        case kAgr: sw = {0.75, 0.15, 0.07, 0.03}; break;
        default: sw = {0.93, 0.05, 0.015, 0.005}; break;
      }
    } else {
      sw = {0.90, 0.07, 0.02, 0.01};
    }
    const std::size_t sv = draw(rng, sw);

    std::size_t e = 0;
    if (o != kNone) {
      std::vector<double> ew;
      switch (o) {
        case kPro: ew = {0.20, 0.50, 0.30}; break;
        case kDea: ew = {0.15, 0.45, 0.40}; break;
        case kAgr: ew = {0.10, 0.80, 0.10}; break;
        default: ew = {0.05, 0.85, 0.10}; break;
      }
      if (a >= 40) ew[0] *= 2.0;
      e = draw(rng, ew);
    }

    double mu = 0.0;
    if (r == 3) mu += 0.25;
    if (r == 0) mu += 0.15;
    if (o == kPro) mu -= 0.4;
    if (o == kDea) mu -= 0.2;
    if (o == kMin) mu += 0.2;
    mu -= 0.1 * static_cast<double>(sv);
    if (rel == 2) mu += 0.1;
    const double p = std::max(0.1, std::round(std::exp(rng.normal(mu, 0.4)) * 100.0) / 100.0);

    region[i] = static_cast<std::int32_t>(r);
    sex[i] = static_cast<std::int32_t>(s);
    age[i] = a;
    mar[i] = static_cast<std::int32_t>(m);
    relat[i] = static_cast<std::int32_t>(rel);
    occ[i] = static_cast<std::int32_t>(o);
    fine[i] = fine_offset[o] + static_cast<std::int32_t>(f);
    servants[i] = static_cast<std::int32_t>(sv);
    employ[i] = static_cast<std::int32_t>(e);
    employ_missing[i] = o == kNone ? 1 : 0;
    ppr[i] = p;
  }

  // Exact missing count, rows chosen by a partial shuffle.
  std::vector<std::uint8_t> ppr_missing(n, 0);
  const auto n_missing = static_cast<std::size_t>(std::llround(spec.pperroom_missing * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t k = 0; k < n_missing; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.index(n - k));
    std::swap(idx[k], idx[j]);
    ppr_missing[idx[k]] = 1;
  }

  ToyCensus out;
  out.data = Dataset(n, "toy_census");
  out.data.add_column(Column::categorical("region", spec.regions, std::move(region)));
  out.data.add_column(Column::categorical("sex", kSex, std::move(sex)));
  out.data.add_column(Column::numeric("age", std::move(age)));
  out.data.add_column(Column::categorical("mar", kMar, std::move(mar)));
  out.data.add_column(Column::categorical("relat", kRelat, std::move(relat)));
  out.data.add_column(Column::categorical("occ", kOcc, std::move(occ)));
  out.data.add_column(Column::categorical("occ_fine", occ_fine_levels, std::move(fine)));
  out.data.add_column(Column::categorical("servants", kServants, std::move(servants)));
  out.data.add_column(Column::categorical("employ", kEmploy, std::move(employ), std::move(employ_missing)));
  out.data.add_column(Column::numeric("pperroom", std::move(ppr), std::move(ppr_missing)));
  out.schema = Schema::of(out.data);

  nlohmann::json occ_map = nlohmann::json::object();
  for (std::size_t o = 0; o < kOcc.size(); ++o) {
    nlohmann::json fines = nlohmann::json::array();
    for (int k = 0; k < kOccFineCount[o]; ++k) fines.push_back(occ_fine_levels[static_cast<std::size_t>(fine_offset[o] + k)]);
    occ_map[kOcc[o]] = fines;
  }
  auto knots_json = [](const std::vector<std::pair<double, double>>& k) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [x, y] : k) arr.push_back({x, y});
    return arr;
  };
  out.model = {
      {"generator", "toy_census"},
      {"n_rows", n},
      {"seed", spec.seed},
      {"female_share", spec.female_share},
      {"age", {{"support", {0, 99}}, {"weight", "exp(-age / " + std::to_string(spec.age_scale) + ")"}}},
      {"region", {{"levels", spec.regions}, {"weights", spec.region_weights}}},
      {"married_knots", knots_json(spec.married_knots)},
      {"widowed_knots", knots_json(spec.widowed_knots)},
      {"widowed_sex_multiplier", {{"Male", 0.7}, {"Female", 1.3}}},
      {"constraints", {"age < 16 => mar == Single", "occ == None <=> employ missing", "occ_fine nested in occ",
                       "age < 14 => occ == None"}},
      {"occ_fine_by_occ", occ_map},
      {"pperroom", {{"distribution", "lognormal(mu(region, occ, servants, relat), 0.4), rounded to 0.01"},
                    {"missing_share", spec.pperroom_missing},
                    {"missing_count", n_missing}}},
      {"schema", out.schema.to_json()},
  };
  return out;
}

}  // namespace synthweave
