#include "synthweave/sdc.hpp"

#include <chrono>
#include <ctime>
#include <unordered_map>

#include "synthweave/stats.hpp"

namespace synthweave {

namespace {

std::string key_of(const std::vector<const Column*>& cols, std::size_t row) {
  std::string key;
  for (const Column* c : cols) {
    if (c->missing(row)) {
      key += '\x01';
    } else {
      key += c->format(row);
    }
    key += '\x1f';
  }
  return key;
}

std::vector<const Column*> key_columns(const Dataset& data, std::span<const std::string> keys) {
  std::vector<const Column*> out;
  for (const auto& k : keys) out.push_back(&data.column(k));
  return out;
}

}  // namespace

UniqueRemoval remove_replicated_uniques(const Dataset& original, const Dataset& synthetic,
                                        std::span<const std::string> keys) {
  std::vector<std::string> names(keys.begin(), keys.end());
  if (names.empty()) {
    for (const auto& c : original.columns()) {
      if (synthetic.has(c.name())) names.push_back(c.name());
    }
  }
  for (const auto& k : names) {
    if (!original.has(k) || !synthetic.has(k)) throw DataError("key variable '" + k + "' is missing from a dataset");
  }
  const auto oc = key_columns(original, names);
  const auto sc = key_columns(synthetic, names);
  std::unordered_map<std::string, std::size_t> orig_count;
  for (std::size_t i = 0; i < original.n_rows(); ++i) ++orig_count[key_of(oc, i)];
  std::vector<std::string> syn_keys(synthetic.n_rows());
  std::unordered_map<std::string, std::size_t> syn_count;
  for (std::size_t i = 0; i < synthetic.n_rows(); ++i) {
    syn_keys[i] = key_of(sc, i);
    ++syn_count[syn_keys[i]];
  }
  UniqueRemoval out;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < synthetic.n_rows(); ++i) {
    auto it = orig_count.find(syn_keys[i]);
    if (it != orig_count.end() && it->second == 1 && syn_count[syn_keys[i]] == 1) {
      out.removed_rows.push_back(i);
    } else {
      keep.push_back(i);
    }
  }
  out.removed = out.removed_rows.size();
  out.filtered = synthetic.subset_rows(keep);
  return out;
}

Dataset add_noise(const Dataset& synthetic, std::span<const std::string> targets, double scale, Rng& rng) {
  if (!(scale >= 0.0)) throw DataError("noise scale must be non-negative");
  Dataset out = synthetic;
  for (const auto& t : targets) {
    const Column& col = synthetic.column(t);
    if (!col.is_numeric()) throw DataError("noise target '" + t + "' is not numeric");
    out.metadata()["noise_scale:" + t] = std::to_string(scale);
    if (scale == 0.0) continue;
    std::vector<double> observed;
    for (std::size_t i = 0; i < col.size(); ++i) {
      if (!col.missing(i)) observed.push_back(col.number(i));
    }
    const double sd = sample_sd(observed) * scale;
    Column noisy = col;
    for (std::size_t i = 0; i < col.size(); ++i) {
      if (!col.missing(i)) noisy.set_number(i, col.number(i) + rng.normal(0.0, sd));
    }
    out.replace_column(std::move(noisy));
  }
  return out;
}

Dataset stamp_synthetic(Dataset data, const std::string& label) {
  std::string text = label;
  if (text.empty()) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    text = std::string("generated ") + buf;
  }
  data.metadata()["synthetic_label"] = text;
  return data;
}

Dataset apply_sdc(const Dataset& original, const Dataset& synthetic, const SdcConfig& config, std::uint64_t seed,
                  SdcReport& report) {
  Dataset out = synthetic;
  if (config.remove_replicated_uniques) {
    UniqueRemoval r = remove_replicated_uniques(original, out, config.key_variables);
    report.replicated_uniques_removed = r.removed;
    report.key_variables = config.key_variables;
    auto meta = out.metadata();
    out = std::move(r.filtered);
    out.metadata() = meta;
  }
  if (!config.noise_targets.empty() && config.noise_scale > 0.0) {
    Rng rng(substream_seed(seed, 0, hash_name("sdc:noise")));
    out = add_noise(out, config.noise_targets, config.noise_scale, rng);
    report.noise_targets = config.noise_targets;
    report.noise_scale = config.noise_scale;
  }
  out = stamp_synthetic(std::move(out), config.label);
  report.label = out.metadata().at("synthetic_label");
  return out;
}

}  // namespace synthweave
