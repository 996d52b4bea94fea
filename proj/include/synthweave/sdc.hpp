#pragma once

#include <span>
#include <string>
#include <vector>

#include "synthweave/dataset.hpp"
#include "synthweave/plan.hpp"
#include "synthweave/rng.hpp"

namespace synthweave {

struct UniqueRemoval {
  Dataset filtered;
  std::size_t removed = 0;
  /// Synthetic row indices that were dropped, ascending.
  std::vector<std::size_t> removed_rows;
};

/// Drops synthetic rows whose key tuple occurs exactly once in the original
/// and exactly once in the synthetic data. Keys are compared by their text
/// form; an empty key list means every column shared by both datasets.
UniqueRemoval remove_replicated_uniques(const Dataset& original, const Dataset& synthetic,
                                        std::span<const std::string> keys = {});

/// Adds N(0, (scale * sd)^2) to each non-missing value of the target
/// columns, sd being the column's own sample standard deviation. Records
/// "noise_scale:<column>" in the metadata.
Dataset add_noise(const Dataset& synthetic, std::span<const std::string> targets, double scale, Rng& rng);

/// Sets the "synthetic_label" metadata written as the CSV comment line. An
/// empty label is replaced by a UTC timestamp.
Dataset stamp_synthetic(Dataset data, const std::string& label);

struct SdcReport {
  std::size_t replicated_uniques_removed = 0;
  std::vector<std::string> key_variables;
  std::vector<std::string> noise_targets;
  double noise_scale = 0.0;
  std::string label;
};

/// Applies the plan's SDC section in order: unique removal, noise, label.
Dataset apply_sdc(const Dataset& original, const Dataset& synthetic, const SdcConfig& config, std::uint64_t seed,
                  SdcReport& report);

}  // namespace synthweave
