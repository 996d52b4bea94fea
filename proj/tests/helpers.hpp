#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "synthweave/csv.hpp"
#include "synthweave/dataset.hpp"
#include "synthweave/rng.hpp"

namespace testing {

inline synthweave::Column cat(const std::string& name, const std::vector<std::string>& values,
                              std::vector<std::string> levels = {}) {
  if (levels.empty()) {
    for (const auto& v : values) {
      if (v != "NA" && std::find(levels.begin(), levels.end(), v) == levels.end()) levels.push_back(v);
    }
  }
  std::vector<std::int32_t> codes(values.size(), 0);
  std::vector<std::uint8_t> missing(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == "NA") {
      missing[i] = 1;
      continue;
    }
    codes[i] = static_cast<std::int32_t>(std::find(levels.begin(), levels.end(), values[i]) - levels.begin());
  }
  return synthweave::Column::categorical(name, levels, codes, missing);
}

inline synthweave::Column num(const std::string& name, const std::vector<double>& values,
                              std::vector<std::uint8_t> missing = {}) {
  return synthweave::Column::numeric(name, values, std::move(missing));
}

inline std::string to_csv(const synthweave::Dataset& d) {
  std::ostringstream out;
  synthweave::write_csv(d, out);
  return out.str();
}

}  // namespace testing
