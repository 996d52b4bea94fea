#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace synthweave {

/// Portable random stream. Draws are defined here rather than through the
/// std distributions so that a seed gives identical output on every standard
/// library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);

  /// Standard normal draw (polar Box-Muller, one cached spare).
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finaliser, used to derive independent substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a hash of a name, used as a substream key.
std::uint64_t hash_name(std::string_view name);

/// Seed of the substream for (stratum, key) under a master seed.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stratum, std::uint64_t key);

}  // namespace synthweave
