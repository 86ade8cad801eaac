#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace rts {

// Seedable generator with a fully specified output sequence: MT19937-64 (whose
// output is fixed by the C++ standard) feeding a 53-bit uniform mapping and a
// Box-Muller Gaussian. std::normal_distribution is avoided because its
// algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Standard normal.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

}  // namespace rts
