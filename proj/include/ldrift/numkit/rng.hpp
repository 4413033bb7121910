#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace ldrift::numkit {

// xoshiro256** seeded through splitmix64. Callers own an instance and pass it
// explicitly; nothing in the library keeps a global generator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0x5eedULL);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (both variates are used).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  std::vector<std::size_t> permutation(std::size_t n);
  // Independent child stream, e.g. one per model.
  Rng fork();

  bool operator==(const Rng&) const = default;

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ldrift::numkit
