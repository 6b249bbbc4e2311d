#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ssn {

// Counter-based generator: the i-th draw of a stream is a pure function of
// (key, i), so a stream can be split into independent child streams without
// sharing state. Every random choice in the library goes through this type;
// results are therefore reproducible regardless of platform or thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ kSeedSalt)) {}

  // Independent child stream, e.g. one per outer iteration.
  CounterRng split(std::uint64_t stream) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  // Uniform on {0, ..., bound-1}; bound must be positive.
  std::size_t uniform_index(std::size_t bound);
  // Standard normal via Box-Muller (no cached second variate, keeps the
  // stream position a simple function of the number of calls).
  double normal();
  int sign() { return (next_u64() >> 63) ? 1 : -1; }

  // |count| indices drawn uniformly with replacement from [0, bound).
  std::vector<std::size_t> sample_with_replacement(std::size_t bound, std::size_t count);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  // Typedefs so the generator plugs into <algorithm>/<random> helpers.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

  static std::uint64_t mix(std::uint64_t z);

 private:
  struct RawKey {};
  CounterRng(std::uint64_t key, RawKey) : key_(key) {}

  static constexpr std::uint64_t kSeedSalt = 0x5D588B656C078965ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ssn
