#include "ssn/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ssn {

std::uint64_t CounterRng::mix(std::uint64_t z) {
  // splitmix64 finalizer
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng CounterRng::split(std::uint64_t stream) const {
  return CounterRng(mix(key_ ^ mix(stream + 0xA0761D6478BD642FULL)), RawKey{});
}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t c = counter_++;
  return mix(key_ + mix(c));
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t CounterRng::uniform_index(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_index: bound must be positive");
  // Lemire's multiply-shift with rejection; unbiased.
  const auto b = static_cast<std::uint64_t>(bound);
  const std::uint64_t threshold = (0 - b) % b;
  while (true) {
    const std::uint64_t r = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(r) * b;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::size_t>(m >> 64);
  }
}

double CounterRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> CounterRng::sample_with_replacement(std::size_t bound, std::size_t count) {
  std::vector<std::size_t> out(count);
  for (auto& v : out) v = uniform_index(bound);
  return out;
}

}  // namespace ssn
