#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace minipath {

// All randomness comes from std::mt19937_64, whose output sequence is fixed by
// the standard. The distributions below are written out so results do not
// depend on the standard library implementation.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed for a named consumer of the root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Uniform double in [0, 1) with 53 random bits.
double uniform_unit(Rng& rng);

double uniform_real(Rng& rng, double lo, double hi);

template <typename Container>
void shuffle(Container& c, Rng& rng) {
  for (std::size_t i = c.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(c[i - 1], c[j]);
  }
}

}  // namespace minipath
