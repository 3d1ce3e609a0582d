#include "cbi/rng.hpp"

#include <cmath>
#include <random>

#include "cbi/error.hpp"

namespace cbi {

Rng path_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x43424931u};
  return Rng(seq);
}

std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (!std::isfinite(mean)) throw InfiniteMass("Poisson intensity is not finite");
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

}  // namespace cbi
