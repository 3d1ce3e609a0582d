#pragma once

#include <cstdint>

#include "cbi/measures.hpp"

namespace cbi {

/// Independent stream for path `index` of a run seeded with `seed`.
Rng path_rng(std::uint64_t seed, std::uint64_t index);

/// Poisson draw that consumes no randomness when the mean is zero.
std::uint64_t poisson(Rng& rng, double mean);

}  // namespace cbi
