#pragma once

#include <cstdint>
#include <random>

#include "ridgeless/matops.hpp"

namespace ridgeless {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of substream `stream` under `seed`; distinct streams are decorrelated.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seed for repetition r: splitmix64(base ^ r).
std::uint64_t repetition_seed(std::uint64_t base_seed, std::uint64_t rep);

Engine make_engine(std::uint64_t seed);

/// rows x cols i.i.d. N(0,1), filled row by row.
Matrix standard_normal(Index rows, Index cols, Engine& engine);
Vector standard_normal(Index size, Engine& engine);

}  // namespace ridgeless
