#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace autoens {

using Rng = std::mt19937_64;

/// Mixes several integers into one well-spread seed (splitmix64 steps).
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

}  // namespace autoens
