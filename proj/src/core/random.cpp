#include "autoens/core/random.hpp"

namespace autoens {

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t state = 0x9E3779B97F4A7C15ULL;
    for (std::uint64_t part : parts) {
        state ^= part + 0x9E3779B97F4A7C15ULL + (state << 6) + (state >> 2);
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        state = z ^ (z >> 31);
    }
    return state;
}

}  // namespace autoens
