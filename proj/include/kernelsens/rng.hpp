#pragma once

#include <cstdint>
#include <random>

namespace kernelsens {

using Rng = std::mt19937_64;

// Independent random streams derived from one master seed.
enum class Stream : std::uint64_t {
    Data = 1,
    Weights = 2,
    Noise = 3,
    TestPoint = 4,
    Subsample = 5,
    Centering = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed derivation: the result depends only on the arguments,
// never on the order in which streams are requested.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                    std::uint64_t b = 0, std::uint64_t c = 0) {
    return Rng(derive_seed(master, stream, a, b, c));
}

}  // namespace kernelsens
