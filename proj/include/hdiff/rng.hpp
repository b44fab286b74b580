#pragma once

#include <array>
#include <cstdint>

namespace hdiff {

// Philox 4x32-10 counter-based generator. A block is a pure function of
// (counter, key), so draws can be indexed at random and streams separated
// by counter ranges without any shared state.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key);
};

// Uniform double in (0, 1], built from 53 random bits.
double philox_uniform(std::uint64_t bits);

// Standard Gaussian pair from one Philox block.
// Layout: key = seed, counter = (block index, stream id).
std::array<double, 2> gaussian_block(std::uint64_t seed, std::uint64_t stream_id,
                                     std::uint64_t block_index);

// n-th standard Gaussian of a stream (two per block).
double gaussian_at(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t n);

}  // namespace hdiff
