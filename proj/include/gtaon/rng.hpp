#pragma once

#include <cstdint>
#include <limits>

namespace gtaon {

// SplitMix64 (Steele, Lea, Flood 2014).  Counter-based: the state advances
// by a fixed odd constant and each output is a bijective mix of the state,
// so jumping to any point in the stream is O(1) and two generators seeded
// differently produce independent-looking streams.  Satisfies
// std::uniform_random_bit_generator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform double in (0, 1]; never returns 0, so log(uniform_pos()) is safe.
    double uniform_pos() {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    bool coin() { return ((*this)() >> 63) != 0; }

    // Unbiased integer in [0, bound) via rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::uint64_t state_;
};

// SplitMix64 output function applied to a single word; used as a mixing
// primitive for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Per-trial seed derivation: seed = mix(mix(mix(master) ^ cell) ^ trial).
// Every (master, cell, trial) triple maps to a fixed seed, so trial results
// do not depend on scheduling or execution order.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t cell_id,
                                std::uint64_t trial_id) {
    return mix64(mix64(mix64(master_seed) ^ cell_id) ^ trial_id);
}

}  // namespace gtaon
