#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gtaon/bitmatrix.hpp"
#include "gtaon/decode.hpp"
#include "gtaon/design.hpp"

namespace gtaon {

// One SAFFRON repetition: a uniformly chosen subset of floor(p/k) items,
// each local index i encoded over 2v tests as binary(i) followed by its
// bitwise complement, so every codeword has weight exactly v.
struct SaffronBlock {
    std::vector<std::size_t> items;  // chosen subset, ascending (global -> local by position)
    std::size_t v = 0;

    std::size_t tests() const { return 2 * v; }

    // Bit j of the codeword for local index i (MSB-first binary in the first
    // half, complemented in the second half).
    bool codeword_bit(std::size_t local, std::size_t j) const {
        const std::size_t half = j < v ? j : j - v;
        const bool bit = (local >> (v - 1 - half)) & 1u;
        return j < v ? bit : !bit;
    }
};

// c independent blocks; total test cost 2vc with v = ceil(log2(p/k)) and
// subset size floor(p/k).
inline std::vector<SaffronBlock> build_saffron(std::size_t p, std::size_t k, std::size_t c,
                                               SplitMix64& rng) {
    if (k < 1 || k > p) throw std::invalid_argument("build_saffron: need 1 <= k <= p");
    if (c < 1) throw std::invalid_argument("build_saffron: need c >= 1");
    const std::size_t m = p / k;
    if (m < 2) throw std::invalid_argument("build_saffron: degenerate block (p/k < 2)");
    std::size_t v = 0;
    while ((k << v) < p) ++v;  // smallest v with 2^v >= p/k

    std::vector<SaffronBlock> blocks;
    blocks.reserve(c);
    for (std::size_t b = 0; b < c; ++b) {
        SaffronBlock block;
        block.v = v;
        block.items = sample_defective_set(PopulationParams(p, m), rng).items;
        blocks.push_back(std::move(block));
    }
    return blocks;
}

// Materializes the concatenated 2vc x p test matrix.
inline BitMatrix saffron_matrix(std::span<const SaffronBlock> blocks, std::size_t p) {
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.tests();
    BitMatrix x(total, p);
    std::size_t base = 0;
    for (const auto& block : blocks) {
        for (std::size_t local = 0; local < block.items.size(); ++local) {
            for (std::size_t j = 0; j < block.tests(); ++j) {
                if (block.codeword_bit(local, j)) x.set(base + j, block.items[local]);
            }
        }
        base += block.tests();
    }
    return x;
}

// Outcomes of one block under the noiseless OR model, without materializing
// the matrix: the OR of the codewords of the block's defective local indices.
inline std::vector<std::uint8_t> saffron_block_outcomes(const SaffronBlock& block,
                                                        const DefectiveSet& s) {
    std::vector<std::uint8_t> out(block.tests(), 0);
    auto a = block.items.begin();
    auto b = s.items.begin();
    while (a != block.items.end() && b != s.items.end()) {
        if (*a < *b) {
            ++a;
        } else if (*b < *a) {
            ++b;
        } else {
            const std::size_t local = static_cast<std::size_t>(a - block.items.begin());
            for (std::size_t j = 0; j < block.tests(); ++j) {
                out[j] |= block.codeword_bit(local, j);
            }
            ++a;
            ++b;
        }
    }
    return out;
}

struct DdResult {
    std::optional<std::size_t> identified;        // item index, or nullopt = "I don't know"
    std::vector<std::size_t> block_positive_counts;
};

// Per block: 0 positives -> no defective, skip; exactly v positives ->
// exactly one defective, whose local index is spelled by the first v test
// results; more than v -> two or more defectives, skip.  A positive count in
// (0, v) is impossible under the noiseless model and signals corrupted input.
inline DdResult decode_saffron(std::span<const SaffronBlock> blocks,
                               std::span<const std::uint8_t> outcomes) {
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.tests();
    if (outcomes.size() != total) {
        throw std::invalid_argument("decode_saffron: outcome length mismatch");
    }

    DdResult result;
    result.block_positive_counts.reserve(blocks.size());
    std::size_t base = 0;
    for (const auto& block : blocks) {
        const auto slice = outcomes.subspan(base, block.tests());
        base += block.tests();
        std::size_t positives = 0;
        for (std::uint8_t bit : slice) positives += bit;
        result.block_positive_counts.push_back(positives);

        if (positives == 0 || positives > block.v) continue;
        if (positives < block.v) {
            throw std::runtime_error("decode_saffron: positive count in (0, v) violates the model");
        }
        std::size_t local = 0;
        for (std::size_t j = 0; j < block.v; ++j) {
            local = (local << 1) | slice[j];
        }
        if (local >= block.items.size()) {
            throw std::runtime_error("decode_saffron: decoded index outside the block");
        }
        if (!result.identified) result.identified = block.items[local];
    }
    return result;
}

enum class WitnessResult { Found, NotFound, Indeterminate };

// Searches for a k-set disjoint from S that is consistent with (X, Y).
// Exhaustive over the complement of S when C(p-k, k) <= budget; otherwise
// samples `budget` random disjoint k-sets and reports Indeterminate if none
// is consistent.
inline WitnessResult dd_negative_witness(const BitMatrix& x, const Outcomes& y,
                                         const DefectiveSet& s, std::uint64_t budget,
                                         SplitMix64& rng) {
    const std::size_t p = x.cols();
    const std::size_t k = s.k();
    std::vector<std::size_t> complement;
    complement.reserve(p - k);
    for (std::size_t j = 0; j < p; ++j) {
        if (!s.contains(j)) complement.push_back(j);
    }
    if (complement.size() < k) return WitnessResult::NotFound;

    auto consistent = [&](std::span<const std::size_t> subset) {
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (x.row_intersects(i, subset) != static_cast<bool>(y.y[i])) return false;
        }
        return true;
    };

    const double cap = static_cast<double>(budget);
    if (detail::binomial_coefficient_capped(complement.size(), k, cap) <= cap) {
        std::vector<std::size_t> idx(k);
        std::vector<std::size_t> subset(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            for (std::size_t i = 0; i < k; ++i) subset[i] = complement[idx[i]];
            if (consistent(subset)) return WitnessResult::Found;
            std::size_t j = k;
            while (j > 0 && idx[j - 1] == complement.size() - k + j - 1) --j;
            if (j == 0) break;
            ++idx[j - 1];
            for (std::size_t i = j; i < k; ++i) idx[i] = idx[i - 1] + 1;
        }
        return WitnessResult::NotFound;
    }

    for (std::uint64_t t = 0; t < budget; ++t) {
        const auto pick =
            sample_defective_set(PopulationParams(complement.size(), k), rng);
        std::vector<std::size_t> subset(k);
        for (std::size_t i = 0; i < k; ++i) subset[i] = complement[pick.items[i]];
        if (consistent(subset)) return WitnessResult::Found;
    }
    return WitnessResult::Indeterminate;
}

}  // namespace gtaon
