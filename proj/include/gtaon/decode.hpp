#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gtaon/bitmatrix.hpp"
#include "gtaon/design.hpp"

namespace gtaon {

// Decoder output: sorted k-set of item indices.  Decoders that pad a short
// candidate list up to k also keep the unpadded selection in pre_pad_items.
struct Estimate {
    std::vector<std::size_t> items;          // sorted, unique
    std::vector<std::size_t> pre_pad_items;  // sorted; equals items when no padding occurred

    bool contains(std::size_t j) const {
        return std::binary_search(items.begin(), items.end(), j);
    }
};

struct RecoveryReport {
    std::size_t k = 0;  // |S|
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::size_t overlap = 0;
    bool exact = false;

    // max{|Shat \ S|, |S \ Shat|} <= alpha k
    bool alpha_approx(double alpha) const {
        return static_cast<double>(std::max(false_positives, false_negatives)) <=
               alpha * static_cast<double>(k);
    }

    // |S ∩ Shat| >= delta k
    bool weak(double delta) const {
        return static_cast<double>(overlap) >= delta * static_cast<double>(k);
    }
};

inline RecoveryReport score(const DefectiveSet& s, const Estimate& s_hat) {
    std::size_t overlap = 0;
    for (std::size_t j : s_hat.items) overlap += s.contains(j);
    RecoveryReport r;
    r.k = s.k();
    r.overlap = overlap;
    r.false_positives = s_hat.items.size() - overlap;
    r.false_negatives = s.k() - overlap;
    r.exact = (r.false_positives == 0 && r.false_negatives == 0);
    return r;
}

// Bit mask (p bits) of COMP candidates: items appearing in no negative test.
inline std::vector<std::uint64_t> comp_candidate_mask(const BitMatrix& x, const Outcomes& y) {
    if (y.n() != x.rows()) throw std::invalid_argument("comp_candidate_mask: dimension mismatch");
    std::vector<std::uint64_t> neg_union(x.words_per_row(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (!y.y[i]) x.or_row_into(i, neg_union.data());
    }
    // candidates = complement, with the tail past column p-1 cleared
    for (std::uint64_t& w : neg_union) w = ~w;
    const std::size_t tail = x.cols() & 63;
    if (tail != 0 && !neg_union.empty()) neg_union.back() &= (std::uint64_t(1) << tail) - 1;
    return neg_union;
}

namespace detail {

inline bool mask_get(std::span<const std::uint64_t> mask, std::size_t j) {
    return (mask[j >> 6] >> (j & 63)) & 1u;
}

// Lowest-index items not already in `est` until it reaches size k.
inline void pad_with_lowest(std::vector<std::size_t>& est, std::size_t p, std::size_t k,
                            std::span<const std::uint64_t> exclude_mask) {
    for (std::size_t j = 0; j < p && est.size() < k; ++j) {
        if (!mask_get(exclude_mask, j)) est.push_back(j);
    }
    std::sort(est.begin(), est.end());
}

}  // namespace detail

// COMP baseline: candidates = items in no negative test; estimate = the k
// lowest-index candidates, padded with lowest-index non-candidates when
// fewer than k candidates exist.
inline Estimate decode_comp(const BitMatrix& x, const Outcomes& y, std::size_t k) {
    const auto cand = comp_candidate_mask(x, y);
    Estimate est;
    est.items.reserve(k);
    for (std::size_t j = 0; j < x.cols() && est.items.size() < k; ++j) {
        if (detail::mask_get(cand, j)) est.items.push_back(j);
    }
    est.pre_pad_items = est.items;
    detail::pad_with_lowest(est.items, x.cols(), k, cand);
    return est;
}

// Among COMP candidates, ranks items by the number of positive tests that
// contain them and takes the top k (count desc, index asc); pads like COMP.
inline Estimate decode_rank_overlap(const BitMatrix& x, const Outcomes& y, std::size_t k) {
    const auto cand = comp_candidate_mask(x, y);
    std::vector<std::uint32_t> counts(x.cols(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (!y.y[i]) continue;
        const auto row = x.row(i);
        for (std::size_t w = 0; w < row.size(); ++w) {
            std::uint64_t bits = row[w];
            while (bits) {
                counts[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))]++;
                bits &= bits - 1;
            }
        }
    }
    std::vector<std::pair<std::uint32_t, std::size_t>> ranked;  // (count, index)
    for (std::size_t j = 0; j < x.cols(); ++j) {
        if (detail::mask_get(cand, j)) ranked.emplace_back(counts[j], j);
    }
    const std::size_t take = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                      ranked.end(), [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    Estimate est;
    est.items.reserve(k);
    for (std::size_t i = 0; i < take; ++i) est.items.push_back(ranked[i].second);
    std::sort(est.items.begin(), est.items.end());
    est.pre_pad_items = est.items;
    detail::pad_with_lowest(est.items, x.cols(), k, cand);
    return est;
}

namespace detail {

inline double binomial_coefficient_capped(std::size_t n, std::size_t k, double cap) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double value = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        value *= static_cast<double>(n - k + i) / static_cast<double>(i);
        if (value > cap) return cap + 1.0;
    }
    return value;
}

}  // namespace detail

// Exhaustive satisfying-set decoder: the lexicographically smallest k-set
// whose OR-outcomes reproduce Y exactly.  Guarded to C(p,k) <= 1e7.
inline Estimate decode_ml_exhaustive(const BitMatrix& x, const Outcomes& y, std::size_t k) {
    if (y.n() != x.rows()) throw std::invalid_argument("decode_ml_exhaustive: dimension mismatch");
    const std::size_t p = x.cols();
    if (k > p) throw std::invalid_argument("decode_ml_exhaustive: k > p");
    if (detail::binomial_coefficient_capped(p, k, 1e7) > 1e7) {
        throw std::invalid_argument("decode_ml_exhaustive: instance too large (C(p,k) > 1e7)");
    }

    std::vector<std::size_t> subset(k);
    for (std::size_t i = 0; i < k; ++i) subset[i] = i;
    while (true) {
        bool consistent = true;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (x.row_intersects(i, subset) != static_cast<bool>(y.y[i])) {
                consistent = false;
                break;
            }
        }
        if (consistent) return Estimate{subset, subset};

        // next combination in lexicographic order
        std::size_t idx = k;
        while (idx > 0 && subset[idx - 1] == p - k + idx - 1) --idx;
        if (idx == 0) break;
        ++subset[idx - 1];
        for (std::size_t i = idx; i < k; ++i) subset[i] = subset[i - 1] + 1;
    }
    // unreachable when Y was produced by the noiseless model on X
    throw std::runtime_error("decode_ml_exhaustive: no consistent set (corrupted input)");
}

// Predicted outcome of a fresh test: 1 iff the test includes any estimated
// defective.  Both argument lists must be sorted.
inline bool predict_extra_test(std::span<const std::size_t> s_hat,
                               std::span<const std::size_t> test_items) {
    auto a = s_hat.begin();
    auto b = test_items.begin();
    while (a != s_hat.end() && b != test_items.end()) {
        if (*a < *b) {
            ++a;
        } else if (*b < *a) {
            ++b;
        } else {
            return true;
        }
    }
    return false;
}

inline bool predict_extra_test(const Estimate& s_hat, const BitMatrix& x, std::size_t row) {
    return x.row_intersects(row, s_hat.items);
}

}  // namespace gtaon
