#pragma once

// Brute-force oracles: independent reference computations used to validate
// the closed-form implementations.  Everything here enumerates or samples
// directly from the model definitions and never calls the code under test
// except where the comparison itself requires it.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "gtaon/design.hpp"
#include "gtaon/detect.hpp"
#include "gtaon/rng.hpp"

namespace gtaon {

namespace oracle_detail {

inline std::vector<std::uint32_t> k_subset_masks(std::size_t p, std::size_t k) {
    std::vector<std::uint32_t> masks;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        std::uint32_t mask = 0;
        for (std::size_t i : idx) mask |= (1u << i);
        masks.push_back(mask);
        std::size_t j = k;
        while (j > 0 && idx[j - 1] == p - k + j - 1) --j;
        if (j == 0) break;
        ++idx[j - 1];
        for (std::size_t i = j; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
    return masks;
}

}  // namespace oracle_detail

// chi^2(P||Q) = E_Q[(P/Q)^2] - 1 by full enumeration of all 2^(np) test
// matrices and 2^n outcome vectors.  Requires n*p <= 24.
inline double chi2_enumeration(std::size_t p, std::size_t k, std::size_t n) {
    if (k < 1 || k > p) throw std::invalid_argument("chi2_enumeration: need 1 <= k <= p");
    if (n == 0) return 0.0;
    if (n * p > 24) throw std::invalid_argument("chi2_enumeration: enumeration guard 2^(np) <= 2^24");
    const double q = solve_nu(k).q;
    const auto subsets = oracle_detail::k_subset_masks(p, k);
    const long double n_subsets = static_cast<long double>(subsets.size());
    const long double two_n = std::exp2(static_cast<long double>(n));

    long double second_moment = 0.0L;
    std::vector<std::size_t> consistent(std::size_t(1) << n);
    const std::uint64_t x_limit = std::uint64_t(1) << (n * p);
    for (std::uint64_t xbits = 0; xbits < x_limit; ++xbits) {
        const int ones = std::popcount(xbits);
        const long double px =
            std::pow(static_cast<long double>(q), ones) *
            std::pow(static_cast<long double>(1.0 - q), static_cast<long double>(n * p) - ones);
        std::fill(consistent.begin(), consistent.end(), 0);
        for (std::uint32_t s : subsets) {
            std::size_t pattern = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint32_t row =
                    static_cast<std::uint32_t>((xbits >> (i * p)) & ((1u << p) - 1));
                if (row & s) pattern |= (std::size_t(1) << i);
            }
            consistent[pattern]++;
        }
        // E_Q over Y (uniform): each Y has weight 2^{-n}; P/Q = 2^n N / C(p,k)
        for (std::size_t ybits = 0; ybits < consistent.size(); ++ybits) {
            const long double ratio = two_n * static_cast<long double>(consistent[ybits]) / n_subsets;
            second_moment += px * (1.0L / two_n) * ratio * ratio;
        }
    }
    return static_cast<double>(second_moment - 1.0L);
}

// Monte Carlo estimate of E_Q[I_{S0} I_{S'}] for |S0 ∩ S'| = k - l.
inline double pair_consistency_monte_carlo(std::size_t p, std::size_t k, std::size_t l,
                                           std::size_t n, std::size_t samples,
                                           SplitMix64& rng) {
    // S0 = {0,...,k-1}; S' overlaps S0 in the first k-l items and takes its
    // remaining l items from {k,...,k+l-1}.
    std::vector<std::size_t> s0(k), s1(k);
    for (std::size_t i = 0; i < k; ++i) s0[i] = i;
    for (std::size_t i = 0; i < k - l; ++i) s1[i] = i;
    for (std::size_t i = 0; i < l; ++i) s1[k - l + i] = k + i;
    const DefectiveSet set0{s0, p}, set1{s1, p};

    const DesignSpec spec{DesignKind::Bernoulli, PopulationParams(p, k), n};
    std::size_t hits = 0;
    for (std::size_t t = 0; t < samples; ++t) {
        const auto [x, y] = sample_null(spec, rng);
        const Outcomes y0 = apply_model(x, set0);
        if (y0.y != y.y) continue;
        const Outcomes y1 = apply_model(x, set1);
        if (y1.y == y.y) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(samples);
}

struct OracleCheck {
    std::string name;
    bool pass = false;
    double max_delta = 0.0;  // largest observed |actual - expected| (units per check)
    std::string detail;
};

// Runs the brute-force oracles against the closed-form implementations.
inline std::vector<OracleCheck> run_oracle_suite(std::size_t max_p, std::size_t max_k,
                                                 std::size_t max_n, std::uint64_t seed) {
    std::vector<OracleCheck> checks;

    {
        OracleCheck c{"chi2_exact vs full enumeration", true, 0.0, ""};
        std::ostringstream detail;
        for (std::size_t p = 2; p <= max_p; ++p) {
            for (std::size_t k = 1; k <= std::min(max_k, p); ++k) {
                for (std::size_t n = 0; n <= max_n && n * p <= 24; ++n) {
                    const double expected = chi2_enumeration(p, k, n);
                    const double actual = chi2_exact(p, k, n).value;
                    const double delta = std::abs(actual - expected);
                    c.max_delta = std::max(c.max_delta, delta);
                    if (delta > 1e-9) {
                        c.pass = false;
                        detail << " p=" << p << ",k=" << k << ",n=" << n << " delta=" << delta;
                    }
                }
            }
        }
        c.detail = detail.str();
        checks.push_back(std::move(c));
    }

    {
        OracleCheck c{"pair_consistency_prob vs Monte Carlo (5 sigma)", true, 0.0, ""};
        SplitMix64 rng(trial_seed(seed, 1, 0));
        const std::size_t p = 5, k = 2, n = 2, samples = 1000000;
        std::ostringstream detail;
        for (std::size_t l = 0; l <= k; ++l) {
            const double expected = pair_consistency_prob(k, l, n);
            const double observed = pair_consistency_monte_carlo(p, k, l, n, samples, rng);
            const double sigma = std::sqrt(expected * (1.0 - expected) / samples);
            const double delta = std::abs(observed - expected);
            c.max_delta = std::max(c.max_delta, delta / sigma);
            if (delta > 5.0 * sigma) {
                c.pass = false;
                detail << " l=" << l << " observed=" << observed << " expected=" << expected;
            }
        }
        c.detail = detail.str();
        checks.push_back(std::move(c));
    }

    {
        OracleCheck c{"bayes_error_oracle bounds and monotonicity", true, 0.0, ""};
        std::ostringstream detail;
        // n = 0 makes P and Q identical
        const double half = bayes_error_oracle(4, 2, 0);
        if (std::abs(half - 0.5) > 1e-12) {
            c.pass = false;
            detail << " n=0 gave " << half;
        }
        for (std::size_t p = 2; p <= std::min<std::size_t>(max_p, 6); ++p) {
            for (std::size_t k = 1; k <= std::min(max_k, p); ++k) {
                double previous = 0.5;
                for (std::size_t n = 0; n <= max_n && n * p <= 24; ++n) {
                    const double pe = bayes_error_oracle(p, k, n);
                    const double chi2 = chi2_exact(p, k, n).value;
                    const double lower = std::max(0.0, 0.5 - 0.5 * std::sqrt(chi2));
                    if (pe > 0.5 + 1e-12 || pe < lower - 1e-12) {
                        c.pass = false;
                        detail << " bounds p=" << p << ",k=" << k << ",n=" << n;
                    }
                    if (pe > previous + 1e-12) {
                        c.pass = false;
                        detail << " monotonicity p=" << p << ",k=" << k << ",n=" << n;
                    }
                    c.max_delta = std::max(c.max_delta, std::max(0.0, pe - previous));
                    previous = pe;
                }
            }
        }
        c.detail = detail.str();
        checks.push_back(std::move(c));
    }

    return checks;
}

}  // namespace gtaon
