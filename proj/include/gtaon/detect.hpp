#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gtaon/bitmatrix.hpp"
#include "gtaon/decode.hpp"
#include "gtaon/design.hpp"

namespace gtaon {

struct DetectVerdict {
    bool decided_p = false;  // decided P iff statistic >= threshold
    double statistic = 0.0;
    double threshold = 0.0;
};

namespace detail {

// log C(n, k) via lgamma.
inline double lchoose(std::size_t n, std::size_t k) {
    if (k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

inline double log2_choose(std::size_t n, std::size_t k) {
    return lchoose(n, k) / std::numbers::ln2;
}

inline double logsumexp(const std::vector<double>& terms) {
    double m = -std::numeric_limits<double>::infinity();
    for (double t : terms) m = std::max(m, t);
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - m);
    return m + std::log(sum);
}

}  // namespace detail

// Zero-P-error detector for the all-or-none design: decides P iff the ones
// in Y exactly match the all-ones rows of X.
inline DetectVerdict detect_trivial(const BitMatrix& x, const Outcomes& y) {
    if (y.n() != x.rows()) throw std::invalid_argument("detect_trivial: dimension mismatch");
    bool match = true;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const std::size_t w = x.row_weight(i);
        if (w != 0 && w != x.cols()) {
            throw std::invalid_argument("detect_trivial: row of mixed weight (not an all-or-none design)");
        }
        if (static_cast<bool>(y.y[i]) != (w == x.cols())) match = false;
    }
    DetectVerdict v;
    v.statistic = match ? 1.0 : 0.0;
    v.threshold = 1.0;
    v.decided_p = match;
    return v;
}

// Number of columns of X covered by Y: support(column) ⊆ support(Y),
// i.e. the column has no 1 in any negative test.
inline std::size_t covered_count(const BitMatrix& x, const Outcomes& y) {
    if (y.n() != x.rows()) throw std::invalid_argument("covered_count: dimension mismatch");
    std::vector<std::uint64_t> neg_union(x.words_per_row(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (!y.y[i]) x.or_row_into(i, neg_union.data());
    }
    return x.cols() - popcount_words(neg_union);
}

// Covered-column threshold test for Bernoulli designs.  q0 is the exact
// per-realization coverage probability (1 - nu/k)^{n0} with n0 the observed
// number of negative tests; decides P iff covered_count >= p q0 + k/2.
inline DetectVerdict detect_covered(const BitMatrix& x, const Outcomes& y,
                                    const PopulationParams& pop) {
    const BernoulliParams bern = solve_nu(pop.k);
    const double n0 = static_cast<double>(y.negatives());
    const double q0 = std::exp(n0 * std::log1p(-bern.q));
    DetectVerdict v;
    v.statistic = static_cast<double>(covered_count(x, y));
    v.threshold = static_cast<double>(pop.p) * q0 + static_cast<double>(pop.k) / 2.0;
    v.decided_p = v.statistic >= v.threshold;
    return v;
}

// chi^2 value carried both directly and as log(1 + chi^2), which stays
// finite in regimes where the divergence itself overflows.
struct Chi2Value {
    double value = 0.0;
    double log1p_value = 0.0;
};

// Exact chi-squared divergence between the group-testing joint law P and the
// independent null Q under the Bernoulli design:
//   chi2 = (1/C(p,k)) sum_{l=0}^{k} C(k,l) C(p-k,l) 2^{n(1-l/k)} - 1.
// Evaluated in log space with a log-sum-exp accumulator.
inline Chi2Value chi2_exact(std::size_t p, std::size_t k, std::size_t n) {
    if (k < 1 || k > p) throw std::invalid_argument("chi2_exact: need 1 <= k <= p");
    if (n == 0) return {0.0, 0.0};  // Vandermonde: sum C(k,l) C(p-k,l) = C(p,k)

    const double lbinom_pk = detail::lchoose(p, k);
    const std::size_t lmax = std::min(k, p - k);
    std::vector<double> terms;
    terms.reserve(lmax + 1);
    double lck = 0.0;    // log C(k, l)
    double lcpk = 0.0;   // log C(p-k, l)
    for (std::size_t l = 0; l <= lmax; ++l) {
        if (l > 0) {
            lck += std::log(static_cast<double>(k - l + 1)) - std::log(static_cast<double>(l));
            lcpk += std::log(static_cast<double>(p - k - l + 1)) - std::log(static_cast<double>(l));
        }
        const double exponent =
            static_cast<double>(n) *
            (1.0 - static_cast<double>(l) / static_cast<double>(k)) * std::numbers::ln2;
        terms.push_back(lck + lcpk + exponent - lbinom_pk);
    }
    const double log1p_chi2 = detail::logsumexp(terms);  // sum equals 1 + chi2
    return {std::expm1(log1p_chi2), log1p_chi2};
}

// E_Q[ I_{S0} I_{S'} ] = 2^{-n(1 + l/k)} for |S0 ∩ S'| = k - l.
inline double pair_consistency_prob(std::size_t k, std::size_t l, std::size_t n) {
    if (l > k) throw std::invalid_argument("pair_consistency_prob: need 0 <= l <= k");
    return std::exp2(-static_cast<double>(n) *
                     (1.0 + static_cast<double>(l) / static_cast<double>(k)));
}

// Upper bound valid whenever n <= (1-eta) log2 C(p,k):
//   chi2 <= exp[ e^{1-eta} k (k/p)^eta p/(p-k+1) ] - 1.
inline Chi2Value chi2_lemma3_bound(std::size_t p, std::size_t k, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("chi2_lemma3_bound: eta in (0,1)");
    if (k < 1 || k > p) throw std::invalid_argument("chi2_lemma3_bound: need 1 <= k <= p");
    const double arg = std::exp(1.0 - eta) * static_cast<double>(k) *
                       std::pow(static_cast<double>(k) / static_cast<double>(p), eta) *
                       static_cast<double>(p) / static_cast<double>(p - k + 1);
    return {std::expm1(arg), arg};
}

struct Chi2LowerTerms {
    double value = 0.0;     // -1 + [C(p-k,k)/C(p,k)] [1 + (k^{1+eta}/p^eta) p/(p-2k+1)]
    double two_term = 0.0;  // -1 + C(p-k,k)/C(p,k) + k C(p-k,k-1)/C(p,k) C(p,k)^{(1-eta)/k}
};

// Lower-bound evaluation keeping only the l in {k-1, k} terms of the chi^2
// sum; requires the regime n >= (1-eta) log2 C(p,k) and p - 2k + 1 > 0.
inline Chi2LowerTerms chi2_lower_terms(std::size_t p, std::size_t k, std::size_t n, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("chi2_lower_terms: eta in (0,1)");
    if (2 * k >= p + 1) throw std::invalid_argument("chi2_lower_terms: need p - 2k + 1 > 0");
    const double lbinom_pk = detail::lchoose(p, k);
    if (static_cast<double>(n) < (1.0 - eta) * lbinom_pk / std::numbers::ln2) {
        throw std::invalid_argument("chi2_lower_terms: need n >= (1-eta) log2 C(p,k)");
    }
    const double ratio = std::exp(detail::lchoose(p - k, k) - lbinom_pk);
    const double pd = static_cast<double>(p);
    const double kd = static_cast<double>(k);
    Chi2LowerTerms out;
    out.value = -1.0 + ratio * (1.0 + std::pow(kd, 1.0 + eta) / std::pow(pd, eta) *
                                          pd / (pd - 2.0 * kd + 1.0));
    out.two_term = -1.0 + ratio +
                   std::exp(std::log(kd) + detail::lchoose(p - k, k - 1) - lbinom_pk +
                            (1.0 - eta) / kd * lbinom_pk);
    return out;
}

struct BerryEsseenTail {
    double gaussian_value = 0.0;  // Q(lambda), standard Gaussian upper tail
    double error_radius = 0.0;    // 6 rho / (sigma^3 sqrt(p))
};

// For Z ~ Binomial(p, q0), the tail P[(Z - p q0)/(sigma sqrt(p)) >= lambda]
// lies within error_radius of Q(lambda), with rho and sigma the centered
// third absolute moment and standard deviation of Bernoulli(q0).
inline BerryEsseenTail berry_esseen_binomial_tail(std::size_t p, double q0, double lambda) {
    if (!(q0 > 0.0 && q0 < 1.0)) {
        throw std::invalid_argument("berry_esseen_binomial_tail: q0 must lie in (0,1)");
    }
    const double rho = std::pow(1.0 - q0, 3) * q0 + std::pow(q0, 3) * (1.0 - q0);
    const double sigma = std::sqrt((1.0 - q0) * q0);
    BerryEsseenTail out;
    out.gaussian_value = 0.5 * std::erfc(lambda / std::numbers::sqrt2);
    out.error_radius = 6.0 * rho / (sigma * sigma * sigma * std::sqrt(static_cast<double>(p)));
    return out;
}

// Exact Bayes error of the optimal test between P and Q (uniform prior) by
// full enumeration of X in {0,1}^{n x p} and Y in {0,1}^n:
//   Pe = (1/2) sum_{X,Y} min(P(X,Y), Q(X,Y)).
// Guarded to n*p <= 24 enumeration bits.
inline double bayes_error_oracle(std::size_t p, std::size_t k, std::size_t n) {
    if (k < 1 || k > p) throw std::invalid_argument("bayes_error_oracle: need 1 <= k <= p");
    if (n * p > 24) throw std::invalid_argument("bayes_error_oracle: enumeration guard 2^(np) <= 2^24");
    const double q = solve_nu(k).q;

    // all k-subsets of {0,...,p-1} as bit masks
    std::vector<std::uint32_t> subsets;
    {
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            std::uint32_t mask = 0;
            for (std::size_t i : idx) mask |= (1u << i);
            subsets.push_back(mask);
            std::size_t j = k;
            while (j > 0 && idx[j - 1] == p - k + j - 1) --j;
            if (j == 0) break;
            ++idx[j - 1];
            for (std::size_t i = j; i < k; ++i) idx[i] = idx[i - 1] + 1;
        }
    }

    const double n_subsets = static_cast<double>(subsets.size());
    const double q_y = std::exp2(-static_cast<double>(n));
    long double err = 0.0L;
    const std::uint64_t x_limit = std::uint64_t(1) << (n * p);
    std::vector<std::size_t> consistent(std::size_t(1) << n);
    for (std::uint64_t xbits = 0; xbits < x_limit; ++xbits) {
        const int ones = std::popcount(xbits);
        const double px = std::pow(q, ones) * std::pow(1.0 - q, static_cast<double>(n * p) - ones);
        std::fill(consistent.begin(), consistent.end(), 0);
        for (std::uint32_t s : subsets) {
            std::size_t pattern = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint32_t row = static_cast<std::uint32_t>((xbits >> (i * p)) & ((1u << p) - 1));
                if (row & s) pattern |= (std::size_t(1) << i);
            }
            consistent[pattern]++;
        }
        for (std::size_t ybits = 0; ybits < consistent.size(); ++ybits) {
            const double pxy = px * static_cast<double>(consistent[ybits]) / n_subsets;
            const double qxy = px * q_y;
            err += 0.5L * static_cast<long double>(std::min(pxy, qxy));
        }
    }
    return static_cast<double>(err);
}

}  // namespace gtaon
