#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gtaon/detect.hpp"
#include "gtaon/oracles.hpp"

using namespace gtaon;

TEST_CASE("chi2_exact small closed-form values") {
    // p=4, k=1, n=2: (1/4) [ C(1,0)C(3,0) 4 + C(1,1)C(3,1) 1 ] - 1 = 7/4 - 1
    CHECK(chi2_exact(4, 1, 2).value == doctest::Approx(0.75).epsilon(1e-12));

    // p=2, k=1, n=1: (1/2) [ 2 + 1 ] - 1 = 1/2
    CHECK(chi2_exact(2, 1, 1).value == doctest::Approx(0.5).epsilon(1e-12));

    // k = p: single subset, only the l=0 term survives -> 2^n - 1
    CHECK(chi2_exact(3, 3, 4).value == doctest::Approx(15.0).epsilon(1e-12));

    // n = 0: P = Q exactly
    CHECK(chi2_exact(100, 7, 0).value == 0.0);
    CHECK(chi2_exact(100, 7, 0).log1p_value == 0.0);

    CHECK_THROWS_AS(chi2_exact(4, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(chi2_exact(4, 5, 1), std::invalid_argument);
}

TEST_CASE("chi2_exact matches the brute-force enumeration oracle") {
    for (std::size_t p = 2; p <= 6; ++p) {
        for (std::size_t k = 1; k <= std::min<std::size_t>(p, 3); ++k) {
            for (std::size_t n = 0; n * p <= 24 && n <= 4; ++n) {
                const double expected = chi2_enumeration(p, k, n);
                const double actual = chi2_exact(p, k, n).value;
                CHECK(std::abs(actual - expected) < 1e-9);
            }
        }
    }
}

TEST_CASE("chi2_exact log1p path stays finite where value overflows") {
    const Chi2Value v = chi2_exact(1u << 20, 32, 100000);
    CHECK(std::isinf(v.value));
    CHECK(std::isfinite(v.log1p_value));
    // dominated by the l=0 term: log(1 + chi2) >= n log 2 - log C(p,k)
    const double floor_log = 100000.0 * std::numbers::ln2 - detail::lchoose(1u << 20, 32);
    CHECK(v.log1p_value >= floor_log);
}

TEST_CASE("chi2_exact is nondecreasing in n") {
    double previous = -1.0;
    for (std::size_t n = 0; n <= 40; ++n) {
        const double value = chi2_exact(64, 4, n).value;
        CHECK(value >= previous);
        previous = value;
    }
}

TEST_CASE("pair_consistency_prob closed form") {
    CHECK(pair_consistency_prob(4, 0, 3) == doctest::Approx(std::exp2(-3.0)));
    CHECK(pair_consistency_prob(4, 4, 3) == doctest::Approx(std::exp2(-6.0)));
    CHECK(pair_consistency_prob(2, 1, 2) == doctest::Approx(std::exp2(-3.0)));
    CHECK_THROWS_AS(pair_consistency_prob(2, 3, 1), std::invalid_argument);
}

TEST_CASE("pair consistency identity reconstructs chi2") {
    // chi2 + 1 = (1/C(p,k)) sum_l C(k,l) C(p-k,l) 2^n E[I I'] ... with the
    // pairwise probability 2^{-n(1+l/k)} scaled by 2^{2n}:
    // sum_l C(k,l)C(p-k,l) 2^{2n} prob(l) / C(p,k) = 1 + chi2.
    const std::size_t p = 12, k = 3, n = 5;
    long double acc = 0.0L;
    for (std::size_t l = 0; l <= k; ++l) {
        acc += std::exp(detail::lchoose(k, l) + detail::lchoose(p - k, l)) *
               std::exp2(2.0 * n) * pair_consistency_prob(k, l, n);
    }
    acc /= std::exp(detail::lchoose(p, k));
    CHECK(static_cast<double>(acc - 1.0L) ==
          doctest::Approx(chi2_exact(p, k, n).value).epsilon(1e-10));
}

TEST_CASE("chi2_lemma3_bound dominates the exact value in its regime") {
    for (double eta : {0.3, 0.5, 0.7}) {
        for (std::size_t p : {1000u, 10000u}) {
            const std::size_t k =
                static_cast<std::size_t>(std::ceil(std::pow(std::log2(double(p)), 2)));
            const std::size_t n = static_cast<std::size_t>(
                std::floor((1.0 - eta) * detail::log2_choose(p, k)));
            const Chi2Value bound = chi2_lemma3_bound(p, k, eta);
            const Chi2Value exact = chi2_exact(p, k, n);
            CHECK(exact.log1p_value <= bound.log1p_value + 1e-9);
        }
    }
    CHECK_THROWS_AS(chi2_lemma3_bound(10, 2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(chi2_lemma3_bound(10, 2, 1.0), std::invalid_argument);
}

TEST_CASE("chi2_lower_terms lower-bounds the exact value and stays positive") {
    const double eta = 0.5;
    for (std::size_t p : {1000u, 10000u}) {
        const std::size_t k =
            static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(p))));
        const std::size_t n = static_cast<std::size_t>(
            std::ceil((1.0 - eta) * detail::log2_choose(p, k)));
        const Chi2LowerTerms lower = chi2_lower_terms(p, k, n, eta);
        const Chi2Value exact = chi2_exact(p, k, n);
        CHECK(lower.two_term <= exact.value * (1.0 + 1e-9) + 1e-12);
        CHECK(lower.two_term > 0.0);
    }
    CHECK_THROWS_AS(chi2_lower_terms(10, 6, 100, 0.5), std::invalid_argument);  // p-2k+1 <= 0
    CHECK_THROWS_AS(chi2_lower_terms(1000, 10, 1, 0.5), std::invalid_argument);  // n too small
}

TEST_CASE("detect_trivial decides by exact match") {
    SplitMix64 rng(9);
    const std::size_t p = 8, n = 6;
    const BitMatrix x = gen_all_or_none(p, n, rng);
    Outcomes y;
    y.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) y.y[i] = (x.row_weight(i) == p);
    CHECK(detect_trivial(x, y).decided_p);

    y.y[0] ^= 1;
    CHECK_FALSE(detect_trivial(x, y).decided_p);

    // n = 0 vacuously matches
    CHECK(detect_trivial(BitMatrix(0, p), Outcomes{{}}).decided_p);

    BitMatrix mixed(1, 3);
    mixed.set(0, 1);
    CHECK_THROWS_AS(detect_trivial(mixed, Outcomes{{1}}), std::invalid_argument);
}

TEST_CASE("covered_count hand example") {
    BitMatrix x(2, 4);
    x.set(0, 0);
    x.set(0, 2);
    x.set(1, 1);
    // Y = (1, 0): negative row 1 covers {1}; columns 0, 2, 3 remain covered
    CHECK(covered_count(x, Outcomes{{1, 0}}) == 3);
    // Y = (0, 0): negatives cover {0, 1, 2}; only column 3 remains
    CHECK(covered_count(x, Outcomes{{0, 0}}) == 1);
    // all positive: everything covered
    CHECK(covered_count(x, Outcomes{{1, 1}}) == 4);
}

TEST_CASE("detect_covered threshold arithmetic") {
    // all tests positive -> q0 = 1 and every column is covered, so the
    // statistic p beats p + k/2 only if k were 0; instead check n0 > 0 cases
    const PopulationParams pop(40, 4);
    SplitMix64 rng(12);
    const DefectiveSet s = sample_defective_set(pop, rng);
    const BitMatrix x = gen_bernoulli(pop, 60, rng);
    const Outcomes y = apply_model(x, s);
    const DetectVerdict v = detect_covered(x, y, pop);
    const double q0 = std::pow(1.0 - solve_nu(4).q, static_cast<double>(y.negatives()));
    CHECK(v.threshold == doctest::Approx(40.0 * q0 + 2.0).epsilon(1e-12));
    CHECK(v.statistic == doctest::Approx(static_cast<double>(covered_count(x, y))));
    CHECK(v.decided_p == (v.statistic >= v.threshold));
}

TEST_CASE("berry_esseen_binomial_tail brackets the exact binomial tail") {
    // exact tail via lgamma-summed pmf
    auto exact_tail = [](std::size_t p, double q0, double lambda) {
        const double mean = static_cast<double>(p) * q0;
        const double sd = std::sqrt(static_cast<double>(p) * q0 * (1.0 - q0));
        const double cut = mean + lambda * sd;
        long double tail = 0.0L;
        for (std::size_t j = 0; j <= p; ++j) {
            if (static_cast<double>(j) < cut) continue;
            const double lp = std::lgamma(p + 1.0) - std::lgamma(j + 1.0) -
                              std::lgamma(p - j + 1.0) + j * std::log(q0) +
                              (p - j) * std::log(1.0 - q0);
            tail += std::exp(static_cast<long double>(lp));
        }
        return static_cast<double>(tail);
    };

    SplitMix64 rng(77);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t p = 500 + rng.below(4500);
        const double q0 = 0.05 + 0.9 * rng.uniform();
        const double lambda = -3.0 + 6.0 * rng.uniform();
        const BerryEsseenTail be = berry_esseen_binomial_tail(p, q0, lambda);
        const double tail = exact_tail(p, q0, lambda);
        CHECK(std::abs(tail - be.gaussian_value) <= be.error_radius);
    }
    CHECK_THROWS_AS(berry_esseen_binomial_tail(10, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(berry_esseen_binomial_tail(10, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("bayes_error_oracle sanity") {
    CHECK(bayes_error_oracle(4, 2, 0) == doctest::Approx(0.5).epsilon(1e-12));
    // error decreases with more tests and respects the chi2 lower bound
    double previous = 0.5;
    for (std::size_t n = 0; n <= 4; ++n) {
        const double pe = bayes_error_oracle(5, 2, n);
        const double chi2 = chi2_exact(5, 2, n).value;
        CHECK(pe <= previous + 1e-12);
        CHECK(pe >= 0.5 - 0.5 * std::sqrt(chi2) - 1e-12);
        previous = pe;
    }
    CHECK_THROWS_AS(bayes_error_oracle(30, 2, 1), std::invalid_argument);
}

TEST_CASE("run_oracle_suite passes end to end") {
    const auto checks = run_oracle_suite(5, 2, 3, 424242);
    CHECK(checks.size() == 3);
    for (const auto& c : checks) {
        INFO(c.name, " ", c.detail);
        CHECK(c.pass);
    }
}
