#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtaon/bitmatrix.hpp"
#include "gtaon/rng.hpp"

namespace gtaon {

struct PopulationParams {
    std::size_t p = 0;  // item count
    std::size_t k = 0;  // defective count

    PopulationParams() = default;
    PopulationParams(std::size_t p_, std::size_t k_) : p(p_), k(k_) {
        if (k < 1 || k > p) {
            throw std::invalid_argument("PopulationParams: need 1 <= k <= p");
        }
    }
};

struct BernoulliParams {
    double nu = 0.0;  // inclusion intensity
    double q = 0.0;   // per-entry inclusion probability nu/k
};

// Inclusion intensity making each test positive with probability exactly 1/2:
// (1 - nu/k)^k = 1/2, solved in closed form as nu = k (1 - 2^(-1/k)).
inline BernoulliParams solve_nu(std::size_t k) {
    if (k < 1) throw std::invalid_argument("solve_nu: k must be >= 1");
    const double q = -std::expm1(-std::numbers::ln2 / static_cast<double>(k));
    return BernoulliParams{static_cast<double>(k) * q, q};
}

// Sorted k-subset of {0, ..., p-1}: the ground-truth defective set S.
struct DefectiveSet {
    std::vector<std::size_t> items;

    DefectiveSet() = default;
    explicit DefectiveSet(std::vector<std::size_t> sorted_items, std::size_t p)
        : items(std::move(sorted_items)) {
        validate(p);
    }

    std::size_t k() const { return items.size(); }

    bool contains(std::size_t j) const {
        return std::binary_search(items.begin(), items.end(), j);
    }

    void validate(std::size_t p) const {
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i] >= p) throw std::invalid_argument("DefectiveSet: index out of range");
            if (i > 0 && items[i] <= items[i - 1]) {
                throw std::invalid_argument("DefectiveSet: indices must be strictly increasing");
            }
        }
    }
};

// Uniform k-subset of {0, ..., p-1} via Floyd's algorithm.
inline DefectiveSet sample_defective_set(const PopulationParams& pop, SplitMix64& rng) {
    std::set<std::size_t> chosen;
    for (std::size_t j = pop.p - pop.k; j < pop.p; ++j) {
        std::size_t t = rng.below(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    return DefectiveSet{std::vector<std::size_t>(chosen.begin(), chosen.end()), pop.p};
}

// Length-n binary outcome vector Y.
struct Outcomes {
    std::vector<std::uint8_t> y;

    std::size_t n() const { return y.size(); }

    std::size_t positives() const {
        std::size_t count = 0;
        for (std::uint8_t b : y) count += b;
        return count;
    }
    std::size_t negatives() const { return y.size() - positives(); }
};

enum class DesignKind { Bernoulli, ColumnZeroed, AllOrNone, Saffron };

inline std::string to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::Bernoulli: return "bernoulli";
        case DesignKind::ColumnZeroed: return "column_zeroed";
        case DesignKind::AllOrNone: return "all_or_none";
        case DesignKind::Saffron: return "saffron";
    }
    return "unknown";
}

struct DesignSpec {
    DesignKind kind = DesignKind::Bernoulli;
    PopulationParams pop;
    std::size_t tests = 0;      // n (ignored for Saffron, whose test count is structural)
    double alpha_prime = 0.0;   // ColumnZeroed only
    std::size_t repetitions = 1;  // Saffron only (c)

    void validate() const {
        if (kind == DesignKind::ColumnZeroed && !(alpha_prime > 0.0 && alpha_prime < 1.0)) {
            throw std::invalid_argument("DesignSpec: alpha_prime must lie in (0,1)");
        }
        if (kind == DesignKind::Saffron && repetitions < 1) {
            throw std::invalid_argument("DesignSpec: Saffron needs c >= 1");
        }
    }
};

namespace detail {

// Visits the positions of i.i.d. Bernoulli(q) successes over `total` slots in
// increasing order, using geometric gap sampling: the gap before the next
// success is floor(log(u) / log(1-q)) with u uniform in (0,1].
template <typename Fn>
void bernoulli_positions(std::uint64_t total, double q, SplitMix64& rng, Fn&& fn) {
    if (total == 0 || q <= 0.0) return;
    if (q >= 1.0) {
        for (std::uint64_t pos = 0; pos < total; ++pos) fn(pos);
        return;
    }
    const double denom = std::log1p(-q);
    std::uint64_t pos = 0;
    while (true) {
        const double gap = std::floor(std::log(rng.uniform_pos()) / denom);
        if (gap >= static_cast<double>(total - pos)) return;
        pos += static_cast<std::uint64_t>(gap);
        fn(pos);
        if (++pos >= total) return;
    }
}

}  // namespace detail

// n x p matrix with i.i.d. Bernoulli(nu/k) entries, nu from solve_nu(k).
inline BitMatrix gen_bernoulli(const PopulationParams& pop, std::size_t n, SplitMix64& rng) {
    const double q = solve_nu(pop.k).q;
    BitMatrix m(n, pop.p);
    detail::bernoulli_positions(
        static_cast<std::uint64_t>(n) * pop.p, q, rng,
        [&](std::uint64_t pos) { m.set(pos / pop.p, pos % pop.p); });
    return m;
}

// Column-zeroed design: floor(alpha' p) uniformly chosen columns are forced
// to zero; the surviving columns are i.i.d. Bernoulli with intensity
// nu(k_bar)/k_bar where k_bar = max(1, round((1-alpha')k)).
struct ColumnZeroedDesign {
    BitMatrix matrix;
    std::vector<std::size_t> discarded;  // sorted
    std::size_t k_bar = 0;
};

inline ColumnZeroedDesign gen_column_zeroed(const PopulationParams& pop, std::size_t n,
                                            double alpha_prime, SplitMix64& rng) {
    if (!(alpha_prime > 0.0 && alpha_prime < 1.0)) {
        throw std::invalid_argument("gen_column_zeroed: alpha_prime must lie in (0,1)");
    }
    const std::size_t n_discard =
        static_cast<std::size_t>(std::floor(alpha_prime * static_cast<double>(pop.p)));
    if (n_discard == 0 || n_discard >= pop.p) {
        throw std::invalid_argument("gen_column_zeroed: degenerate design (0 or p discarded)");
    }

    const DefectiveSet discard_set =
        sample_defective_set(PopulationParams(pop.p, n_discard), rng);
    std::vector<std::size_t> survivors;
    survivors.reserve(pop.p - n_discard);
    {
        std::size_t d = 0;
        for (std::size_t j = 0; j < pop.p; ++j) {
            if (d < discard_set.items.size() && discard_set.items[d] == j) {
                ++d;
            } else {
                survivors.push_back(j);
            }
        }
    }

    const std::size_t k_bar = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround((1.0 - alpha_prime) * static_cast<double>(pop.k))));
    const double q = solve_nu(k_bar).q;

    ColumnZeroedDesign out;
    out.matrix = BitMatrix(n, pop.p);
    out.discarded = discard_set.items;
    out.k_bar = k_bar;
    const std::size_t p_live = survivors.size();
    detail::bernoulli_positions(
        static_cast<std::uint64_t>(n) * p_live, q, rng,
        [&](std::uint64_t pos) { out.matrix.set(pos / p_live, survivors[pos % p_live]); });
    return out;
}

// Each row is independently all-ones with probability 1/2, else all-zeros.
inline BitMatrix gen_all_or_none(std::size_t p, std::size_t n, SplitMix64& rng) {
    BitMatrix m(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.coin()) m.fill_row(i, true);
    }
    return m;
}

// Noiseless OR model: y_i = 1 iff row i of X intersects S.
inline Outcomes apply_model(const BitMatrix& x, const DefectiveSet& s) {
    s.validate(x.cols());
    Outcomes out;
    out.y.resize(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out.y[i] = x.row_intersects(i, s.items) ? 1 : 0;
    }
    return out;
}

// Null model Q(X,Y) = P(X) P(Y): X from the design's marginal, Y i.i.d.
// uniform bits.  Valid for Bernoulli (eq. choice of nu makes P(Y) uniform)
// and AllOrNone (rows all-ones w.p. 1/2, so the Y-marginal is also uniform).
inline std::pair<BitMatrix, Outcomes> sample_null(const DesignSpec& spec, SplitMix64& rng) {
    spec.validate();
    BitMatrix x;
    switch (spec.kind) {
        case DesignKind::Bernoulli:
            x = gen_bernoulli(spec.pop, spec.tests, rng);
            break;
        case DesignKind::AllOrNone:
            x = gen_all_or_none(spec.pop.p, spec.tests, rng);
            break;
        default:
            throw std::invalid_argument("sample_null: unsupported design kind");
    }
    Outcomes y;
    y.y.resize(spec.tests);
    for (std::size_t i = 0; i < spec.tests; ++i) y.y[i] = rng.coin() ? 1 : 0;
    return {std::move(x), std::move(y)};
}

}  // namespace gtaon
