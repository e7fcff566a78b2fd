#pragma once

// Seeded Monte Carlo engine: parameter sweeps over the test-count fraction
// beta = n / (k log2(p/k)), the planted-overlap Y' prediction experiment,
// detector experiments, and CSV/JSON reporting.  Every trial's seed is a
// pure function of (master seed, cell, trial), so results are independent
// of scheduling and replayable bit-exactly.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gtaon/dd.hpp"
#include "gtaon/decode.hpp"
#include "gtaon/design.hpp"
#include "gtaon/detect.hpp"
#include "gtaon/rng.hpp"

namespace gtaon {

struct WilsonInterval {
    double rate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval at 95% (z = 1.96) unless stated otherwise.
inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials,
                                      double z = 1.959963984540054) {
    WilsonInterval w;
    if (trials == 0) return w;
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    w.rate = phat;
    // at the boundary counts the exact bound is 0 (resp. 1); avoid fp residue
    w.lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
    w.hi = successes == trials ? 1.0 : std::min(1.0, center + half);
    return w;
}

inline unsigned worker_count() {
    if (const char* env = std::getenv("GTAON_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace detail {

// Runs fn(i) for i in [0, total); deterministic output is the caller's
// responsibility (write into preallocated slot i).
template <typename Fn>
void parallel_for(std::size_t total, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), total);
    if (workers <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < total; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

enum class DecoderKind { Comp, RankOverlap, MlExhaustive };

inline std::string to_string(DecoderKind d) {
    switch (d) {
        case DecoderKind::Comp: return "comp";
        case DecoderKind::RankOverlap: return "rank_overlap";
        case DecoderKind::MlExhaustive: return "ml_exhaustive";
    }
    return "unknown";
}

inline DecoderKind parse_decoder(const std::string& name) {
    if (name == "comp") return DecoderKind::Comp;
    if (name == "rank_overlap") return DecoderKind::RankOverlap;
    if (name == "ml_exhaustive") return DecoderKind::MlExhaustive;
    throw std::invalid_argument("unknown decoder: " + name);
}

struct SweepConfig {
    std::size_t p = 0;
    std::size_t k = 0;
    std::vector<double> betas;  // strictly increasing; n = round(beta k log2(p/k))
    DesignKind design = DesignKind::Bernoulli;
    double alpha_prime = 0.5;  // ColumnZeroed only
    DecoderKind decoder = DecoderKind::RankOverlap;
    bool run_detector = true;  // covered-column detector, Bernoulli design only
    std::size_t trials = 500;
    std::uint64_t master_seed = 0;
    double alpha = 0.1;  // approximate-recovery threshold
    double delta = 0.1;  // weak-recovery threshold
    std::string out_csv;  // empty = no file output

    void validate() const {
        PopulationParams(p, k);  // throws on bad (p, k)
        if (betas.empty()) throw std::invalid_argument("SweepConfig: empty beta grid");
        for (std::size_t i = 1; i < betas.size(); ++i) {
            if (betas[i] <= betas[i - 1]) {
                throw std::invalid_argument("SweepConfig: beta grid must be strictly increasing");
            }
        }
        if (trials < 1) throw std::invalid_argument("SweepConfig: trials >= 1");
        if (design != DesignKind::Bernoulli && design != DesignKind::ColumnZeroed) {
            throw std::invalid_argument("SweepConfig: sweep supports bernoulli / column_zeroed");
        }
    }

    std::size_t tests_for(double beta) const {
        const double nstar = static_cast<double>(k) *
                             std::log2(static_cast<double>(p) / static_cast<double>(k));
        return static_cast<std::size_t>(std::llround(beta * nstar));
    }
};

struct TrialRecord {
    std::size_t cell = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    RecoveryReport report;
    std::optional<bool> detect_correct;  // covered detector decided P (Bernoulli cells only)
    double wall_us = 0.0;                // informational; never serialized
};

struct CellStats {
    std::size_t cell = 0;
    double beta = 0.0;
    std::size_t n = 0;
    std::size_t trials = 0;
    std::size_t exact = 0;
    std::size_t alpha_approx = 0;
    std::size_t weak = 0;
    std::size_t detect = 0;
    bool has_detect = false;
};

struct PhaseCurve {
    std::vector<CellStats> cells;
};

// One Monte Carlo trial: plant S, generate the design, apply the model,
// decode, score, and (for Bernoulli cells) run the covered-column detector.
inline TrialRecord run_trial(const SweepConfig& config, std::size_t cell, std::size_t n,
                             std::size_t trial) {
    const auto start = std::chrono::steady_clock::now();
    TrialRecord rec;
    rec.cell = cell;
    rec.trial = trial;
    rec.n = n;
    rec.seed = trial_seed(config.master_seed, cell, trial);
    SplitMix64 rng(rec.seed);

    const PopulationParams pop(config.p, config.k);
    const DefectiveSet s = sample_defective_set(pop, rng);
    BitMatrix x;
    if (config.design == DesignKind::Bernoulli) {
        x = gen_bernoulli(pop, n, rng);
    } else {
        x = gen_column_zeroed(pop, n, config.alpha_prime, rng).matrix;
    }
    const Outcomes y = apply_model(x, s);

    Estimate est;
    switch (config.decoder) {
        case DecoderKind::Comp: est = decode_comp(x, y, config.k); break;
        case DecoderKind::RankOverlap: est = decode_rank_overlap(x, y, config.k); break;
        case DecoderKind::MlExhaustive: est = decode_ml_exhaustive(x, y, config.k); break;
    }
    rec.report = score(s, est);

    if (config.run_detector && config.design == DesignKind::Bernoulli) {
        rec.detect_correct = detect_covered(x, y, pop).decided_p;
    }
    rec.wall_us = std::chrono::duration<double, std::micro>(
                      std::chrono::steady_clock::now() - start).count();
    return rec;
}

inline std::string phase_curve_csv(const SweepConfig& config, const PhaseCurve& curve) {
    std::ostringstream os;
    os << "#gt-aon-v1\n";
    os << "cell,beta,n,log2_binom,trials"
       << ",exact,exact_rate,exact_lo,exact_hi"
       << ",approx,approx_rate,approx_lo,approx_hi"
       << ",weak,weak_rate,weak_lo,weak_hi"
       << ",detect,detect_rate,detect_lo,detect_hi\n";
    os << std::setprecision(10);
    const double log2_binom = detail::log2_choose(config.p, config.k);
    auto emit = [&os](std::size_t successes, std::size_t trials) {
        const WilsonInterval w = wilson_interval(successes, trials);
        os << ',' << successes << ',' << w.rate << ',' << w.lo << ',' << w.hi;
    };
    for (const CellStats& c : curve.cells) {
        os << c.cell << ',' << c.beta << ',' << c.n << ',' << log2_binom << ',' << c.trials;
        emit(c.exact, c.trials);
        emit(c.alpha_approx, c.trials);
        emit(c.weak, c.trials);
        emit(c.detect, c.has_detect ? c.trials : 0);
        os << '\n';
    }
    return os.str();
}

// Runs the full beta grid.  The CSV body is a pure function of the config
// (timestamps go to a separate .meta.json); the output file is written to a
// temporary path and atomically renamed.
inline PhaseCurve run_sweep(const SweepConfig& config) {
    config.validate();
    PhaseCurve curve;
    for (std::size_t cell = 0; cell < config.betas.size(); ++cell) {
        const std::size_t n = config.tests_for(config.betas[cell]);
        std::vector<TrialRecord> records(config.trials);
        detail::parallel_for(config.trials, [&](std::size_t t) {
            records[t] = run_trial(config, cell, n, t);
        });
        CellStats stats;
        stats.cell = cell;
        stats.beta = config.betas[cell];
        stats.n = n;
        stats.trials = config.trials;
        for (const TrialRecord& rec : records) {
            stats.exact += rec.report.exact;
            stats.alpha_approx += rec.report.alpha_approx(config.alpha);
            stats.weak += rec.report.weak(config.delta);
            if (rec.detect_correct.has_value()) {
                stats.has_detect = true;
                stats.detect += *rec.detect_correct;
            }
        }
        curve.cells.push_back(stats);
    }

    if (!config.out_csv.empty()) {
        const std::string body = phase_curve_csv(config, curve);
        const std::filesystem::path target(config.out_csv);
        const std::filesystem::path tmp = target.string() + ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            if (!os) throw std::runtime_error("run_sweep: cannot open " + tmp.string());
            os << body;
        }
        std::filesystem::rename(tmp, target);

        const auto now = std::chrono::system_clock::now().time_since_epoch();
        std::ofstream meta(target.string() + ".meta.json", std::ios::trunc);
        meta << "{\"unix_time\":"
             << std::chrono::duration_cast<std::chrono::seconds>(now).count() << "}\n";
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Y' prediction with planted overlap

struct YprimeRow {
    double delta_requested = 0.0;
    double delta_effective = 0.0;  // floor(delta k) / k
    std::size_t trials = 0;
    std::size_t successes = 0;
    double expected = 0.0;  // (1/2)^(1 - delta_effective)
};

// Plants an estimate with exactly floor(delta k) true defectives, then
// measures how often "test hits the estimate" predicts the true outcome of
// a fresh Bernoulli test.
inline std::vector<YprimeRow> run_yprime_experiment(std::size_t p, std::size_t k,
                                                    const std::vector<double>& deltas,
                                                    std::size_t fresh_tests,
                                                    std::uint64_t master_seed) {
    const PopulationParams pop(p, k);
    const double q = solve_nu(k).q;
    std::vector<YprimeRow> rows;
    rows.reserve(deltas.size());
    for (std::size_t d = 0; d < deltas.size(); ++d) {
        SplitMix64 rng(trial_seed(master_seed, d, 0));
        const std::size_t overlap =
            static_cast<std::size_t>(std::floor(deltas[d] * static_cast<double>(k)));
        const DefectiveSet s = sample_defective_set(pop, rng);

        // planted estimate: `overlap` items of S plus fresh non-defectives
        std::vector<std::size_t> planted(s.items.begin(),
                                         s.items.begin() + static_cast<std::ptrdiff_t>(overlap));
        for (std::size_t j = 0; planted.size() < k; ++j) {
            if (!s.contains(j)) planted.push_back(j);
        }
        std::sort(planted.begin(), planted.end());

        YprimeRow row;
        row.delta_requested = deltas[d];
        row.delta_effective = static_cast<double>(overlap) / static_cast<double>(k);
        row.trials = fresh_tests;
        row.expected = std::exp2(-(1.0 - row.delta_effective));
        std::vector<std::size_t> test_items;
        for (std::size_t t = 0; t < fresh_tests; ++t) {
            test_items.clear();
            detail::bernoulli_positions(p, q, rng,
                                        [&](std::uint64_t pos) { test_items.push_back(pos); });
            const bool actual = predict_extra_test(s.items, test_items);
            const bool predicted = predict_extra_test(planted, test_items);
            row.successes += (actual == predicted);
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Detector experiments

struct CoveredDetectResult {
    std::size_t pairs = 0;
    std::size_t p_errors = 0;  // decided Q under P
    std::size_t q_errors = 0;  // decided P under Q
    double error_rate() const {
        return static_cast<double>(p_errors + q_errors) / (2.0 * static_cast<double>(pairs));
    }
};

// Paired (P, Q) covered-column detection trials.  Rows are streamed: only
// the OR of the negative rows is retained, so the full n x p matrix is
// never materialized.
inline CoveredDetectResult run_covered_detect_experiment(std::size_t p, std::size_t k,
                                                         std::size_t n, std::size_t pairs,
                                                         std::uint64_t master_seed) {
    const PopulationParams pop(p, k);
    const double q = solve_nu(k).q;
    const std::size_t words = (p + 63) / 64;

    std::vector<std::uint8_t> outcome(pairs * 2, 0);  // slot = 2*pair + (0:P, 1:Q)
    detail::parallel_for(pairs, [&](std::size_t t) {
        SplitMix64 rng(trial_seed(master_seed, 0, t));
        const DefectiveSet s = sample_defective_set(pop, rng);
        std::vector<std::uint64_t> defective_mask(words, 0);
        for (std::size_t j : s.items) defective_mask[j >> 6] |= std::uint64_t(1) << (j & 63);

        std::vector<std::uint64_t> neg_union(words);
        std::vector<std::size_t> row_items;
        for (int side = 0; side < 2; ++side) {
            std::fill(neg_union.begin(), neg_union.end(), 0);
            std::size_t n0 = 0;
            for (std::size_t i = 0; i < n; ++i) {
                row_items.clear();
                bool hit_defective = false;
                detail::bernoulli_positions(p, q, rng, [&](std::uint64_t pos) {
                    row_items.push_back(pos);
                    if (defective_mask[pos >> 6] & (std::uint64_t(1) << (pos & 63))) {
                        hit_defective = true;
                    }
                });
                const bool positive = (side == 0) ? hit_defective : rng.coin();
                if (!positive) {
                    ++n0;
                    for (std::size_t pos : row_items) {
                        neg_union[pos >> 6] |= std::uint64_t(1) << (pos & 63);
                    }
                }
            }
            const double q0 = std::exp(static_cast<double>(n0) * std::log1p(-q));
            const double covered = static_cast<double>(
                p - popcount_words({neg_union.data(), neg_union.size()}));
            const bool decided_p =
                covered >= static_cast<double>(p) * q0 + static_cast<double>(k) / 2.0;
            outcome[2 * t + static_cast<std::size_t>(side)] =
                (side == 0) ? decided_p : !decided_p;
        }
    });

    CoveredDetectResult result;
    result.pairs = pairs;
    for (std::size_t t = 0; t < pairs; ++t) {
        result.p_errors += !outcome[2 * t];
        result.q_errors += !outcome[2 * t + 1];
    }
    return result;
}

struct TrivialDetectResult {
    std::size_t p_trials = 0;
    std::size_t p_errors = 0;
    std::size_t q_trials = 0;
    std::size_t q_errors = 0;
};

inline TrivialDetectResult run_trivial_detect_experiment(std::size_t p, std::size_t k,
                                                         std::size_t n, std::size_t p_trials,
                                                         std::size_t q_trials,
                                                         std::uint64_t master_seed) {
    const PopulationParams pop(p, k);
    TrivialDetectResult result;
    result.p_trials = p_trials;
    result.q_trials = q_trials;

    std::vector<std::uint8_t> errs_p(p_trials, 0);
    detail::parallel_for(p_trials, [&](std::size_t t) {
        SplitMix64 rng(trial_seed(master_seed, 0, t));
        const DefectiveSet s = sample_defective_set(pop, rng);
        const BitMatrix x = gen_all_or_none(p, n, rng);
        const Outcomes y = apply_model(x, s);
        errs_p[t] = !detect_trivial(x, y).decided_p;
    });
    std::vector<std::uint8_t> errs_q(q_trials, 0);
    const DesignSpec null_spec{DesignKind::AllOrNone, pop, n};
    detail::parallel_for(q_trials, [&](std::size_t t) {
        SplitMix64 rng(trial_seed(master_seed, 1, t));
        const auto [x, y] = sample_null(null_spec, rng);
        errs_q[t] = detect_trivial(x, y).decided_p;  // deciding P under Q is the error
    });
    for (auto e : errs_p) result.p_errors += e;
    for (auto e : errs_q) result.q_errors += e;
    return result;
}

// ---------------------------------------------------------------------------
// Definite-defective and disjoint-witness experiments

struct DdExperimentResult {
    std::size_t trials = 0;
    std::size_t identified = 0;
    std::size_t none = 0;
    std::size_t false_identifications = 0;
    std::size_t tests_used = 0;  // 2vc
};

inline DdExperimentResult run_dd_experiment(std::size_t p, std::size_t k, std::size_t c,
                                            std::size_t trials, std::uint64_t master_seed) {
    const PopulationParams pop(p, k);
    DdExperimentResult result;
    result.trials = trials;

    std::vector<std::uint8_t> status(trials, 0);  // 0 = none, 1 = correct, 2 = false
    std::vector<std::size_t> tests(trials, 0);
    detail::parallel_for(trials, [&](std::size_t t) {
        SplitMix64 rng(trial_seed(master_seed, c, t));
        const DefectiveSet s = sample_defective_set(pop, rng);
        const auto blocks = build_saffron(p, k, c, rng);
        std::vector<std::uint8_t> outcomes;
        for (const auto& block : blocks) {
            const auto block_y = saffron_block_outcomes(block, s);
            outcomes.insert(outcomes.end(), block_y.begin(), block_y.end());
        }
        tests[t] = outcomes.size();
        const DdResult dd = decode_saffron(blocks, outcomes);
        if (!dd.identified) {
            status[t] = 0;
        } else {
            status[t] = s.contains(*dd.identified) ? 1 : 2;
        }
    });
    for (std::size_t t = 0; t < trials; ++t) {
        result.tests_used = tests[t];
        if (status[t] == 0) ++result.none;
        if (status[t] == 1) ++result.identified;
        if (status[t] == 2) ++result.false_identifications;
    }
    return result;
}

struct WitnessExperimentResult {
    std::size_t trials = 0;
    std::size_t found = 0;
    std::size_t not_found = 0;
    std::size_t indeterminate = 0;
};

inline WitnessExperimentResult run_witness_experiment(std::size_t p, std::size_t k,
                                                      std::size_t n, std::size_t trials,
                                                      std::uint64_t budget,
                                                      std::uint64_t master_seed) {
    const PopulationParams pop(p, k);
    std::vector<std::uint8_t> status(trials, 0);
    detail::parallel_for(trials, [&](std::size_t t) {
        SplitMix64 rng(trial_seed(master_seed, 0, t));
        const DefectiveSet s = sample_defective_set(pop, rng);
        const BitMatrix x = gen_bernoulli(pop, n, rng);
        const Outcomes y = apply_model(x, s);
        switch (dd_negative_witness(x, y, s, budget, rng)) {
            case WitnessResult::Found: status[t] = 1; break;
            case WitnessResult::NotFound: status[t] = 0; break;
            case WitnessResult::Indeterminate: status[t] = 2; break;
        }
    });
    WitnessExperimentResult result;
    result.trials = trials;
    for (auto st : status) {
        if (st == 1) ++result.found;
        if (st == 0) ++result.not_found;
        if (st == 2) ++result.indeterminate;
    }
    return result;
}

}  // namespace gtaon
