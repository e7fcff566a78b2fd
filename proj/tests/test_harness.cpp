#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtaon/harness.hpp"
#include "gtaon/io.hpp"

using namespace gtaon;

TEST_CASE("wilson_interval reference values") {
    const WilsonInterval w = wilson_interval(8, 10);
    CHECK(w.rate == doctest::Approx(0.8));
    // standard z = 1.96 Wilson bounds for 8/10
    CHECK(w.lo == doctest::Approx(0.4902).epsilon(1e-3));
    CHECK(w.hi == doctest::Approx(0.9433).epsilon(1e-3));

    const WilsonInterval zero = wilson_interval(0, 50);
    CHECK(zero.rate == 0.0);
    CHECK(zero.lo == 0.0);
    const WilsonInterval full = wilson_interval(50, 50);
    CHECK(full.hi == 1.0);
    CHECK(full.lo < 1.0);
    CHECK(zero.hi > 0.0);

    const WilsonInterval empty = wilson_interval(0, 0);
    CHECK(empty.rate == 0.0);
    CHECK(empty.lo == 0.0);
    CHECK(empty.hi == 0.0);
}

TEST_CASE("GTAON_THREADS controls the worker count") {
    setenv("GTAON_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    setenv("GTAON_THREADS", "0", 1);  // invalid -> hardware default
    CHECK(worker_count() >= 1);
    unsetenv("GTAON_THREADS");
    CHECK(worker_count() >= 1);
}

TEST_CASE("trial seeds are pure functions of (master, cell, trial)") {
    CHECK(trial_seed(1, 2, 3) == trial_seed(1, 2, 3));
    CHECK(trial_seed(1, 2, 3) != trial_seed(1, 2, 4));
    CHECK(trial_seed(1, 2, 3) != trial_seed(1, 3, 3));
    CHECK(trial_seed(1, 2, 3) != trial_seed(2, 2, 3));
}

TEST_CASE("SweepConfig validation and test counts") {
    SweepConfig config;
    config.p = 1024;
    config.k = 4;
    config.betas = {0.5, 1.0, 1.5};
    config.validate();
    // n* = k log2(p/k) = 4 * 8 = 32
    CHECK(config.tests_for(1.0) == 32);
    CHECK(config.tests_for(0.5) == 16);
    CHECK(config.tests_for(1.5) == 48);

    config.betas = {1.0, 1.0};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.betas = {1.0, 0.5};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.betas = {};
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.betas = {1.0};
    config.trials = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.trials = 10;
    config.design = DesignKind::AllOrNone;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("run_sweep is deterministic and independent of thread count") {
    SweepConfig config;
    config.p = 512;
    config.k = 4;
    config.betas = {0.6, 1.4};
    config.trials = 40;
    config.master_seed = 99;

    setenv("GTAON_THREADS", "1", 1);
    const PhaseCurve serial = run_sweep(config);
    setenv("GTAON_THREADS", "4", 1);
    const PhaseCurve threaded = run_sweep(config);
    unsetenv("GTAON_THREADS");

    const std::string a = phase_curve_csv(config, serial);
    const std::string b = phase_curve_csv(config, threaded);
    CHECK(a == b);
    CHECK(a.rfind("#gt-aon-v1\n", 0) == 0);

    // well above the transition the decoder succeeds almost always,
    // well below it weak recovery at delta = 0.1 dominates exact recovery
    CHECK(threaded.cells[1].exact > threaded.cells[0].exact);
    CHECK(threaded.cells[0].weak >= threaded.cells[0].exact);
    CHECK(threaded.cells[0].has_detect);
}

TEST_CASE("run_sweep writes the CSV atomically with a separate meta file") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "gtaon_test_out";
    std::filesystem::create_directories(dir);
    const std::filesystem::path csv = dir / "curve.csv";

    SweepConfig config;
    config.p = 128;
    config.k = 2;
    config.betas = {1.0};
    config.trials = 5;
    config.master_seed = 7;
    config.out_csv = csv.string();
    const PhaseCurve curve = run_sweep(config);

    std::ifstream is(csv);
    REQUIRE(is.good());
    std::stringstream buffer;
    buffer << is.rdbuf();
    CHECK(buffer.str() == phase_curve_csv(config, curve));
    CHECK(std::filesystem::exists(dir / "curve.csv.meta.json"));
    CHECK_FALSE(std::filesystem::exists(dir / "curve.csv.tmp"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("column-zeroed sweep cells carry no detector column") {
    SweepConfig config;
    config.p = 256;
    config.k = 4;
    config.betas = {1.0};
    config.trials = 10;
    config.design = DesignKind::ColumnZeroed;
    config.alpha_prime = 0.5;
    const PhaseCurve curve = run_sweep(config);
    CHECK_FALSE(curve.cells[0].has_detect);
    CHECK(curve.cells[0].detect == 0);
}

TEST_CASE("yprime experiment matches the predicted success probability") {
    const std::size_t k = 64;
    const std::size_t fresh = 200000;
    const auto rows = run_yprime_experiment(4096, k, {0.0, 0.5, 1.0}, fresh, 2024);
    REQUIRE(rows.size() == 3);

    // delta = 1: the planted estimate is S itself, prediction is perfect
    CHECK(rows[2].successes == fresh);
    CHECK(rows[2].expected == doctest::Approx(1.0));

    for (const auto& row : rows) {
        const double rate = static_cast<double>(row.successes) / static_cast<double>(row.trials);
        const double sigma =
            std::sqrt(row.expected * (1.0 - row.expected) / static_cast<double>(row.trials));
        INFO("delta=", row.delta_requested, " rate=", rate, " expected=", row.expected);
        CHECK(std::abs(rate - row.expected) <= 5.0 * sigma + 0.01);
    }
    CHECK(rows[0].expected == doctest::Approx(0.5));
    CHECK(rows[1].expected == doctest::Approx(std::exp2(-0.5)));
}

TEST_CASE("trivial detector experiment has zero P-side error") {
    const auto result = run_trivial_detect_experiment(64, 3, 8, 2000, 2000, 11);
    CHECK(result.p_errors == 0);
    // Q-side error = P[Y matches the row pattern] = 2^-8
    const double expected = std::exp2(-8.0) * 2000.0;
    CHECK(std::abs(static_cast<double>(result.q_errors) - expected) <
          5.0 * std::sqrt(expected) + 3.0);
}

TEST_CASE("covered detector experiment separates P from Q with enough tests") {
    const auto result = run_covered_detect_experiment(2000, 100, 500, 400, 5);
    CHECK(result.pairs == 400);
    CHECK(result.error_rate() < 0.05);
}

TEST_CASE("covered detector experiment is near-blind with very few tests") {
    const auto result = run_covered_detect_experiment(2000, 8, 2, 400, 5);
    CHECK(result.error_rate() > 0.3);
}

TEST_CASE("dd experiment has no false identifications and sane none-rate") {
    const auto result = run_dd_experiment(1000, 25, 2, 4000, 77);
    CHECK(result.false_identifications == 0);
    CHECK(result.identified + result.none == result.trials);
    CHECK(result.tests_used == 2 * 6 * 2);  // v = ceil(log2(40)) = 6, c = 2

    const double none_expected = std::pow(1.0 - std::exp(-1.0), 2.0);
    const double rate = static_cast<double>(result.none) / static_cast<double>(result.trials);
    const double sigma = std::sqrt(none_expected * (1.0 - none_expected) / 4000.0);
    CHECK(std::abs(rate - none_expected) < 5.0 * sigma + 0.05);
}

TEST_CASE("witness experiment finds disjoint consistent sets below the transition") {
    // almost no tests: disjoint consistent sets abound
    const auto low = run_witness_experiment(64, 2, 1, 200, 20000, 3);
    CHECK(low.found > 150);
    // many tests: exhaustive search proves none exists in most trials
    const auto high = run_witness_experiment(64, 2, 80, 200, 20000, 3);
    CHECK(high.not_found > 150);
    CHECK(low.trials == low.found + low.not_found + low.indeterminate);
}

TEST_CASE("matrix serialization round-trips") {
    SplitMix64 rng(123);
    const PopulationParams pop(75, 3);
    const BitMatrix x = gen_bernoulli(pop, 20, rng);
    const MatrixHeader header{75, 3, 20, "bernoulli", 123};

    std::stringstream ss;
    write_matrix(ss, x, header);
    const auto [back, header_back] = read_matrix(ss);
    CHECK(back == x);
    CHECK(header_back.p == 75);
    CHECK(header_back.k == 3);
    CHECK(header_back.n == 20);
    CHECK(header_back.design == "bernoulli");
    CHECK(header_back.seed == 123);
}

TEST_CASE("matrix hex encoding puts column 4t in the nibble's MSB") {
    BitMatrix x(1, 8);
    x.set(0, 0);  // nibble 0 -> 8
    x.set(0, 7);  // nibble 1 -> 1
    std::stringstream ss;
    write_matrix(ss, x, MatrixHeader{8, 1, 1, "bernoulli", 0});
    std::string line;
    std::getline(ss, line);  // header
    std::getline(ss, line);
    CHECK(line == "81");
}

TEST_CASE("read_matrix rejects malformed input") {
    {
        std::stringstream ss("");
        CHECK_THROWS_AS(read_matrix(ss), std::runtime_error);
    }
    {
        std::stringstream ss("{\"p\":8,\"k\":1,\"n\":2,\"design\":\"bernoulli\",\"seed\":0}\nff\n");
        CHECK_THROWS_AS(read_matrix(ss), std::runtime_error);  // truncated rows
    }
    {
        std::stringstream ss("{\"p\":8,\"k\":1,\"n\":1,\"design\":\"bernoulli\",\"seed\":0}\nfff\n");
        CHECK_THROWS_AS(read_matrix(ss), std::runtime_error);  // wrong row length
    }
    {
        std::stringstream ss("{\"p\":8,\"k\":1,\"n\":1,\"design\":\"bernoulli\",\"seed\":0}\nzz\n");
        CHECK_THROWS_AS(read_matrix(ss), std::runtime_error);  // bad hex digit
    }
}

TEST_CASE("decoder names round-trip") {
    for (DecoderKind d : {DecoderKind::Comp, DecoderKind::RankOverlap, DecoderKind::MlExhaustive}) {
        CHECK(parse_decoder(to_string(d)) == d);
    }
    CHECK_THROWS_AS(parse_decoder("nope"), std::invalid_argument);
}
