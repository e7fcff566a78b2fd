// gtaon command-line front end: parameter sweeps, divergence evaluation,
// detector / identification experiments, and the brute-force oracle suite.
//
// Exit codes: 0 success, 1 usage error, 2 oracle-suite failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gtaon/harness.hpp"
#include "gtaon/oracles.hpp"

using nlohmann::json;
using namespace gtaon;

namespace {

json curve_to_json(const SweepConfig& config, const PhaseCurve& curve) {
    json cells = json::array();
    for (const CellStats& c : curve.cells) {
        auto metric = [&](std::size_t successes, std::size_t trials) {
            const WilsonInterval w = wilson_interval(successes, trials);
            return json{{"successes", successes}, {"rate", w.rate}, {"lo", w.lo}, {"hi", w.hi}};
        };
        json cell{{"cell", c.cell},
                  {"beta", c.beta},
                  {"n", c.n},
                  {"trials", c.trials},
                  {"exact", metric(c.exact, c.trials)},
                  {"approx", metric(c.alpha_approx, c.trials)},
                  {"weak", metric(c.weak, c.trials)}};
        if (c.has_detect) cell["detect"] = metric(c.detect, c.trials);
        cells.push_back(std::move(cell));
    }
    return json{{"p", config.p},
                {"k", config.k},
                {"design", to_string(config.design)},
                {"decoder", to_string(config.decoder)},
                {"alpha", config.alpha},
                {"delta", config.delta},
                {"seed", config.master_seed},
                {"log2_binom", detail::log2_choose(config.p, config.k)},
                {"cells", std::move(cells)}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group-testing experiment toolkit"};
    app.require_subcommand(1);

    // --- sweep -------------------------------------------------------------
    SweepConfig sweep_cfg;
    std::string sweep_design = "bernoulli";
    std::string sweep_decoder = "rank_overlap";
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over the beta grid");
    sweep->set_config("--config", "", "Read options from a TOML config file");
    sweep->add_option("--p", sweep_cfg.p, "Item count")->required();
    sweep->add_option("--k", sweep_cfg.k, "Defective count")->required();
    sweep->add_option("--beta", sweep_cfg.betas,
                      "Strictly increasing test-count fractions of k log2(p/k)")
        ->required();
    sweep->add_option("--design", sweep_design, "bernoulli | column_zeroed")
        ->check(CLI::IsMember({"bernoulli", "column_zeroed"}));
    sweep->add_option("--alpha-prime", sweep_cfg.alpha_prime,
                      "Discarded-column fraction (column_zeroed only)");
    sweep->add_option("--decoder", sweep_decoder, "comp | rank_overlap | ml_exhaustive")
        ->check(CLI::IsMember({"comp", "rank_overlap", "ml_exhaustive"}));
    sweep->add_option("--trials", sweep_cfg.trials, "Trials per cell (default 500)");
    sweep->add_option("--seed", sweep_cfg.master_seed, "Master seed");
    sweep->add_option("--alpha", sweep_cfg.alpha, "Approximate-recovery threshold");
    sweep->add_option("--delta", sweep_cfg.delta, "Weak-recovery threshold");
    sweep->add_option("--out", sweep_cfg.out_csv, "CSV output path");
    sweep->add_flag("--no-detector",
                    [&](std::int64_t) { sweep_cfg.run_detector = false; },
                    "Skip the covered-column detector");

    // --- chi2 --------------------------------------------------------------
    std::size_t chi2_p = 0, chi2_k = 0, chi2_n = 0;
    double chi2_eta = 0.0;
    auto* chi2 = app.add_subcommand("chi2", "Divergence between the planted and null models");
    chi2->add_option("--p", chi2_p, "Item count")->required();
    chi2->add_option("--k", chi2_k, "Defective count")->required();
    auto* chi2_n_opt = chi2->add_option("--n", chi2_n, "Test count");
    auto* chi2_eta_opt =
        chi2->add_option("--eta", chi2_eta, "Derive n = floor((1-eta) log2 C(p,k))")
            ->check(CLI::Range(1e-9, 1.0 - 1e-9));
    chi2_n_opt->excludes(chi2_eta_opt);

    // --- detect ------------------------------------------------------------
    std::string detect_kind = "covered";
    std::size_t det_p = 0, det_k = 0, det_n = 0, det_trials = 1000;
    std::uint64_t det_seed = 0;
    auto* detect = app.add_subcommand("detect", "Detector error-rate experiments");
    detect->add_option("--kind", detect_kind, "covered | trivial")
        ->check(CLI::IsMember({"covered", "trivial"}));
    detect->add_option("--p", det_p, "Item count")->required();
    detect->add_option("--k", det_k, "Defective count")->required();
    detect->add_option("--n", det_n, "Test count")->required();
    detect->add_option("--trials", det_trials, "Paired trials (or trials per side)");
    detect->add_option("--seed", det_seed, "Master seed");

    // --- dd ----------------------------------------------------------------
    std::size_t dd_p = 0, dd_k = 0, dd_c = 1, dd_trials = 1000;
    std::uint64_t dd_seed = 0;
    auto* dd = app.add_subcommand("dd", "Definite single-index identification experiment");
    dd->add_option("--p", dd_p, "Item count")->required();
    dd->add_option("--k", dd_k, "Defective count")->required();
    dd->add_option("--c", dd_c, "Repetition count");
    dd->add_option("--trials", dd_trials, "Trials");
    dd->add_option("--seed", dd_seed, "Master seed");

    // --- oracle ------------------------------------------------------------
    std::size_t or_max_p = 5, or_max_k = 2, or_max_n = 3;
    std::uint64_t or_seed = 424242;
    auto* oracle = app.add_subcommand("oracle", "Run the brute-force oracle suite");
    oracle->add_option("--max-p", or_max_p, "Enumeration grid limit for p");
    oracle->add_option("--max-k", or_max_k, "Enumeration grid limit for k");
    oracle->add_option("--max-n", or_max_n, "Enumeration grid limit for n");
    oracle->add_option("--seed", or_seed, "Monte Carlo seed");

    // --- yprime ------------------------------------------------------------
    std::size_t yp_p = 4096, yp_k = 64, yp_tests = 100000;
    std::vector<double> yp_deltas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::uint64_t yp_seed = 0;
    auto* yprime = app.add_subcommand("yprime", "Planted-overlap fresh-test prediction");
    yprime->add_option("--p", yp_p, "Item count");
    yprime->add_option("--k", yp_k, "Defective count");
    yprime->add_option("--delta", yp_deltas, "Planted overlap fractions");
    yprime->add_option("--tests", yp_tests, "Fresh tests per delta");
    yprime->add_option("--seed", yp_seed, "Master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sweep->parsed()) {
            sweep_cfg.design =
                sweep_design == "bernoulli" ? DesignKind::Bernoulli : DesignKind::ColumnZeroed;
            sweep_cfg.decoder = parse_decoder(sweep_decoder);
            sweep_cfg.validate();
            const PhaseCurve curve = run_sweep(sweep_cfg);
            std::cout << curve_to_json(sweep_cfg, curve).dump(2) << std::endl;
            return 0;
        }

        if (chi2->parsed()) {
            if (chi2_eta_opt->count() > 0) {
                chi2_n = static_cast<std::size_t>(
                    std::floor((1.0 - chi2_eta) * detail::log2_choose(chi2_p, chi2_k)));
            } else if (chi2_n_opt->count() == 0) {
                std::cerr << "chi2: provide --n or --eta\n";
                return 1;
            }
            const Chi2Value value = chi2_exact(chi2_p, chi2_k, chi2_n);
            json out{{"p", chi2_p}, {"k", chi2_k}, {"n", chi2_n},
                     {"chi2", value.value}, {"log1p_chi2", value.log1p_value}};
            if (chi2_eta_opt->count() > 0) {
                const Chi2Value bound = chi2_lemma3_bound(chi2_p, chi2_k, chi2_eta);
                out["eta"] = chi2_eta;
                out["lemma3_bound"] = bound.value;
                out["log1p_lemma3_bound"] = bound.log1p_value;
            } else {
                out["lemma3_bound"] = nullptr;
            }
            std::cout << out.dump(2) << std::endl;
            return 0;
        }

        if (detect->parsed()) {
            json out{{"kind", detect_kind}, {"p", det_p}, {"k", det_k},
                     {"n", det_n}, {"seed", det_seed}};
            if (detect_kind == "covered") {
                const auto r = run_covered_detect_experiment(det_p, det_k, det_n,
                                                             det_trials, det_seed);
                out["pairs"] = r.pairs;
                out["p_errors"] = r.p_errors;
                out["q_errors"] = r.q_errors;
                out["error_rate"] = r.error_rate();
            } else {
                const auto r = run_trivial_detect_experiment(det_p, det_k, det_n,
                                                             det_trials, det_trials, det_seed);
                out["p_trials"] = r.p_trials;
                out["p_errors"] = r.p_errors;
                out["q_trials"] = r.q_trials;
                out["q_errors"] = r.q_errors;
            }
            std::cout << out.dump(2) << std::endl;
            return 0;
        }

        if (dd->parsed()) {
            const auto r = run_dd_experiment(dd_p, dd_k, dd_c, dd_trials, dd_seed);
            const json out{
                {"p", dd_p}, {"k", dd_k}, {"c", dd_c}, {"seed", dd_seed},
                {"trials", r.trials},
                {"tests_used", r.tests_used},
                {"identified_rate",
                 static_cast<double>(r.identified) / static_cast<double>(r.trials)},
                {"none_rate", static_cast<double>(r.none) / static_cast<double>(r.trials)},
                {"false_identifications", r.false_identifications}};
            std::cout << out.dump(2) << std::endl;
            return 0;
        }

        if (oracle->parsed()) {
            const auto checks = run_oracle_suite(or_max_p, or_max_k, or_max_n, or_seed);
            bool all_pass = true;
            json out = json::array();
            for (const auto& c : checks) {
                out.push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"max_delta", c.max_delta},
                               {"detail", c.detail}});
                all_pass &= c.pass;
            }
            std::cout << json{{"checks", out}, {"all_pass", all_pass}}.dump(2) << std::endl;
            return all_pass ? 0 : 2;
        }

        if (yprime->parsed()) {
            const auto rows = run_yprime_experiment(yp_p, yp_k, yp_deltas, yp_tests, yp_seed);
            json out = json::array();
            for (const auto& row : rows) {
                out.push_back(
                    {{"delta", row.delta_requested},
                     {"delta_effective", row.delta_effective},
                     {"trials", row.trials},
                     {"successes", row.successes},
                     {"rate", static_cast<double>(row.successes) /
                                  static_cast<double>(row.trials)},
                     {"expected", row.expected}});
            }
            std::cout << json{{"p", yp_p}, {"k", yp_k}, {"seed", yp_seed}, {"rows", out}}.dump(2)
                      << std::endl;
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    return 1;
}
