// pcamix command line: batch experiment runner and verification entry point.
//
// Exit codes: 0 success, 1 verification/measurement failure, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include "pcamix/analysis.hpp"
#include "pcamix/coupling.hpp"
#include "pcamix/exact.hpp"
#include "pcamix/errors.hpp"
#include "pcamix/experiment.hpp"
#include "pcamix/util.hpp"
#include "pcamix/version.hpp"

#include <fstream>
#include <functional>
#include <iostream>

namespace {

struct KernelFlags {
    std::string preset = "nn2d";
    double coupling = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "Kernel preset")->check(CLI::IsMember({"nn2d"}));
        cmd->add_option("--coupling", coupling, "Preset coupling strength J")
            ->capture_default_str();
    }
    pcamix::InteractionKernel kernel() const {
        return pcamix::InteractionKernel::nearest_neighbor_2d(coupling);
    }
};

int threads_flag(CLI::App* cmd, int& threads) {
    cmd->add_option("--threads", threads, "Worker threads (0 = logical cores)")
        ->envname("PCA_THREADS")
        ->capture_default_str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attractive PCA simulation and exact-analysis toolkit"};
    app.set_version_flag("--version", std::string("pcamix ") + pcamix::kVersion);
    app.require_subcommand(1);

    std::function<int()> action;

    // verify ------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("verify", "Run the verification battery");
        auto level = std::make_shared<std::string>("fast");
        auto opts = std::make_shared<pcamix::VerifyOptions>();
        cmd->add_option("--level", *level, "Verification depth")
            ->check(CLI::IsMember({"fast", "full"}))
            ->capture_default_str();
        cmd->add_option("--baselines", opts->baselines_path,
                        "CSV file overriding the built-in baseline table (name,value,tolerance)");
        cmd->add_option("--seed", opts->seed, "Seed for the randomized checks")
            ->capture_default_str();
        threads_flag(cmd, opts->threads);
        cmd->callback([&action, level, opts] {
            action = [level, opts] {
                const auto lvl = *level == "full" ? pcamix::VerifyLevel::Full
                                                  : pcamix::VerifyLevel::Fast;
                return pcamix::run_verify(lvl, *opts, std::cout);
            };
        });
    }

    // scan ----------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("scan", "Run a phase scan from a config file");
        auto path = std::make_shared<std::string>();
        auto outdir = std::make_shared<std::string>();
        auto samples = std::make_shared<long long>(-1);
        auto seed = std::make_shared<long long>(-1);
        auto threads = std::make_shared<int>(-1);
        auto mode = std::make_shared<std::string>();
        cmd->add_option("config", *path, "Experiment config file")->required();
        cmd->add_option("--outdir", *outdir, "Override run.outdir");
        cmd->add_option("--samples", *samples, "Override run.samples");
        cmd->add_option("--seed", *seed, "Override run.seed");
        cmd->add_option("--threads", *threads, "Override run.threads")->envname("PCA_THREADS");
        cmd->add_option("--mode", *mode, "Override run.mode")
            ->check(CLI::IsMember({"exact-only", "mc-allowed"}));
        cmd->callback([&action, path, outdir, samples, seed, threads, mode] {
            action = [path, outdir, samples, seed, threads, mode] {
                pcamix::ExperimentConfig cfg = pcamix::ExperimentConfig::parse_file(*path);
                if (!outdir->empty()) cfg.outdir = *outdir;
                if (*samples >= 0) cfg.samples = static_cast<std::uint64_t>(*samples);
                if (*seed >= 0) cfg.seed = static_cast<std::uint64_t>(*seed);
                if (*threads >= 0) cfg.threads = *threads;
                if (!mode->empty()) cfg.allow_mc = *mode == "mc-allowed";
                return pcamix::run_scan(cfg, std::cout);
            };
        });
    }

    // rho -----------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("rho", "Estimate the coupled disagreement probability rho(n)");
        struct Args {
            double beta = 0.0;
            std::uint32_t n = 1;
            int box_radius = -1;
            std::uint64_t samples = 100'000;
            std::uint64_t seed = 0;
            int threads = 0;
            std::string out;
            KernelFlags kernel;
        };
        auto a = std::make_shared<Args>();
        cmd->add_option("--beta", a->beta, "Inverse-temperature parameter")->required();
        cmd->add_option("--n", a->n, "Time horizon")->required()->check(CLI::PositiveNumber);
        cmd->add_option("--L", a->box_radius, "Box radius (default: n * kernel range)");
        cmd->add_option("--samples", a->samples, "Monte Carlo samples")->capture_default_str();
        cmd->add_option("--seed", a->seed, "Randomness seed")->capture_default_str();
        cmd->add_option("--out", a->out, "Also append the estimate to this CSV file");
        threads_flag(cmd, a->threads);
        a->kernel.attach(cmd);
        cmd->callback([&action, a] {
            action = [a] {
                const pcamix::ClassCRule rule(a->beta, a->kernel.kernel());
                const int radius =
                    a->box_radius >= 0 ? a->box_radius : static_cast<int>(a->n) * rule.range();
                const pcamix::BoxRegion region = pcamix::BoxRegion::ball(rule.dim(), radius);
                const pcamix::RhoEstimate est = pcamix::estimate_rho(
                    rule, region, a->n, a->samples, pcamix::RandomnessKey{a->seed, 0, 0, {}},
                    a->threads);
                std::cout << "rho(" << est.n << ") = " << pcamix::format_g17(est.p_hat) << " +- "
                          << pcamix::format_g17(est.ci_halfwidth) << "  (samples=" << est.samples
                          << ", L=" << radius << ")\n";
                if (!a->out.empty()) {
                    std::ofstream os(a->out, std::ios::binary);
                    if (!os) throw pcamix::ConfigError("cannot write " + a->out);
                    pcamix::write_rho_csv(os, {est}, a->beta, radius, a->seed);
                }
                return 0;
            };
        });
    }

    // gap -------------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("gap", "Boundary-influence gap of the stationary measure on B_L");
        struct Args {
            double beta = 0.0;
            int box_radius = 0;
            std::string mode = "exact";
            std::uint64_t samples = 100'000;
            std::uint32_t horizon = 0;
            std::uint64_t seed = 0;
            int threads = 0;
            KernelFlags kernel;
        };
        auto a = std::make_shared<Args>();
        cmd->add_option("--beta", a->beta, "Inverse-temperature parameter")->required();
        cmd->add_option("--L", a->box_radius, "Box radius")->required()
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--mode", a->mode, "exact enumeration or mc fallback")
            ->check(CLI::IsMember({"exact", "mc"}))
            ->capture_default_str();
        cmd->add_option("--samples", a->samples, "MC samples")->capture_default_str();
        cmd->add_option("--horizon", a->horizon, "MC horizon (0 = heuristic)");
        cmd->add_option("--seed", a->seed, "Randomness seed")->capture_default_str();
        threads_flag(cmd, a->threads);
        a->kernel.attach(cmd);
        cmd->callback([&action, a] {
            action = [a] {
                const pcamix::ClassCRule rule(a->beta, a->kernel.kernel());
                pcamix::GapOptions opts;
                opts.allow_mc = a->mode == "mc";
                if (opts.allow_mc) opts.budget.max_sites = 0; // force the requested method
                opts.mc_samples = a->samples;
                opts.mc_horizon = a->horizon;
                opts.key = pcamix::RandomnessKey{a->seed, 0, 0, {}};
                opts.threads = a->threads;
                const pcamix::GapResult res = pcamix::gap_a(rule, a->box_radius, opts);
                std::cout << "gap_A(" << a->box_radius << ") = " << pcamix::format_g17(res.value);
                if (res.method == pcamix::GapMethod::MonteCarlo) {
                    std::cout << " +- " << pcamix::format_g17(res.ci_halfwidth)
                              << "  (mc, horizon=" << res.horizon
                              << ", bias~" << pcamix::format_g17(res.bias_diagnostic) << ")";
                } else {
                    std::cout << "  (exact)";
                }
                std::cout << "\n";
                return 0;
            };
        });
    }

    // nu-table ---------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("nu-table", "Export the exact reversible measure on B_L");
        struct Args {
            double beta = 0.0;
            int box_radius = 0;
            std::string tau = "plus";
            std::string out;
            std::string csv;
            int threads = 0;
            KernelFlags kernel;
        };
        auto a = std::make_shared<Args>();
        cmd->add_option("--beta", a->beta, "Inverse-temperature parameter")->required();
        cmd->add_option("--L", a->box_radius, "Box radius")->required()
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--tau", a->tau, "Boundary condition")
            ->check(CLI::IsMember({"plus", "minus"}))
            ->capture_default_str();
        cmd->add_option("--out", a->out, "Output binary table file")->required();
        cmd->add_option("--csv", a->csv, "Also write a CSV rendering (regions up to 8 sites)");
        threads_flag(cmd, a->threads);
        a->kernel.attach(cmd);
        cmd->callback([&action, a] {
            action = [a] {
                const pcamix::ClassCRule rule(a->beta, a->kernel.kernel());
                const pcamix::BoxRegion region = pcamix::BoxRegion::ball(rule.dim(), a->box_radius);
                const auto tau = a->tau == "plus" ? pcamix::BoundaryCondition::all_plus()
                                                  : pcamix::BoundaryCondition::all_minus();
                const pcamix::MeasureTable table =
                    pcamix::nu_table(rule, region, tau, {}, a->threads);
                std::ofstream os(a->out, std::ios::binary);
                if (!os) throw pcamix::ConfigError("cannot write " + a->out);
                table.write_binary(os);
                std::cout << "wrote " << table.configurations() << " probabilities to " << a->out
                          << "\n";
                if (!a->csv.empty()) {
                    std::ofstream cs(a->csv, std::ios::binary);
                    if (!cs) throw pcamix::ConfigError("cannot write " + a->csv);
                    table.write_csv(cs);
                    std::cout << "wrote CSV rendering to " << a->csv << "\n";
                }
                return 0;
            };
        });
    }

    // dv ----------------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("dv", "Dobrushin-Vasershtein influence sum and threshold");
        struct Args {
            double beta = -1.0;
            bool solve = false;
            KernelFlags kernel;
        };
        auto a = std::make_shared<Args>();
        cmd->add_option("--beta", a->beta, "Evaluate the influence sum at this beta");
        cmd->add_flag("--solve", a->solve, "Bisect for the beta where the sum reaches 1");
        a->kernel.attach(cmd);
        cmd->callback([&action, a] {
            action = [a] {
                const pcamix::InteractionKernel kernel = a->kernel.kernel();
                bool did = false;
                if (a->beta >= 0.0) {
                    const double v = pcamix::dv_sum(pcamix::ClassCRule(a->beta, kernel));
                    std::cout << "dv_sum(beta=" << pcamix::format_g17(a->beta)
                              << ") = " << pcamix::format_g17(v)
                              << (v < 1.0 ? "  (contraction holds)" : "  (no contraction)") << "\n";
                    did = true;
                }
                if (a->solve || !did) {
                    const double b = pcamix::dv_threshold(kernel, 1e-8);
                    std::cout << "dv threshold: beta* = " << pcamix::format_g17(b) << "\n";
                }
                return 0;
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return action ? action() : 2;
    } catch (const pcamix::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pcamix::BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 2;
    } catch (const pcamix::RegionTooSmallError& e) {
        std::cerr << "region error: " << e.what() << "\n";
        return 2;
    } catch (const pcamix::NestingError& e) {
        std::cerr << "nesting error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
