// Command-line front end: solve analytic models, run the simulation oracle,
// or compare the two.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "qnet/qnet.hpp"

namespace {

int classify(const std::exception& e) {
    if (dynamic_cast<const qnet::ParseError*>(&e) || dynamic_cast<const qnet::ValidationError*>(&e))
        return 1;
    if (dynamic_cast<const qnet::IoError*>(&e)) return 3;
    if (dynamic_cast<const qnet::Error*>(&e)) return 2;
    return 2;
}

struct SolveArgs {
    std::vector<std::string> configs;
    int round = 0;
    bool dump_matrix = false;
    int jobs = 1;
    std::string outdir = ".";
};

int do_solve(const SolveArgs& args) {
    std::vector<qnet::RunConfig> cfgs;
    for (const auto& path : args.configs) cfgs.push_back(qnet::parse_config(path));
    qnet::RunOptions options;
    options.round = args.round;
    options.dump_matrix = args.dump_matrix;
    options.outdir = args.outdir;

    std::vector<qnet::RunOutcome> outcomes(cfgs.size());
    std::vector<std::exception_ptr> errors(cfgs.size());

    // The working-precision default is process-global, so parallel workers
    // are grouped by digit count and each group runs under one setting.
    std::map<int, std::vector<std::size_t>> by_digits;
    for (std::size_t i = 0; i < cfgs.size(); ++i)
        by_digits[cfgs[i].precision.digits].push_back(i);

    for (const auto& [digits, idxs] : by_digits) {
        qnet::PrecisionGuard guard(digits);
        const int workers = std::max(1, std::min<int>(args.jobs, static_cast<int>(idxs.size())));
        if (workers == 1) {
            for (std::size_t i : idxs) {
                try {
                    outcomes[i] = qnet::run(cfgs[i], options);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (;;) {
                        std::size_t slot = next.fetch_add(1);
                        if (slot >= idxs.size()) return;
                        std::size_t i = idxs[slot];
                        try {
                            outcomes[i] = qnet::run(cfgs[i], options);
                        } catch (...) {
                            errors[i] = std::current_exception();
                        }
                    }
                });
            for (auto& t : pool) t.join();
        }
    }

    int rc = 0;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                std::cerr << cfgs[i].stem << ": error: " << e.what() << "\n";
                rc = std::max(rc, classify(e));
            }
        } else {
            std::cout << outcomes[i].summary << "\n";
        }
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analytic steady-state solver for GI/M/c, GI/M/c/N and their batch-arrival "
                 "variants, with a discrete-event simulation oracle"};
    app.require_subcommand(1);

    SolveArgs sargs;
    auto* solve = app.add_subcommand("solve", "Solve a model config and write result files");
    solve->add_option("--config", sargs.configs, "JSON model config (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    solve->add_option("--round", sargs.round, "Round emitted decimals to k significant digits");
    solve->add_flag("--dump-matrix", sargs.dump_matrix, "Also write the transition matrix CSV");
    solve->add_option("--jobs", sargs.jobs, "Solve independent configs on up to n threads");
    solve->add_option("--outdir", sargs.outdir, "Directory for result files");

    std::string sim_config;
    std::uint64_t sim_arrivals = 0, sim_seed = 1;
    int sim_batches = 32;
    std::string sim_outdir = ".";
    auto* sim = app.add_subcommand("simulate", "Run the discrete-event oracle");
    sim->add_option("--config", sim_config, "JSON model config")->required()->check(CLI::ExistingFile);
    sim->add_option("--arrivals", sim_arrivals, "Batch arrivals to simulate");
    sim->add_option("--seed", sim_seed, "RNG seed (initial state)");
    sim->add_option("--batches", sim_batches, "Batch-means group count");
    sim->add_option("--outdir", sim_outdir, "Directory for result files");

    std::string cmp_config;
    std::uint64_t cmp_arrivals = 0, cmp_seed = 1;
    int cmp_batches = 32;
    auto* cmp = app.add_subcommand(
        "compare", "Solve and simulate, then report the worst disagreement in SE units");
    cmp->add_option("--config", cmp_config, "JSON model config")->required()->check(CLI::ExistingFile);
    cmp->add_option("--arrivals", cmp_arrivals, "Batch arrivals to simulate");
    cmp->add_option("--seed", cmp_seed, "RNG seed (initial state)");
    cmp->add_option("--batches", cmp_batches, "Batch-means group count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return do_solve(sargs);

        if (sim->parsed()) {
            qnet::RunConfig cfg = qnet::parse_config(sim_config);
            qnet::SimSettings settings;
            if (cfg.simulate) settings = *cfg.simulate;
            if (sim_arrivals) settings.arrivals = sim_arrivals;
            if (sim->count("--seed")) settings.seed = sim_seed;
            if (sim->count("--batches")) settings.batches = sim_batches;
            if (settings.arrivals == 0)
                throw qnet::ValidationError("simulate: no arrival count given (config or --arrivals)");
            qnet::RunOptions options;
            options.outdir = sim_outdir;
            auto res = qnet::run_simulation(cfg, settings, options);
            std::cout << cfg.stem << ": simulated " << res.arrivals << " arrivals, seed "
                      << res.seed << ", accepted fraction " << res.accepted_fraction << "\n";
            return 0;
        }

        // compare
        qnet::RunConfig cfg = qnet::parse_config(cmp_config);
        qnet::SimSettings settings;
        if (cfg.simulate) settings = *cfg.simulate;
        if (cmp_arrivals) settings.arrivals = cmp_arrivals;
        if (cmp->count("--seed")) settings.seed = cmp_seed;
        if (cmp->count("--batches")) settings.batches = cmp_batches;
        if (settings.arrivals == 0)
            throw qnet::ValidationError("compare: no arrival count given (config or --arrivals)");
        qnet::SolveArtifacts art = qnet::solve_model(cfg.model, cfg.precision);
        qnet::SimulationResult res =
            qnet::simulate(cfg.model, settings.arrivals, settings.seed, settings.batches);
        auto cmp_out = qnet::compare_analytic_simulated(art, res);
        std::cout << cfg.stem << ": max |analytic-simulated|: pi " << cmp_out.max_pi_se_units
                  << " SE (state " << cmp_out.worst_pi_state << "), p " << cmp_out.max_p_se_units
                  << " SE (state " << cmp_out.worst_p_state << ")\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    }
}
