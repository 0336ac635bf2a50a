// Single operator entry point: gen-data | train | select | verify | report.
// Exit codes: 0 ok, 1 usage, 2 data, 3 numerical, 4 verification.
#include <iostream>
#include <string>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "deepsn/errors.hpp"
#include "deepsn/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"influence estimation and seed selection with sheaf reaction-diffusion networks"};
    app.require_subcommand(1);

    std::string config_path, dataset, out_dir, data_dir, variant, model;
    std::uint64_t seed = 0;
    double budget = 0.0;
    int runs = 0, threads = 0;

    app.add_option("--config", config_path, "JSON config file (flags override its fields)");
    app.add_option("--dataset", dataset, "registry name or edge-list path");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--data-dir", data_dir, "directory for materialized edge lists");
    app.add_option("--variant", variant, "seed-selection variant")
        ->check(CLI::IsMember({"deepsn", "sp", "wc", "wsa"}));
    app.add_option("--budget", budget, "seed budget as a percentage of n");
    app.add_option("--model", model, "diffusion model")->check(CLI::IsMember({"ic", "lt", "sis"}));
    app.add_option("--runs", runs, "Monte Carlo runs for final evaluation");
    app.add_option("--threads", threads, "OpenMP thread cap (0 keeps the runtime default)");

    CLI::App* gen = app.add_subcommand("gen-data", "simulate ground-truth cascade corpora");
    CLI::App* train = app.add_subcommand("train", "fit the influence estimator");
    CLI::App* select = app.add_subcommand("select", "partition, train the scorer, emit a seed set");
    CLI::App* verify = app.add_subcommand("verify", "run the built-in property suites");
    CLI::App* report = app.add_subcommand("report", "print accumulated result rows");
    CLI::App* datasets = app.add_subcommand("datasets", "list the dataset registry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        deepsn::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = deepsn::load_config(config_path);
        if (app.count("--dataset")) cfg.dataset = dataset;
        if (app.count("--seed")) cfg.seed = seed;
        if (app.count("--out")) cfg.out_dir = out_dir;
        if (app.count("--data-dir")) cfg.data_dir = data_dir;
        if (app.count("--variant")) cfg.variant = variant;
        if (app.count("--budget")) cfg.budget_pct = budget;
        if (app.count("--model")) cfg.model = model;
        if (app.count("--runs")) cfg.eval_runs = runs;
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif

        if (gen->parsed()) {
            deepsn::cmd_gen_data(cfg, std::cout);
        } else if (train->parsed()) {
            deepsn::cmd_train(cfg, std::cout);
        } else if (select->parsed()) {
            deepsn::cmd_select(cfg, std::cout);
        } else if (verify->parsed()) {
            deepsn::cmd_verify(std::cout);
        } else if (report->parsed()) {
            deepsn::cmd_report(cfg, std::cout);
        } else if (datasets->parsed()) {
            for (const deepsn::DatasetInfo& info : deepsn::dataset_registry())
                std::cout << info.name << "  n=" << info.vertices << " m=" << info.edges
                          << (info.in_ci ? "" : "  (not exercised in CI)") << "\n";
        }
        return 0;
    } catch (const deepsn::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const deepsn::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const deepsn::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const deepsn::VerificationError& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
