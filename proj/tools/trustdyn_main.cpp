#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "trustdyn/runner.hpp"

// trustdyn: batch toolkit for trust-dynamics modeling. Stages mirror the
// experiment pipeline: simulate a synthetic cohort, fit per-agent trust
// models, cluster trajectories into archetypes, train the archetype
// classifier, run the group statistics, and emit per-agent reports.

int main(int argc, char** argv) {
    CLI::App app{"trust dynamics modeling toolkit"};
    app.require_subcommand(0, 0);

    std::string command;
    std::string config_path;
    std::string out_dir;
    std::string mode;
    std::int64_t seed = -1;
    bool seed_given = false;
    int threads = -1;
    bool quiet = false;

    app.add_option("command", command,
                   "one of: simulate | fit | cluster | classify | analyze | report | all")
        ->required()
        ->check(CLI::IsMember(
            {"simulate", "fit", "cluster", "classify", "analyze", "report", "all"}));
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--seed", seed, "root seed (overrides the config file)")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--out", out_dir, "output directory (overrides the config file)");
    app.add_option("--mode", mode, "clustering mode")
        ->check(CLI::IsMember({"per_level", "pooled"}));
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_flag("--quiet", quiet, "suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? trustdyn::kExitOk : trustdyn::kExitConfigError;
    }

    trustdyn::PipelineConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = trustdyn::parse_config(config_path);
        }
        if (seed_given) {
            cfg.seed = static_cast<std::uint64_t>(seed);
            cfg.seed_set = true;
        }
        if (!cfg.seed_set) throw trustdyn::MissingRequired("missing required key: seed");
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (mode == "per_level") cfg.clustering_mode = trustdyn::ClusteringMode::PerLevel;
        if (mode == "pooled") cfg.clustering_mode = trustdyn::ClusteringMode::Pooled;
        if (threads >= 0) cfg.threads = threads;
        if (quiet) cfg.quiet = true;
    } catch (const trustdyn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return trustdyn::kExitConfigError;
    }

    return trustdyn::run_subcommand_exit(command, cfg);
}
