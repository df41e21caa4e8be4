#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vnfmig/errors.hpp"
#include "vnfmig/pipeline.hpp"

namespace {

const char* const kStages[] = {"generate", "dataset", "tune", "train", "eval", "bench", "all"};

const char* stage_help(const std::string& stage) {
    if (stage == "generate") return "Sample a seeded snapshot corpus";
    if (stage == "dataset") return "Solve every migration subset and encode the dataset";
    if (stage == "tune") return "Swarm-search the learning rate with cross validation";
    if (stage == "train") return "Train the placement network";
    if (stage == "eval") return "Score the trained network against the solver labels";
    if (stage == "bench") return "Time the solver against the trained surrogate";
    return "Run every stage in order";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VNF instance migration laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int workers = 0;
    int snapshots = 0;
    int epochs = 0;
    double learning_rate = 0.0;

    auto* config_opt = app.add_option("-c,--config", config_path, "JSON config file");
    auto* out_opt =
        app.add_option("-o,--out", out_dir, "output directory (overrides VNFMIG_OUT and config)");
    auto* seed_opt = app.add_option("--seed", seed, "master seed override");
    auto* workers_opt = app.add_option("--workers", workers, "solver worker threads");
    auto* snapshots_opt = app.add_option("--snapshots", snapshots, "corpus size override");
    auto* epochs_opt = app.add_option("--epochs", epochs, "training epoch override");
    auto* lr_opt = app.add_option("--lr", learning_rate, "learning rate override");

    for (const char* stage : kStages) app.add_subcommand(stage, stage_help(stage))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        vnfmig::pipeline::PipelineConfig cfg;
        if (config_opt->count() > 0)
            cfg = vnfmig::pipeline::PipelineConfig::from_file(config_path);
        if (const char* env = std::getenv("VNFMIG_OUT"); env != nullptr && *env != '\0')
            cfg.out_dir = env;
        if (out_opt->count() > 0) cfg.out_dir = out_dir;
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (workers_opt->count() > 0) cfg.workers = workers;
        if (snapshots_opt->count() > 0) cfg.snapshots = snapshots;
        if (epochs_opt->count() > 0) cfg.train.epochs = epochs;
        if (lr_opt->count() > 0) cfg.train.adam.learning_rate = learning_rate;
        cfg.validate();

        const std::string stage = app.get_subcommands().front()->get_name();
        vnfmig::pipeline::run_stage(stage, cfg);
        return 0;
    } catch (const vnfmig::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 1;
    } catch (const vnfmig::MissingArtifact& err) {
        std::cerr << "missing artifact: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    }
}
