#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vnfmig/mlp.hpp"
#include "vnfmig/pso.hpp"
#include "vnfmig/topology.hpp"

namespace vnfmig::pipeline {

struct TuneSettings {
    bool enabled = false; // when off, training uses the configured rate
    int particles = 10;
    int iterations = 50;
    int epochs = 15;
    int folds = 3;
    int max_rows = 2000;
    double lower = -8.0;
    double upper = -1.0;
};

struct BenchSettings {
    std::vector<int> counts{1, 10, 100, 1000};
    int repeats = 3;
};

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int workers = 1;
    int snapshots = 1000;
    double split_ratio = 0.8;
    topology::GeneratorConfig generator; // its seed is derived from the master seed
    mlp::ModelSpec model;                // data dimensions are filled in at train time
    mlp::TrainConfig train;
    TuneSettings tune;
    BenchSettings bench;

    void validate() const;
    std::string to_json() const;
    static PipelineConfig from_json(const std::string& text);
    static PipelineConfig from_file(const std::string& path);
};

/// Stage entry points. Artifacts land under out_dir and every stage records
/// content hashes in manifest.json; downstream stages refuse missing or
/// stale inputs with MissingArtifact.
void run_generate(const PipelineConfig& config);
void run_dataset(const PipelineConfig& config);
void run_tune(const PipelineConfig& config);
void run_train(const PipelineConfig& config);
void run_eval(const PipelineConfig& config);
void run_bench(const PipelineConfig& config);
void run_all(const PipelineConfig& config);

/// Dispatch by stage name; unknown names raise ConfigError.
void run_stage(const std::string& stage, const PipelineConfig& config);

} // namespace vnfmig::pipeline
