#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "vnfmig/errors.hpp"
#include "vnfmig/hashing.hpp"
#include "vnfmig/pipeline.hpp"

using namespace vnfmig;
using pipeline::PipelineConfig;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& stem) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() /
                         (stem + "_" + std::to_string(::getpid()) + "_" +
                          std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

PipelineConfig smoke_config(const fs::path& out_dir) {
    PipelineConfig cfg;
    cfg.seed = 11;
    cfg.out_dir = out_dir.string();
    cfg.snapshots = 40;
    cfg.model.hidden = {32, 16};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 64;
    cfg.bench.counts = {1, 5};
    cfg.bench.repeats = 1;
    return cfg;
}

} // namespace

TEST_CASE("configs round trip through json and reject junk") {
    PipelineConfig cfg;
    cfg.seed = 5;
    cfg.snapshots = 123;
    cfg.model.hidden = {40, 20};
    cfg.train.epochs = 9;
    cfg.tune.enabled = true;
    cfg.bench.counts = {2, 4, 8};
    const auto text = cfg.to_json();
    const auto back = PipelineConfig::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.snapshots == 123);
    CHECK(back.model.hidden == std::vector<int>{40, 20});
    CHECK(back.tune.enabled);

    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"seed": 1, "bogus": 2})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"split_ratio": 1.5})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"train": {"nope": 1}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"bench": {"counts": [4, 4]}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json("not json"), ConfigError);

    PipelineConfig bad;
    bad.workers = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = PipelineConfig{};
    bad.tune.folds = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stages refuse to run without their inputs") {
    const auto dir = fresh_dir("vnfmig_missing");
    const auto cfg = smoke_config(dir);
    CHECK_THROWS_AS(pipeline::run_dataset(cfg), MissingArtifact);
    CHECK_THROWS_AS(pipeline::run_train(cfg), MissingArtifact);
    CHECK_THROWS_AS(pipeline::run_eval(cfg), MissingArtifact);
    CHECK_THROWS_AS(pipeline::run_bench(cfg), MissingArtifact);
    CHECK_THROWS_AS(pipeline::run_stage("nonsense", cfg), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("tampered artifacts read as stale") {
    const auto dir = fresh_dir("vnfmig_stale");
    const auto cfg = smoke_config(dir);
    pipeline::run_generate(cfg);
    {
        std::ofstream out(dir / "snapshots.jsonl", std::ios::app | std::ios::binary);
        out << "{}\n";
    }
    CHECK_THROWS_AS(pipeline::run_dataset(cfg), MissingArtifact);
    fs::remove_all(dir);
}

TEST_CASE("the full pipeline emits every artifact into the manifest") {
    const auto dir = fresh_dir("vnfmig_all");
    const auto cfg = smoke_config(dir);
    pipeline::run_all(cfg);

    const std::vector<std::string> expected = {
        "snapshots.jsonl",       "records.jsonl",
        "profile.json",          "dataset/schema.json",
        "dataset/features.csv",  "dataset/labels.csv",
        "dataset/splits.json",   "model.bin",
        "train/loss_curve.csv",  "train/summary.json",
        "eval/accuracy_by_migrated.csv", "eval/delay_histogram.csv",
        "eval/dependent_pairs.csv",      "eval/feasibility.csv",
        "eval/runtime.csv",      "eval/summary.json",
        "bench/runtime.csv",     "bench/summary.json"};
    for (const auto& rel : expected) {
        CAPTURE(rel);
        CHECK(fs::exists(dir / rel));
    }

    const auto manifest = nlohmann::json::parse(
        std::ifstream(dir / "manifest.json"), nullptr, true);
    REQUIRE(manifest.contains("stages"));
    const auto& stages = manifest.at("stages");
    for (const char* stage : {"generate", "dataset", "train", "eval", "bench"})
        REQUIRE(stages.contains(stage));

    std::vector<std::string> recorded;
    for (const auto& [_, entry] : stages.items())
        for (const auto& [rel, hash] : entry.at("files").items()) {
            recorded.push_back(rel);
            CHECK(hash.get<std::string>() == file_hash((dir / rel).string()));
        }
    for (const auto& rel : expected) {
        CAPTURE(rel);
        CHECK(std::find(recorded.begin(), recorded.end(), rel) != recorded.end());
    }

    SUBCASE("downstream stages rerun cleanly on fresh artifacts") {
        CHECK_NOTHROW(pipeline::run_bench(cfg));
    }
    fs::remove_all(dir);
}

TEST_CASE("generate, dataset and train reproduce bit identical artifacts") {
    const auto dir_a = fresh_dir("vnfmig_repro_a");
    const auto dir_b = fresh_dir("vnfmig_repro_b");
    auto cfg_a = smoke_config(dir_a);
    auto cfg_b = smoke_config(dir_b);
    cfg_a.snapshots = cfg_b.snapshots = 25;
    cfg_a.train.epochs = cfg_b.train.epochs = 1;

    for (const auto* cfg : {&cfg_a, &cfg_b}) {
        pipeline::run_generate(*cfg);
        pipeline::run_dataset(*cfg);
        pipeline::run_train(*cfg);
    }
    for (const char* rel : {"snapshots.jsonl", "records.jsonl", "dataset/schema.json",
                            "dataset/features.csv", "dataset/labels.csv", "dataset/splits.json",
                            "model.bin"}) {
        CAPTURE(rel);
        CHECK(file_hash((dir_a / rel).string()) == file_hash((dir_b / rel).string()));
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("tuning writes a trace and train picks the tuned rate up") {
    const auto dir = fresh_dir("vnfmig_tune");
    auto cfg = smoke_config(dir);
    cfg.snapshots = 20;
    cfg.model.hidden = {16};
    cfg.train.epochs = 1;
    cfg.tune.enabled = true;
    cfg.tune.particles = 2;
    cfg.tune.iterations = 2;
    cfg.tune.epochs = 1;
    cfg.tune.folds = 2;
    cfg.tune.max_rows = 60;

    pipeline::run_generate(cfg);
    pipeline::run_dataset(cfg);
    pipeline::run_tune(cfg);

    std::ifstream trace(dir / "tune" / "trace.csv");
    REQUIRE(trace.good());
    std::string line;
    REQUIRE(std::getline(trace, line));
    CHECK(line == "iteration,particle,h,value");
    int rows = 0;
    while (std::getline(trace, line))
        if (!line.empty()) ++rows;
    CHECK(rows == cfg.tune.particles * cfg.tune.iterations);

    const auto summary =
        nlohmann::json::parse(std::ifstream(dir / "tune" / "summary.json"), nullptr, true);
    const double best = summary.at("best_learning_rate").get<double>();
    CHECK(best >= std::pow(10.0, cfg.tune.lower));
    CHECK(best <= std::pow(10.0, cfg.tune.upper));

    pipeline::run_train(cfg);
    const auto train_summary =
        nlohmann::json::parse(std::ifstream(dir / "train" / "summary.json"), nullptr, true);
    CHECK(train_summary.at("learning_rate").get<double>() == doctest::Approx(best));
    fs::remove_all(dir);
}
