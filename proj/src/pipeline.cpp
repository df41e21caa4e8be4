#include "vnfmig/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "vnfmig/dataset.hpp"
#include "vnfmig/errors.hpp"
#include "vnfmig/eval.hpp"
#include "vnfmig/hashing.hpp"
#include "vnfmig/optimizer.hpp"
#include "vnfmig/rng.hpp"

namespace vnfmig::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("missing file: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

fs::path manifest_path(const PipelineConfig& cfg) { return fs::path(cfg.out_dir) / "manifest.json"; }

json load_manifest(const PipelineConfig& cfg) {
    const fs::path path = manifest_path(cfg);
    if (!fs::exists(path)) return json{{"version", 1}, {"stages", json::object()}};
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& err) {
        throw SchemaMismatch("manifest.json is corrupt: " + std::string(err.what()));
    }
}

void record_stage(const PipelineConfig& cfg, const std::string& stage,
                  const std::vector<std::string>& files, json info) {
    json manifest = load_manifest(cfg);
    json entry;
    entry["config"] = content_hash(cfg.to_json());
    json hashes = json::object();
    for (const auto& rel : files)
        hashes[rel] = file_hash((fs::path(cfg.out_dir) / rel).string());
    entry["files"] = std::move(hashes);
    entry["info"] = std::move(info);
    manifest["stages"][stage] = std::move(entry);
    write_text_atomic(manifest_path(cfg), manifest.dump() + "\n");
}

void require_fresh(const PipelineConfig& cfg, const std::string& stage,
                   const std::vector<std::string>& files) {
    const json manifest = load_manifest(cfg);
    if (!manifest.contains("stages") || !manifest.at("stages").contains(stage))
        throw MissingArtifact("stage '" + stage + "' has no artifacts under " + cfg.out_dir +
                              "; run `vnfmig " + stage + "` first");
    const json& entry = manifest.at("stages").at(stage);
    for (const auto& rel : files) {
        if (!entry.at("files").contains(rel))
            throw MissingArtifact("manifest lacks an entry for " + rel + "; rerun `vnfmig " +
                                  stage + "`");
        const std::string recorded = entry.at("files").at(rel).get<std::string>();
        const std::string actual = file_hash((fs::path(cfg.out_dir) / rel).string());
        if (recorded != actual)
            throw MissingArtifact("artifact " + rel + " is stale; rerun `vnfmig " + stage + "`");
    }
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

template <typename T>
void read_range(const json& obj, const char* key, std::pair<T, T>& out) {
    if (!obj.contains(key)) return;
    const json& arr = obj.at(key);
    if (!arr.is_array() || arr.size() != 2)
        throw ConfigError(std::string("range '") + key + "' must be a [low, high] pair");
    out = {arr.at(0).get<T>(), arr.at(1).get<T>()};
}

std::uint64_t stage_seed(const PipelineConfig& cfg, const char* salt) {
    return derive_seed(cfg.seed, fnv1a64(salt));
}

std::vector<topology::NetworkSnapshot> load_corpus(const PipelineConfig& cfg) {
    require_fresh(cfg, "generate", {"snapshots.jsonl"});
    std::ifstream in(fs::path(cfg.out_dir) / "snapshots.jsonl", std::ios::binary);
    if (!in) throw MissingArtifact("missing snapshots.jsonl under " + cfg.out_dir);
    std::vector<topology::NetworkSnapshot> corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        corpus.push_back(topology::snapshot_from_json(line));
    }
    if (static_cast<int>(corpus.size()) != cfg.snapshots)
        throw MissingArtifact("snapshot corpus has " + std::to_string(corpus.size()) +
                              " entries but the config expects " + std::to_string(cfg.snapshots) +
                              "; rerun `vnfmig generate`");
    return corpus;
}

const std::vector<std::string> kDatasetFiles = {
    "records.jsonl",     "profile.json",        "dataset/schema.json",
    "dataset/features.csv", "dataset/labels.csv", "dataset/splits.json"};

dataset::EncodedDataset load_dataset(const PipelineConfig& cfg,
                                     std::vector<dataset::LabeledRecord>& records) {
    require_fresh(cfg, "dataset", kDatasetFiles);
    records = dataset::read_records_jsonl((fs::path(cfg.out_dir) / "records.jsonl").string());
    return dataset::read_encoded_dataset((fs::path(cfg.out_dir) / "dataset").string(), records);
}

double resolve_learning_rate(const PipelineConfig& cfg) {
    if (!cfg.tune.enabled) return cfg.train.adam.learning_rate;
    require_fresh(cfg, "tune", {"tune/summary.json"});
    const json summary = json::parse(read_text(fs::path(cfg.out_dir) / "tune" / "summary.json"));
    return summary.at("best_learning_rate").get<double>();
}

mlp::MlpModel<float> load_model(const PipelineConfig& cfg) {
    require_fresh(cfg, "train", {"model.bin"});
    return mlp::MlpModel<float>::load((fs::path(cfg.out_dir) / "model.bin").string());
}

} // namespace

void PipelineConfig::validate() const {
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
    if (workers < 1) throw ConfigError("workers must be positive");
    if (snapshots < 1) throw ConfigError("snapshots must be positive");
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw ConfigError("split_ratio must lie in (0, 1)");
    generator.validate();
    for (int width : model.hidden)
        if (width < 1) throw ConfigError("hidden layer widths must be positive");
    if (!(model.bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be positive");
    if (!(model.bn_momentum >= 0.0 && model.bn_momentum < 1.0))
        throw ConfigError("bn_momentum must lie in [0, 1)");
    train.validate();
    if (tune.particles < 1) throw ConfigError("tune.particles must be positive");
    if (tune.iterations < 1) throw ConfigError("tune.iterations must be positive");
    if (tune.epochs < 1) throw ConfigError("tune.epochs must be positive");
    if (tune.folds < 2) throw ConfigError("tune.folds must be at least 2");
    if (tune.max_rows < tune.folds) throw ConfigError("tune.max_rows must cover the folds");
    if (!(tune.lower < tune.upper)) throw ConfigError("tune bounds must satisfy lower < upper");
    if (bench.counts.empty()) throw ConfigError("bench.counts must not be empty");
    for (std::size_t k = 0; k < bench.counts.size(); ++k) {
        if (bench.counts[k] < 1) throw ConfigError("bench.counts entries must be positive");
        if (k > 0 && bench.counts[k] <= bench.counts[k - 1])
            throw ConfigError("bench.counts must be strictly increasing");
    }
    if (bench.repeats < 1) throw ConfigError("bench.repeats must be positive");
}

std::string PipelineConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["workers"] = workers;
    j["snapshots"] = snapshots;
    j["split_ratio"] = split_ratio;
    j["generator"] = {{"n_servers", generator.n_servers},
                      {"n_instances", generator.n_instances},
                      {"n_resources", generator.n_resources},
                      {"chain", generator.chain_type_counts},
                      {"capacity", {generator.capacity_range.first, generator.capacity_range.second}},
                      {"demand", {generator.demand_range.first, generator.demand_range.second}},
                      {"delay",
                       {generator.inter_server_delay_ms.first, generator.inter_server_delay_ms.second}},
                      {"controller",
                       {generator.controller_delay_ms.first, generator.controller_delay_ms.second}},
                      {"tolerance",
                       {generator.delay_tolerance_ms.first, generator.delay_tolerance_ms.second}},
                      {"recovery",
                       {generator.recovery_delay_ms.first, generator.recovery_delay_ms.second}},
                      {"overhead",
                       {generator.migration_overhead_ms.first, generator.migration_overhead_ms.second}},
                      {"max_attempts", generator.max_attempts}};
    j["model"] = {{"hidden", model.hidden},
                  {"batch_norm", model.batch_norm},
                  {"bn_epsilon", model.bn_epsilon},
                  {"bn_momentum", model.bn_momentum}};
    j["train"] = {{"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"shuffle", train.shuffle},
                  {"learning_rate", train.adam.learning_rate},
                  {"beta1", train.adam.beta1},
                  {"beta2", train.adam.beta2},
                  {"epsilon", train.adam.epsilon}};
    j["tune"] = {{"enabled", tune.enabled}, {"particles", tune.particles},
                 {"iterations", tune.iterations}, {"epochs", tune.epochs},
                 {"folds", tune.folds},         {"max_rows", tune.max_rows},
                 {"lower", tune.lower},         {"upper", tune.upper}};
    j["bench"] = {{"counts", bench.counts}, {"repeats", bench.repeats}};
    return j.dump();
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError("config parse failure: " + std::string(err.what()));
    }
    try {
        PipelineConfig cfg;
        check_keys(j, "config", {"seed", "out_dir", "workers", "snapshots", "split_ratio",
                                 "generator", "model", "train", "tune", "bench"});
        read_key(j, "seed", cfg.seed);
        read_key(j, "out_dir", cfg.out_dir);
        read_key(j, "workers", cfg.workers);
        read_key(j, "snapshots", cfg.snapshots);
        read_key(j, "split_ratio", cfg.split_ratio);
        if (j.contains("generator")) {
            const json& g = j.at("generator");
            check_keys(g, "generator",
                       {"n_servers", "n_instances", "n_resources", "chain", "capacity", "demand",
                        "delay", "controller", "tolerance", "recovery", "overhead",
                        "max_attempts"});
            read_key(g, "n_servers", cfg.generator.n_servers);
            read_key(g, "n_instances", cfg.generator.n_instances);
            read_key(g, "n_resources", cfg.generator.n_resources);
            read_key(g, "chain", cfg.generator.chain_type_counts);
            read_range(g, "capacity", cfg.generator.capacity_range);
            read_range(g, "demand", cfg.generator.demand_range);
            read_range(g, "delay", cfg.generator.inter_server_delay_ms);
            read_range(g, "controller", cfg.generator.controller_delay_ms);
            read_range(g, "tolerance", cfg.generator.delay_tolerance_ms);
            read_range(g, "recovery", cfg.generator.recovery_delay_ms);
            read_range(g, "overhead", cfg.generator.migration_overhead_ms);
            read_key(g, "max_attempts", cfg.generator.max_attempts);
        }
        if (j.contains("model")) {
            const json& m = j.at("model");
            check_keys(m, "model", {"hidden", "batch_norm", "bn_epsilon", "bn_momentum"});
            read_key(m, "hidden", cfg.model.hidden);
            read_key(m, "batch_norm", cfg.model.batch_norm);
            read_key(m, "bn_epsilon", cfg.model.bn_epsilon);
            read_key(m, "bn_momentum", cfg.model.bn_momentum);
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            check_keys(t, "train", {"epochs", "batch_size", "shuffle", "learning_rate", "beta1",
                                    "beta2", "epsilon"});
            read_key(t, "epochs", cfg.train.epochs);
            read_key(t, "batch_size", cfg.train.batch_size);
            read_key(t, "shuffle", cfg.train.shuffle);
            read_key(t, "learning_rate", cfg.train.adam.learning_rate);
            read_key(t, "beta1", cfg.train.adam.beta1);
            read_key(t, "beta2", cfg.train.adam.beta2);
            read_key(t, "epsilon", cfg.train.adam.epsilon);
        }
        if (j.contains("tune")) {
            const json& t = j.at("tune");
            check_keys(t, "tune", {"enabled", "particles", "iterations", "epochs", "folds",
                                   "max_rows", "lower", "upper"});
            read_key(t, "enabled", cfg.tune.enabled);
            read_key(t, "particles", cfg.tune.particles);
            read_key(t, "iterations", cfg.tune.iterations);
            read_key(t, "epochs", cfg.tune.epochs);
            read_key(t, "folds", cfg.tune.folds);
            read_key(t, "max_rows", cfg.tune.max_rows);
            read_key(t, "lower", cfg.tune.lower);
            read_key(t, "upper", cfg.tune.upper);
        }
        if (j.contains("bench")) {
            const json& b = j.at("bench");
            check_keys(b, "bench", {"counts", "repeats"});
            read_key(b, "counts", cfg.bench.counts);
            read_key(b, "repeats", cfg.bench.repeats);
        }
        cfg.validate();
        return cfg;
    } catch (const json::exception& err) {
        throw ConfigError("config field failure: " + std::string(err.what()));
    }
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return from_json(text);
}

void run_generate(const PipelineConfig& cfg) {
    cfg.validate();
    topology::GeneratorConfig gen = cfg.generator;
    gen.seed = stage_seed(cfg, "generate");
    const auto corpus = topology::generate_corpus(gen, cfg.snapshots);

    const fs::path final_path = fs::path(cfg.out_dir) / "snapshots.jsonl";
    fs::create_directories(final_path.parent_path());
    fs::path tmp = final_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        for (const auto& snapshot : corpus) out << topology::snapshot_to_json(snapshot) << '\n';
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, final_path);

    record_stage(cfg, "generate", {"snapshots.jsonl"},
                 {{"snapshots", cfg.snapshots}, {"seed", gen.seed}});
    std::cout << "[generate] wrote " << cfg.snapshots << " snapshots to " << final_path.string()
              << "\n";
}

void run_dataset(const PipelineConfig& cfg) {
    cfg.validate();
    const auto corpus = load_corpus(cfg);
    const auto built = dataset::build_raw_dataset(corpus, cfg.workers);
    if (built.records.empty())
        throw DegenerateDataset("no feasible migration subsets in the corpus");

    const auto& first = corpus.front();
    const auto ds = dataset::split_and_normalize(built.records, first.n_instances(),
                                                 first.n_servers(), first.n_resources(),
                                                 cfg.split_ratio, stage_seed(cfg, "split"));

    const fs::path out_dir(cfg.out_dir);
    {
        fs::path tmp = out_dir / "records.jsonl.tmp";
        dataset::write_records_jsonl(tmp.string(), built.records);
        fs::rename(tmp, out_dir / "records.jsonl");
    }
    write_text_atomic(out_dir / "profile.json", dataset::profile_to_json(built.profile) + "\n");
    dataset::write_encoded_dataset((out_dir / "dataset").string(), ds);

    record_stage(cfg, "dataset", kDatasetFiles,
                 {{"records", built.records.size()},
                  {"attempts", built.profile.total_attempts},
                  {"feasible", built.profile.total_feasible},
                  {"errors", built.profile.errors},
                  {"train_rows", ds.train_indices.size()},
                  {"test_rows", ds.test_indices.size()},
                  {"encoded_width", ds.schema.encoded_width()}});
    std::cout << "[dataset] " << built.profile.total_feasible << "/"
              << built.profile.total_attempts << " feasible subsets, "
              << ds.train_indices.size() << " train / " << ds.test_indices.size()
              << " test rows, " << ds.schema.encoded_width() << " features\n";
}

void run_tune(const PipelineConfig& cfg) {
    cfg.validate();
    std::vector<dataset::LabeledRecord> records;
    const auto ds = load_dataset(cfg, records);

    std::vector<int> rows = ds.train_indices;
    if (static_cast<int>(rows.size()) > cfg.tune.max_rows) {
        Rng rng(stage_seed(cfg, "tune.rows"));
        rng.shuffle(rows);
        rows.resize(static_cast<std::size_t>(cfg.tune.max_rows));
        std::sort(rows.begin(), rows.end());
    }

    pso::ObjectiveConfig objective;
    objective.model = cfg.model;
    objective.model.input_dim = static_cast<int>(ds.features.cols());
    objective.model.output_dim = static_cast<int>(ds.labels.cols());
    objective.train = cfg.train;
    objective.train.epochs = cfg.tune.epochs;
    objective.train.seed = stage_seed(cfg, "tune.train");
    objective.folds = cfg.tune.folds;

    pso::SwarmConfig swarm;
    swarm.particles = cfg.tune.particles;
    swarm.iterations = cfg.tune.iterations;
    swarm.lower = cfg.tune.lower;
    swarm.upper = cfg.tune.upper;
    swarm.seed = stage_seed(cfg, "tune.swarm");

    int done = 0;
    const auto result = pso::minimize(
        [&](double log10_lr) {
            const double value = pso::cv_objective(log10_lr, ds.features, ds.labels, rows, objective);
            ++done;
            std::cout << "[tune] eval " << done << " log10_lr " << log10_lr << " loss " << value
                      << "\n";
            return value;
        },
        swarm);

    const fs::path out_dir(cfg.out_dir);
    write_text_atomic(out_dir / "tune" / "trace.csv", pso::trace_csv(result));
    json summary;
    summary["best_log10_lr"] = result.best_position;
    summary["best_learning_rate"] = result.best_h();
    summary["best_value"] = result.best_value;
    summary["evaluations"] = result.evaluations;
    summary["rows_used"] = rows.size();
    write_text_atomic(out_dir / "tune" / "summary.json", summary.dump() + "\n");

    record_stage(cfg, "tune", {"tune/trace.csv", "tune/summary.json"},
                 {{"best_learning_rate", result.best_h()},
                  {"evaluations", result.evaluations}});
    std::cout << "[tune] best learning rate " << result.best_h() << " (cv loss "
              << result.best_value << ", " << result.evaluations << " evaluations)\n";
}

void run_train(const PipelineConfig& cfg) {
    cfg.validate();
    std::vector<dataset::LabeledRecord> records;
    const auto ds = load_dataset(cfg, records);
    const double learning_rate = resolve_learning_rate(cfg);

    mlp::ModelSpec spec = cfg.model;
    spec.input_dim = static_cast<int>(ds.features.cols());
    spec.output_dim = static_cast<int>(ds.labels.cols());
    mlp::MlpModel<float> model(spec, stage_seed(cfg, "train.init"));

    mlp::TrainConfig train = cfg.train;
    train.adam.learning_rate = learning_rate;
    train.seed = stage_seed(cfg, "train.shuffle");

    const auto t0 = std::chrono::steady_clock::now();
    const auto history = model.train(
        ds.features, ds.labels, ds.train_indices, train, ds.test_indices,
        [&](const mlp::EpochStats& stats) {
            std::cout << "[train] epoch " << stats.epoch << "/" << train.epochs << " loss "
                      << stats.loss << " acc " << stats.accuracy << " val_loss " << stats.val_loss
                      << " val_acc " << stats.val_accuracy << " (" << stats.seconds << "s)\n";
        });
    const double duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double final_loss = history.epochs.empty() ? 0.0 : history.epochs.back().loss;

    const fs::path out_dir(cfg.out_dir);
    {
        fs::path tmp = out_dir / "model.bin.tmp";
        model.save(tmp.string());
        fs::rename(tmp, out_dir / "model.bin");
    }
    write_text_atomic(out_dir / "train" / "loss_curve.csv", eval::loss_curve_csv(history));
    json summary;
    summary["epochs"] = train.epochs;
    summary["learning_rate"] = learning_rate;
    summary["seed"] = train.seed;
    summary["final_loss"] = final_loss;
    summary["final_accuracy"] = history.epochs.empty() ? 0.0 : history.epochs.back().accuracy;
    summary["final_val_loss"] = history.epochs.empty() ? 0.0 : history.epochs.back().val_loss;
    summary["final_val_accuracy"] =
        history.epochs.empty() ? 0.0 : history.epochs.back().val_accuracy;
    summary["trainable_parameters"] = model.parameter_count();
    summary["non_trainable_parameters"] = model.non_trainable_count();
    summary["train_rows"] = ds.train_indices.size();
    summary["duration_s"] = duration;
    write_text_atomic(out_dir / "train" / "summary.json", summary.dump() + "\n");

    record_stage(cfg, "train", {"model.bin", "train/loss_curve.csv", "train/summary.json"},
                 {{"learning_rate", learning_rate},
                  {"final_loss", final_loss},
                  {"duration_s", duration}});
    std::cout << "[train] " << train.epochs << " epochs in " << duration << "s, final loss "
              << final_loss << "\n";
}

void run_eval(const PipelineConfig& cfg) {
    cfg.validate();
    const auto corpus = load_corpus(cfg);
    std::vector<dataset::LabeledRecord> records;
    const auto ds = load_dataset(cfg, records);
    const auto model = load_model(cfg);

    const auto accuracy = eval::accuracy_report(model, ds);
    const Eigen::MatrixXf probs = eval::predict_probs(model, ds.features);
    const auto diffs = eval::delay_difference_report(corpus, ds, probs, ds.test_indices);
    const auto pairs = eval::dependent_pair_rows(corpus, ds, probs, ds.test_indices);
    const auto profile =
        dataset::profile_from_json(read_text(fs::path(cfg.out_dir) / "profile.json"));
    const auto runtime = eval::runtime_benchmark(corpus, model, ds.schema, cfg.bench.counts,
                                                 cfg.bench.repeats, stage_seed(cfg, "bench"));

    const fs::path out_dir(cfg.out_dir);
    write_text_atomic(out_dir / "eval" / "accuracy_by_migrated.csv",
                      eval::accuracy_csv(accuracy.by_migrated));
    write_text_atomic(out_dir / "eval" / "delay_histogram.csv", eval::delay_histogram_csv(diffs));
    write_text_atomic(out_dir / "eval" / "dependent_pairs.csv", eval::dependent_pairs_csv(pairs));
    write_text_atomic(out_dir / "eval" / "feasibility.csv", eval::feasibility_csv(profile));
    write_text_atomic(out_dir / "eval" / "runtime.csv", eval::runtime_csv(runtime));

    json summary;
    summary["test_rows"] = ds.test_indices.size();
    summary["binary_accuracy_train"] = accuracy.binary_train;
    summary["binary_accuracy_test"] = accuracy.binary_test;
    summary["baseline_binary_accuracy"] = accuracy.baseline_binary;
    summary["categorical_accuracy"] = accuracy.categorical;
    summary["complete_accuracy"] = accuracy.complete;
    summary["exact_match_rate"] =
        diffs.rows.empty() ? 0.0
                           : static_cast<double>(diffs.exact_matches) /
                                 static_cast<double>(diffs.rows.size());
    summary["feasible_prediction_rate"] = diffs.feasible_rate;
    summary["delay_samples"] = diffs.samples.size();
    summary["mean_diff_ms"] = diffs.mean_diff_ms;
    summary["std_diff_ms"] = diffs.std_diff_ms;
    summary["mean_abs_diff_ms"] = diffs.mean_abs_diff_ms;
    summary["mean_optimal_ms"] = diffs.mean_optimal_ms;
    summary["dependent_pair_rows"] = pairs.size();
    summary["machine"] = runtime.machine;
    write_text_atomic(out_dir / "eval" / "summary.json", summary.dump() + "\n");

    record_stage(cfg, "eval",
                 {"eval/accuracy_by_migrated.csv", "eval/delay_histogram.csv",
                  "eval/dependent_pairs.csv", "eval/feasibility.csv", "eval/runtime.csv",
                  "eval/summary.json"},
                 {{"binary_accuracy_test", accuracy.binary_test},
                  {"mean_diff_ms", diffs.mean_diff_ms}});
    std::cout << "[eval] test binary accuracy " << accuracy.binary_test << " (baseline "
              << accuracy.baseline_binary << "), mean delay diff " << diffs.mean_diff_ms
              << " ms over " << diffs.rows.size() << " test records\n";
}

void run_bench(const PipelineConfig& cfg) {
    cfg.validate();
    const auto corpus = load_corpus(cfg);
    require_fresh(cfg, "dataset", {"dataset/schema.json"});
    const auto schema = dataset::FeatureSchema::from_json(
        read_text(fs::path(cfg.out_dir) / "dataset" / "schema.json"));
    const auto model = load_model(cfg);

    const auto report = eval::runtime_benchmark(corpus, model, schema, cfg.bench.counts,
                                                cfg.bench.repeats, stage_seed(cfg, "bench"));

    const fs::path out_dir(cfg.out_dir);
    write_text_atomic(out_dir / "bench" / "runtime.csv", eval::runtime_csv(report));
    json summary;
    summary["machine"] = report.machine;
    json rows = json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"requests", row.requests},
                        {"solver_seconds", row.solver_seconds},
                        {"surrogate_seconds", row.surrogate_seconds},
                        {"speedup", row.surrogate_seconds > 0.0
                                        ? row.solver_seconds / row.surrogate_seconds
                                        : 0.0}});
    summary["rows"] = std::move(rows);
    write_text_atomic(out_dir / "bench" / "summary.json", summary.dump() + "\n");

    record_stage(cfg, "bench", {"bench/runtime.csv", "bench/summary.json"},
                 {{"machine", report.machine}});
    std::cout << "[bench] " << report.rows.size() << " request counts on " << report.machine
              << "\n";
}

void run_all(const PipelineConfig& cfg) {
    run_generate(cfg);
    run_dataset(cfg);
    if (cfg.tune.enabled) run_tune(cfg);
    run_train(cfg);
    run_eval(cfg);
    run_bench(cfg);
}

void run_stage(const std::string& stage, const PipelineConfig& cfg) {
    if (stage == "generate") return run_generate(cfg);
    if (stage == "dataset") return run_dataset(cfg);
    if (stage == "tune") return run_tune(cfg);
    if (stage == "train") return run_train(cfg);
    if (stage == "eval") return run_eval(cfg);
    if (stage == "bench") return run_bench(cfg);
    if (stage == "all") return run_all(cfg);
    throw ConfigError("unknown stage: " + stage);
}

} // namespace vnfmig::pipeline
