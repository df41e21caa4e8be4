// Acceptance gate: twelve end-to-end criteria over the default configuration.
// Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vnfmig/dataset.hpp"
#include "vnfmig/errors.hpp"
#include "vnfmig/eval.hpp"
#include "vnfmig/hashing.hpp"
#include "vnfmig/mlp.hpp"
#include "vnfmig/optimizer.hpp"
#include "vnfmig/pipeline.hpp"
#include "vnfmig/pso.hpp"
#include "vnfmig/rng.hpp"
#include "vnfmig/topology.hpp"

namespace fs = std::filesystem;
using namespace vnfmig;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " (" << detail
              << ")" << std::endl;
    if (!pass) ++g_failures;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json parse_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cannot open " + path.string());
    return json::parse(in);
}

// ---- criterion 1: exact solver versus exhaustive search ----

void criterion_solver_oracle() {
    const std::vector<std::vector<int>> chains = {{1, 1}, {2, 1}, {1, 1, 1}, {2, 2}, {2, 1, 1},
                                                  {1, 1, 1, 1}};
    Rng rng(501);
    const auto t0 = std::chrono::steady_clock::now();
    int solved = 0;
    int mismatches = 0;
    while (solved < 500) {
        topology::GeneratorConfig cfg;
        cfg.n_servers = 2 + static_cast<int>(rng.below(3));
        cfg.chain_type_counts = chains[static_cast<std::size_t>(rng.below(chains.size()))];
        cfg.n_instances = 0;
        for (int c : cfg.chain_type_counts) cfg.n_instances += c;
        cfg.capacity_range = {6, 12};
        cfg.seed = rng.next_u64();
        topology::NetworkSnapshot snap;
        try {
            snap = topology::generate_snapshot(cfg, 0);
        } catch (const GenerationError&) {
            continue;
        }
        const std::uint64_t all = (std::uint64_t{1} << cfg.n_instances) - 1;
        const std::uint64_t mask = 1 + rng.below(all);
        const auto fast = optimizer::solve(snap, mask);
        const auto oracle = optimizer::brute_force_oracle(snap, mask);
        if (fast.optimal != oracle.optimal) ++mismatches;
        else if (fast.optimal &&
                 (fast.solution.total_downtime_ms != oracle.solution.total_downtime_ms ||
                  fast.solution.placement != oracle.solution.placement))
            ++mismatches;
        ++solved;
    }
    const double elapsed = seconds_since(t0);
    report(1, mismatches == 0 && elapsed < 60.0,
           std::to_string(500 - mismatches) + "/500 oracle matches in " + fmt(elapsed, 3) + " s");
}

// ---- default-scale pipeline artifacts ----

struct Artifacts {
    pipeline::PipelineConfig config;
    std::vector<topology::NetworkSnapshot> corpus;
    std::vector<dataset::LabeledRecord> records;
    dataset::EncodedDataset ds;
    dataset::FeasibilityProfile profile;
    mlp::MlpModel<float> model{[] {
                                   mlp::ModelSpec spec;
                                   spec.input_dim = 1;
                                   spec.output_dim = 1;
                                   spec.hidden = {1};
                                   return spec;
                               }(),
                               0};
};

pipeline::PipelineConfig default_config(const fs::path& dir) {
    pipeline::PipelineConfig cfg;
    cfg.out_dir = dir.string();
    return cfg;
}

std::vector<topology::NetworkSnapshot> read_snapshots(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cannot open " + path.string());
    std::vector<topology::NetworkSnapshot> corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        corpus.push_back(topology::snapshot_from_json(line));
    }
    return corpus;
}

bool artifacts_loadable(const pipeline::PipelineConfig& cfg) {
    const fs::path dir(cfg.out_dir);
    for (const char* rel :
         {"snapshots.jsonl", "records.jsonl", "profile.json", "dataset/schema.json",
          "dataset/features.csv", "dataset/labels.csv", "dataset/splits.json", "model.bin",
          "eval/summary.json", "eval/accuracy_by_migrated.csv", "manifest.json"})
        if (!fs::exists(dir / rel)) return false;
    try {
        const json manifest = parse_file(dir / "manifest.json");
        const auto& stages = manifest.at("stages");
        for (const char* stage : {"generate", "dataset", "train", "eval"})
            if (!stages.contains(stage)) return false;
        const std::string recorded = stages.at("generate").at("config").get<std::string>();
        return recorded == content_hash(cfg.to_json());
    } catch (const std::exception&) {
        return false;
    }
}

Artifacts load_or_build(const fs::path& dir) {
    Artifacts art;
    art.config = default_config(dir);
    if (std::getenv("VNFMIG_ACCEPT_FRESH") != nullptr || !artifacts_loadable(art.config)) {
        std::cout << "building default-scale artifacts under " << dir << " ..." << std::endl;
        fs::remove_all(dir);
        fs::create_directories(dir);
        pipeline::run_generate(art.config);
        pipeline::run_dataset(art.config);
        pipeline::run_train(art.config);
        pipeline::run_eval(art.config);
    } else {
        std::cout << "reusing default-scale artifacts under " << dir << std::endl;
    }
    art.corpus = read_snapshots(dir / "snapshots.jsonl");
    art.records = dataset::read_records_jsonl((dir / "records.jsonl").string());
    art.ds = dataset::read_encoded_dataset((dir / "dataset").string(), art.records);
    std::ifstream profile_in(dir / "profile.json", std::ios::binary);
    const std::string profile_text{std::istreambuf_iterator<char>(profile_in),
                                   std::istreambuf_iterator<char>()};
    art.profile = dataset::profile_from_json(profile_text);
    art.model = mlp::MlpModel<float>::load((dir / "model.bin").string());
    return art;
}

// ---- criteria 2 and 3: dataset coverage and feasibility mix ----

void criterion_coverage(const Artifacts& art) {
    const auto subsets = dataset::enumerate_migration_sets(6);
    const std::int64_t expected =
        static_cast<std::int64_t>(art.config.snapshots) * static_cast<std::int64_t>(subsets.size());
    const std::vector<std::int64_t> per_size_expected = {6, 15, 20, 15, 6, 1};
    bool sizes_ok = art.profile.per_size.size() == 6;
    if (sizes_ok)
        for (std::size_t k = 0; k < 6; ++k)
            sizes_ok = sizes_ok && art.profile.per_size[k].attempts ==
                                       per_size_expected[k] * art.config.snapshots;
    const bool pass = subsets.size() == 63 && art.profile.total_attempts == expected &&
                      art.profile.errors == 0 && sizes_ok;
    report(2, pass,
           std::to_string(art.profile.total_attempts) + " solves over " +
               std::to_string(art.config.snapshots) + " snapshots x " +
               std::to_string(subsets.size()) + " subsets");
}

void criterion_feasibility_mix(const Artifacts& art) {
    const double rate = art.profile.success_rate();
    const double at3 = art.profile.success_rate_at(3);
    const double at6 = art.profile.success_rate_at(6);
    const bool pass = rate > 0.10 && rate < 0.90 && at6 >= at3;
    report(3, pass,
           "overall " + fmt(rate) + ", k=3 " + fmt(at3) + ", k=6 " + fmt(at6));
}

// ---- criterion 4: label integrity ----

void criterion_labels(const Artifacts& art) {
    std::int64_t bad = 0;
    for (int row = 0; row < art.ds.rows(); ++row) {
        const auto& record = art.records[static_cast<std::size_t>(row)];
        const auto& snap = art.corpus[static_cast<std::size_t>(record.snapshot_id)];
        bool ok = record.optimal_placement.size() == 6;
        for (int i = 0; ok && i < 6; ++i) {
            float block = 0.0f;
            for (int s = 0; s < 15; ++s) block += art.ds.labels(row, 15 * i + s);
            ok = block == 1.0f &&
                 art.ds.labels(row, 15 * i + record.optimal_placement(i)) == 1.0f;
        }
        ok = ok && optimizer::check_feasible(snap, record.optimal_placement,
                                             record.migration_mask)
                       .ok;
        if (!ok) ++bad;
    }
    report(4, bad == 0,
           std::to_string(art.ds.rows() - bad) + "/" + std::to_string(art.ds.rows()) +
               " labels one hot per instance and feasible");
}

// ---- criterion 5: gradient verification sweep ----

template <typename Scalar>
void randomize_tensors(mlp::MlpModel<Scalar>& model, std::uint64_t seed) {
    Rng rng(seed);
    for (int k = 0; k < model.tensor_count(); ++k) {
        auto view = model.tensor(k);
        const bool is_beta = model.tensor_name(k).find(".beta") != std::string::npos;
        for (Eigen::Index i = 0; i < view.size(); ++i) {
            if (is_beta) {
                const double sign = rng.unit() < 0.5 ? -1.0 : 1.0;
                view(i) = static_cast<Scalar>(sign * rng.uniform_real(0.2, 0.6));
            } else {
                view(i) = static_cast<Scalar>(rng.uniform_real(-0.8, 0.8));
            }
        }
    }
}

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(505);
    double worst = 0.0;
    int passed = 0;
    for (int trial = 0; trial < 20; ++trial) {
        mlp::ModelSpec spec;
        spec.input_dim = 3 + static_cast<int>(rng.below(5));
        spec.output_dim = 2 + static_cast<int>(rng.below(4));
        const int layers = 1 + static_cast<int>(rng.below(2));
        spec.hidden.clear();
        for (int l = 0; l < layers; ++l) spec.hidden.push_back(3 + static_cast<int>(rng.below(5)));
        spec.batch_norm = trial % 5 != 4;

        mlp::MlpModel<double> model(spec, 1000 + static_cast<std::uint64_t>(trial));
        randomize_tensors(model, 2000 + static_cast<std::uint64_t>(trial));
        const int batch = 1 + static_cast<int>(rng.below(16));
        Eigen::MatrixXd x(batch, spec.input_dim);
        Eigen::MatrixXd y(batch, spec.output_dim);
        for (int r = 0; r < batch; ++r) {
            for (int c = 0; c < spec.input_dim; ++c) x(r, c) = rng.uniform_real(-1.0, 1.0);
            for (int c = 0; c < spec.output_dim; ++c) y(r, c) = rng.unit() < 0.5 ? 0.0 : 1.0;
        }
        const auto check = mlp::gradient_check(model, x, y);
        worst = std::max(worst, check.max_rel_error);
        if (check.max_rel_error < 1e-4) ++passed;
    }
    const double elapsed = seconds_since(t0);
    report(5, passed == 20 && elapsed < 60.0,
           std::to_string(passed) + "/20 models, worst relative error " + fmt(worst, 3) +
               ", " + fmt(elapsed, 3) + " s");
}

// ---- criterion 6: batch norm statistics ----

void criterion_batch_norm(const Artifacts& art) {
    mlp::ModelSpec spec;
    spec.input_dim = art.ds.schema.encoded_width();
    spec.output_dim = 90;
    mlp::MlpModel<double> model(spec, 506);
    Rng rng(5006);
    double worst_mean = 0.0;
    double worst_var = 0.0;
    int batches = 0;
    for (int batch : {16, 32, 64}) {
        Eigen::MatrixXd x(batch, spec.input_dim);
        for (int r = 0; r < batch; ++r)
            for (int c = 0; c < spec.input_dim; ++c) x(r, c) = rng.uniform_real(-2.0, 2.0);
        const auto normalized = model.bn_normalized(x);
        for (const auto& layer : normalized) {
            for (Eigen::Index c = 0; c < layer.cols(); ++c) {
                const double mean = layer.col(c).mean();
                const double var = (layer.col(c).array() - mean).square().mean();
                worst_mean = std::max(worst_mean, std::abs(mean));
                worst_var = std::max(worst_var, std::abs(var - 1.0));
            }
        }
        ++batches;
    }
    const bool pass = batches == 3 && worst_mean < 1e-6 && worst_var <= 1e-3;
    report(6, pass,
           "random batches {16,32,64}: worst |mean| " + fmt(worst_mean, 3) +
               ", worst |var-1| " + fmt(worst_var, 3));
}

// ---- criteria 7 and 8: learned accuracy ----

void criterion_test_accuracy(const Artifacts& art, const json& eval_summary) {
    const double test = eval_summary.at("binary_accuracy_test").get<double>();
    const double baseline = eval_summary.at("baseline_binary_accuracy").get<double>();
    const bool pass = test >= 0.96 && test > baseline;
    report(7, pass,
           "test binary accuracy " + fmt(test) + " vs baseline " + fmt(baseline) + " after " +
               std::to_string(art.config.train.epochs) + " epochs at h=" +
               fmt(art.config.train.adam.learning_rate));
}

void criterion_accuracy_profile(const fs::path& dir) {
    std::ifstream in(dir / "eval" / "accuracy_by_migrated.csv");
    std::string line;
    std::getline(in, line);
    std::vector<double> categorical(7, -1.0);
    std::vector<double> complete(7, -1.0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        const int k = std::stoi(cell);
        std::getline(row, cell, ',');
        std::getline(row, cell, ',');
        if (k >= 1 && k <= 6) categorical[static_cast<std::size_t>(k)] = std::stod(cell);
        std::getline(row, cell, ',');
        if (k >= 1 && k <= 6) complete[static_cast<std::size_t>(k)] = std::stod(cell);
    }
    bool present = true;
    bool monotone = true;
    bool dominated = true;
    for (int k = 1; k <= 6; ++k) {
        if (categorical[static_cast<std::size_t>(k)] < 0.0) present = false;
    }
    if (present) {
        for (int k = 2; k <= 6; ++k)
            if (categorical[static_cast<std::size_t>(k)] >
                categorical[static_cast<std::size_t>(k - 1)] + 0.02)
                monotone = false;
        for (int k = 1; k <= 6; ++k)
            if (complete[static_cast<std::size_t>(k)] >
                categorical[static_cast<std::size_t>(k)] + 1e-9)
                dominated = false;
    }
    std::string cats;
    for (int k = 1; k <= 6; ++k) {
        if (k > 1) cats += " ";
        cats += fmt(categorical[static_cast<std::size_t>(k)], 3);
    }
    report(8, present && monotone && dominated, "categorical by k: " + cats);
}

// ---- criterion 9: delay differences ----

void criterion_delay_diff(const Artifacts& art) {
    const auto probs = eval::predict_probs(art.model, art.ds.features);
    const auto diffs =
        eval::delay_difference_report(art.corpus, art.ds, probs, art.ds.test_indices);
    bool exact_zero = true;
    for (const auto& row : diffs.rows) {
        if (!row.exact_match) continue;
        for (double d : row.diff_ms)
            if (d != 0.0) exact_zero = false;
    }
    const double bound = 0.10 * diffs.mean_optimal_ms;
    const bool pass = exact_zero && std::abs(diffs.mean_diff_ms) <= bound;
    report(9, pass,
           "mean diff " + fmt(diffs.mean_diff_ms, 3) + " ms, bound " + fmt(bound, 3) +
               " ms, exact matches " + std::to_string(diffs.exact_matches) + "/" +
               std::to_string(diffs.rows.size()));
}

// ---- criterion 10: swarm on the analytic objective ----

void criterion_swarm() {
    const double target = std::log10(0.002318);
    const auto objective = [&](double p) { return (p - target) * (p - target); };
    pso::SwarmConfig cfg;
    const auto result = pso::minimize(objective, cfg);
    const double err = std::abs(result.best_position - target);

    bool monotone = true;
    for (std::uint64_t seed : {std::uint64_t{7}, std::uint64_t{8}, std::uint64_t{9}}) {
        pso::SwarmConfig sweep;
        sweep.seed = seed;
        const auto run = pso::minimize(objective, sweep);
        for (std::size_t k = 1; k < run.trace.size(); ++k)
            if (run.trace[k].best_value > run.trace[k - 1].best_value) monotone = false;
    }
    report(10, err < 1e-3 && monotone,
           "|log10 error| " + fmt(err, 3) + " after " + std::to_string(cfg.iterations) +
               " iterations, incumbent monotone over 3 seeds");
}

// ---- criterion 11: serving speed ----

void criterion_runtime(const Artifacts& art) {
    const auto report_rows = eval::runtime_benchmark(art.corpus, art.model, art.ds.schema,
                                                     {10, 100}, 3, 507);
    const auto& small = report_rows.rows[0];
    const auto& large = report_rows.rows[1];
    const double speedup =
        large.surrogate_seconds > 0.0 ? large.solver_seconds / large.surrogate_seconds : 0.0;
    const double growth = small.solver_seconds > 0.0
                              ? large.solver_seconds / small.solver_seconds
                              : 0.0;
    const bool speed_ok = speedup >= 50.0;
    const bool growth_ok = growth <= 30.0 && growth >= 10.0 / 3.0;
    report(11, speed_ok && growth_ok,
           "surrogate speedup at n=100: " + fmt(speedup, 3) + "x (need >= 50), solver growth 10->100: " +
               fmt(growth, 3) + "x (proportional 10x within 3x)");
}

// ---- criterion 12: reproducibility ----

void criterion_reproducible(const fs::path& base) {
    const fs::path dir_a = base / "repro_a";
    const fs::path dir_b = base / "repro_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    bool pass = true;
    std::string detail;
    try {
        for (const fs::path& dir : {dir_a, dir_b}) {
            pipeline::PipelineConfig cfg = default_config(dir);
            cfg.snapshots = 50;
            cfg.train.epochs = 2;
            pipeline::run_generate(cfg);
            pipeline::run_dataset(cfg);
            pipeline::run_train(cfg);
        }
        int matched = 0;
        const std::vector<std::string> files = {
            "snapshots.jsonl",      "records.jsonl",      "dataset/schema.json",
            "dataset/features.csv", "dataset/labels.csv", "dataset/splits.json",
            "model.bin"};
        for (const auto& rel : files) {
            if (file_hash((dir_a / rel).string()) == file_hash((dir_b / rel).string()))
                ++matched;
            else
                pass = false;
        }
        detail = std::to_string(matched) + "/" + std::to_string(files.size()) +
                 " artifacts bit identical across reruns";
    } catch (const std::exception& err) {
        pass = false;
        detail = std::string("rerun failed: ") + err.what();
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    report(12, pass, detail);
}

} // namespace

int main(int argc, char** argv) {
    const fs::path base = argc > 1 ? fs::path(argv[1])
                                   : fs::temp_directory_path() / "vnfmig_acceptance";
    fs::create_directories(base);
    try {
        criterion_solver_oracle();

        const fs::path run_dir = base / "default_run";
        const Artifacts art = load_or_build(run_dir);
        const json eval_summary = parse_file(run_dir / "eval" / "summary.json");

        criterion_coverage(art);
        criterion_feasibility_mix(art);
        criterion_labels(art);
        criterion_gradients();
        criterion_batch_norm(art);
        criterion_test_accuracy(art, eval_summary);
        criterion_accuracy_profile(run_dir);
        criterion_delay_diff(art);
        criterion_swarm();
        criterion_runtime(art);
        criterion_reproducible(base);
    } catch (const std::exception& err) {
        std::cerr << "acceptance run aborted: " << err.what() << std::endl;
        return 2;
    }
    std::cout << (g_failures == 0 ? "all criteria passed"
                                  : std::to_string(g_failures) + " criteria failed")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
