#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "vnfmig/dataset.hpp"
#include "vnfmig/errors.hpp"
#include "vnfmig/eval.hpp"
#include "vnfmig/mlp.hpp"
#include "vnfmig/topology.hpp"

using namespace vnfmig;
using topology::GeneratorConfig;

namespace {

struct Fixture {
    std::vector<topology::NetworkSnapshot> corpus;
    dataset::BuildResult built;
    dataset::EncodedDataset ds;

    explicit Fixture(int snapshots = 2) {
        GeneratorConfig cfg;
        corpus = topology::generate_corpus(cfg, snapshots);
        built = dataset::build_raw_dataset(corpus);
        ds = dataset::split_and_normalize(built.records, 6, 15, 2, 0.8, 17);
    }
};

int count_lines(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    return rows;
}

} // namespace

TEST_CASE("binary accuracy against one hot labels") {
    Eigen::VectorXi a(6);
    a << 3, 7, 0, 14, 9, 2;
    Eigen::VectorXi b(6);
    b << 1, 1, 5, 5, 10, 12;
    Eigen::MatrixXf labels(2, 90);
    labels.row(0) = dataset::label_row(a, 15);
    labels.row(1) = dataset::label_row(b, 15);

    const Eigen::MatrixXf zeros = Eigen::MatrixXf::Zero(2, 90);
    const Eigen::MatrixXf ones = Eigen::MatrixXf::Ones(2, 90);
    CHECK(eval::binary_accuracy(zeros, labels) == doctest::Approx(84.0 / 90.0));
    CHECK(eval::binary_accuracy(ones, labels) == doctest::Approx(6.0 / 90.0));
    CHECK(eval::binary_accuracy(labels, labels) == doctest::Approx(1.0));
}

TEST_CASE("categorical and complete accuracy bucket by migration count") {
    Eigen::VectorXi pa(2);
    pa << 0, 1;
    Eigen::VectorXi pb(2);
    pb << 1, 2;
    Eigen::VectorXi pc(2);
    pc << 2, 0;
    const std::vector<Eigen::VectorXi> placements = {pa, pb, pc};
    const std::vector<int> migrated = {1, 1, 2};

    Eigen::MatrixXf probs = Eigen::MatrixXf::Zero(3, 6);
    probs.row(0) = dataset::label_row(pa, 3);
    Eigen::VectorXi half_right(2);
    half_right << 1, 0;
    probs.row(1) = dataset::label_row(half_right, 3);
    Eigen::VectorXi wrong(2);
    wrong << 0, 1;
    probs.row(2) = dataset::label_row(wrong, 3);

    const std::vector<int> rows = {0, 1, 2};
    const auto buckets = eval::accuracy_by_migrated(probs, placements, migrated, rows, 2, 3);
    REQUIRE(buckets.size() == 2);
    CHECK(buckets[0].migrated == 1);
    CHECK(buckets[0].records == 2);
    CHECK(buckets[0].categorical == doctest::Approx(0.75));
    CHECK(buckets[0].complete == doctest::Approx(0.5));
    CHECK(buckets[1].migrated == 2);
    CHECK(buckets[1].records == 1);
    CHECK(buckets[1].categorical == doctest::Approx(0.0));
    CHECK(buckets[1].complete == doctest::Approx(0.0));
    for (const auto& bucket : buckets) CHECK(bucket.complete <= bucket.categorical + 1e-12);

    const std::string csv = eval::accuracy_csv(buckets);
    CHECK(csv.rfind("migrated,records,categorical_accuracy,complete_accuracy\n", 0) == 0);
    CHECK(count_lines(csv) == 3);
}

TEST_CASE("computational paths take one instance per chain position") {
    const auto snap = topology::generate_snapshot(GeneratorConfig{}, 0);
    const auto paths = eval::computational_paths(snap);
    REQUIRE(paths.size() == 4);
    CHECK(paths[0] == std::vector<int>{0, 2, 4, 5});
    CHECK(paths[1] == std::vector<int>{0, 3, 4, 5});
    CHECK(paths[2] == std::vector<int>{1, 2, 4, 5});
    CHECK(paths[3] == std::vector<int>{1, 3, 4, 5});
}

TEST_CASE("path delay sums consecutive hops") {
    auto snap = testing::make_snapshot(4, {1, 1});
    Eigen::VectorXi placement(2);

    placement << 2, 1;
    auto delays = eval::path_delays(snap, placement);
    REQUIRE(delays.size() == 1);
    CHECK(delays(0) == doctest::Approx(1.0));

    placement << 3, 3;
    delays = eval::path_delays(snap, placement);
    CHECK(delays(0) == 0.0);

    SUBCASE("full shape agrees with a hand computed hop sum") {
        const auto full = topology::generate_snapshot(GeneratorConfig{}, 0);
        const auto paths = eval::computational_paths(full);
        const auto d = eval::path_delays(full, full.initial_placement);
        REQUIRE(d.size() == 4);
        for (std::size_t k = 0; k < paths.size(); ++k) {
            double expected = 0.0;
            for (std::size_t hop = 1; hop < paths[k].size(); ++hop)
                expected += full.inter_server_delay(
                    full.initial_placement(paths[k][hop - 1]),
                    full.initial_placement(paths[k][hop]));
            CHECK(d(static_cast<Eigen::Index>(k)) == doctest::Approx(expected));
        }
        CHECK(eval::mean_path_delay(full, full.initial_placement) == doctest::Approx(d.mean()));
    }
}

TEST_CASE("delay differences vanish for exact predictions") {
    Fixture fx;
    const auto report = eval::delay_difference_report(fx.corpus, fx.ds, fx.ds.labels,
                                                      fx.ds.test_indices);
    const auto n = static_cast<std::int64_t>(fx.ds.test_indices.size());
    CHECK(static_cast<std::int64_t>(report.rows.size()) == n);
    CHECK(static_cast<std::int64_t>(report.samples.size()) == 4 * n);
    CHECK(report.exact_matches == n);
    CHECK(report.feasible_predictions == n);
    CHECK(report.feasible_rate == doctest::Approx(1.0));
    CHECK(report.mean_diff_ms == doctest::Approx(0.0));
    CHECK(report.mean_abs_diff_ms == doctest::Approx(0.0));
    CHECK(report.std_diff_ms == doctest::Approx(0.0));
    CHECK(report.mean_optimal_ms > 0.0);
    std::int64_t total = 0;
    for (const auto& bin : report.histogram) total += bin.count;
    CHECK(total == static_cast<std::int64_t>(report.samples.size()));
    for (const auto& row : report.rows) {
        CHECK(row.exact_match);
        for (double d : row.diff_ms) CHECK(d == 0.0);
    }
}

TEST_CASE("delay differences for a complemented predictor") {
    Fixture fx;
    const Eigen::MatrixXf flipped = (1.0f - fx.ds.labels.array()).matrix();
    const auto report =
        eval::delay_difference_report(fx.corpus, fx.ds, flipped, fx.ds.test_indices);
    const auto n = static_cast<std::int64_t>(fx.ds.test_indices.size());
    CHECK(report.exact_matches == 0);
    CHECK(static_cast<std::int64_t>(report.samples.size()) == 4 * n);
    std::int64_t total = 0;
    for (const auto& bin : report.histogram) total += bin.count;
    CHECK(total == 4 * n);
    CHECK(report.feasible_rate >= 0.0);
    CHECK(report.feasible_rate <= 1.0);
    CHECK(report.mean_abs_diff_ms >= std::abs(report.mean_diff_ms));
    for (const auto& row : report.rows) {
        CHECK(row.optimal_ms.size() == 4);
        CHECK(row.predicted_ms.size() == 4);
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(row.diff_ms[k] ==
                  doctest::Approx(row.optimal_ms[k] - row.predicted_ms[k]));
    }

    const std::string csv = eval::delay_histogram_csv(report);
    CHECK(csv.rfind("bin_lo_ms,bin_hi_ms,count\n", 0) == 0);
    CHECK(count_lines(csv) == static_cast<int>(report.histogram.size()) + 1);
}

TEST_CASE("dependent pairs come only from inexact records") {
    Fixture fx;
    CHECK(eval::dependent_pair_rows(fx.corpus, fx.ds, fx.ds.labels, fx.ds.test_indices).empty());

    const Eigen::MatrixXf flipped = (1.0f - fx.ds.labels.array()).matrix();
    const auto pairs = eval::dependent_pair_rows(fx.corpus, fx.ds, flipped, fx.ds.test_indices);
    REQUIRE(!pairs.empty());
    for (const auto& pair : pairs) {
        REQUIRE(pair.snapshot_id >= 0);
        REQUIRE(pair.snapshot_id < static_cast<std::int64_t>(fx.corpus.size()));
        const auto& snap = fx.corpus[static_cast<std::size_t>(pair.snapshot_id)];
        CHECK(pair.instance_a < pair.instance_b);
        const auto& deps = snap.instances[static_cast<std::size_t>(pair.instance_a)].dependents;
        CHECK(std::find(deps.begin(), deps.end(), pair.instance_b) != deps.end());
        CHECK(pair.predicted_delay_ms >= 0.0);
        CHECK(pair.optimal_delay_ms >= 0.0);
    }

    const std::string csv = eval::dependent_pairs_csv(pairs);
    CHECK(csv.rfind("snapshot_id,migration_mask,instance_a,instance_b,", 0) == 0);
    CHECK(count_lines(csv) == static_cast<int>(pairs.size()) + 1);
}

TEST_CASE("the accuracy report compares against the all zero baseline") {
    Fixture fx;
    mlp::ModelSpec spec;
    spec.input_dim = fx.ds.schema.encoded_width();
    spec.output_dim = 90;
    spec.hidden = {32};
    mlp::MlpModel<float> model(spec, 201);
    mlp::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.seed = 202;
    model.train(fx.ds.features, fx.ds.labels, fx.ds.train_indices, cfg);

    const auto report = eval::accuracy_report(model, fx.ds);
    const auto test_labels = mlp::gather_rows<float>(fx.ds.labels, fx.ds.test_indices);
    const Eigen::MatrixXf zeros =
        Eigen::MatrixXf::Zero(test_labels.rows(), test_labels.cols());
    CHECK(report.baseline_binary == doctest::Approx(eval::binary_accuracy(zeros, test_labels)));
    CHECK(report.baseline_binary == doctest::Approx(84.0 / 90.0));
    CHECK(report.binary_train >= 0.0);
    CHECK(report.binary_train <= 1.0);
    CHECK(report.binary_test >= 0.0);
    CHECK(report.binary_test <= 1.0);
    CHECK(report.complete <= report.categorical + 1e-12);
    REQUIRE(!report.by_migrated.empty());
    std::int64_t records = 0;
    for (const auto& bucket : report.by_migrated) records += bucket.records;
    CHECK(records == static_cast<std::int64_t>(fx.ds.test_indices.size()));
}

TEST_CASE("the runtime benchmark reports increasing request batches") {
    Fixture fx;
    mlp::ModelSpec spec;
    spec.input_dim = fx.ds.schema.encoded_width();
    spec.output_dim = 90;
    spec.hidden = {16};
    mlp::MlpModel<float> model(spec, 211);

    const auto report =
        eval::runtime_benchmark(fx.corpus, model, fx.ds.schema, {1, 2}, 1, 212);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].requests == 1);
    CHECK(report.rows[1].requests == 2);
    for (const auto& row : report.rows) {
        CHECK(row.solver_seconds > 0.0);
        CHECK(row.surrogate_seconds > 0.0);
    }
    CHECK(!report.machine.empty());

    const std::string csv = eval::runtime_csv(report);
    CHECK(csv.rfind("requests,solver_seconds,surrogate_seconds,speedup\n", 0) == 0);
    CHECK(count_lines(csv) == 3);

    CHECK_THROWS_AS(eval::runtime_benchmark(fx.corpus, model, fx.ds.schema, {2, 2}, 1, 212),
                    ConfigError);
    CHECK_THROWS_AS(eval::runtime_benchmark(fx.corpus, model, fx.ds.schema, {}, 1, 212),
                    ConfigError);
}

TEST_CASE("profile and loss curves render as csv") {
    Fixture fx;
    const std::string csv = eval::feasibility_csv(fx.built.profile);
    CHECK(csv.rfind("migrated,attempts,feasible,success_rate\n", 0) == 0);
    CHECK(count_lines(csv) == 7);

    mlp::TrainingHistory history;
    history.epochs.push_back({1, 0.5, 0.9, 0.0, 0.0, 0.01});
    history.epochs.push_back({2, 0.4, 0.92, 0.0, 0.0, 0.01});
    const std::string plain = eval::loss_curve_csv(history);
    CHECK(plain.rfind("epoch,train_loss,train_accuracy,seconds\n", 0) == 0);
    CHECK(count_lines(plain) == 3);

    history.has_validation = true;
    const std::string with_val = eval::loss_curve_csv(history);
    CHECK(with_val.rfind("epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds\n", 0) ==
          0);

    CHECK(!eval::machine_descriptor().empty());
}
