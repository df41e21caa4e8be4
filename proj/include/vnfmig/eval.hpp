#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vnfmig/dataset.hpp"
#include "vnfmig/mlp.hpp"
#include "vnfmig/topology.hpp"

namespace vnfmig::eval {

using topology::NetworkSnapshot;

/// Chunked inference over a feature matrix to bound peak activation memory.
Eigen::MatrixXf predict_probs(const mlp::MlpModel<float>& model, const Eigen::MatrixXf& features,
                              int chunk = 4096);

/// Fraction of output units whose thresholded bit matches the label.
double binary_accuracy(const Eigen::MatrixXf& probs, const Eigen::MatrixXf& labels,
                       float threshold = 0.5f);

struct BucketAccuracy {
    int migrated = 0;
    std::int64_t records = 0;
    double categorical = 0.0; // per-instance argmax matches
    double complete = 0.0;    // whole placement matches
};

std::vector<BucketAccuracy> accuracy_by_migrated(const Eigen::MatrixXf& probs,
                                                 const std::vector<Eigen::VectorXi>& placements,
                                                 const std::vector<int>& migrated_counts,
                                                 const std::vector<int>& rows, int n_instances,
                                                 int n_servers);

struct AccuracyReport {
    double binary_train = 0.0;
    double binary_test = 0.0;
    double baseline_binary = 0.0; // all-zero predictor on the test labels
    double categorical = 0.0;     // test split, over (record, instance) pairs
    double complete = 0.0;        // test split, whole placements
    std::vector<BucketAccuracy> by_migrated; // test split
};

AccuracyReport accuracy_report(const mlp::MlpModel<float>& model,
                               const dataset::EncodedDataset& ds);

std::string accuracy_csv(const std::vector<BucketAccuracy>& buckets);

/// Service chains as instance index sequences, one instance per type in
/// chain order, enumerated lexicographically.
std::vector<std::vector<int>> computational_paths(const NetworkSnapshot& snapshot);

/// Sum of inter-server delays along consecutive path hops for a placement.
Eigen::VectorXd path_delays(const NetworkSnapshot& snapshot, const Eigen::VectorXi& placement);

double mean_path_delay(const NetworkSnapshot& snapshot, const Eigen::VectorXi& placement);

struct DelayDiffRow {
    std::int64_t snapshot_id = 0;
    std::uint64_t migration_mask = 0;
    int migrated = 0;
    std::vector<double> optimal_ms;   // per path
    std::vector<double> predicted_ms; // per path
    std::vector<double> diff_ms;      // optimal minus predicted
    bool predicted_feasible = false;
    bool exact_match = false;
};

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t count = 0;
};

struct DelayReport {
    std::vector<DelayDiffRow> rows;
    std::vector<double> samples; // one per record per path
    double mean_diff_ms = 0.0;
    double std_diff_ms = 0.0;
    double mean_abs_diff_ms = 0.0;
    double mean_optimal_ms = 0.0;
    std::vector<HistogramBin> histogram;
    std::int64_t exact_matches = 0;
    std::int64_t feasible_predictions = 0;
    double feasible_rate = 0.0;
};

DelayReport delay_difference_report(const std::vector<NetworkSnapshot>& snapshots,
                                    const dataset::EncodedDataset& ds,
                                    const Eigen::MatrixXf& probs, const std::vector<int>& rows,
                                    int histogram_bins = 41);

std::string delay_histogram_csv(const DelayReport& report);

/// Dependency edges of records whose predicted placement is not exact.
struct DependentPairRow {
    std::int64_t snapshot_id = 0;
    std::uint64_t migration_mask = 0;
    int instance_a = 0;
    int instance_b = 0;
    double predicted_delay_ms = 0.0;
    double optimal_delay_ms = 0.0;
};

std::vector<DependentPairRow> dependent_pair_rows(const std::vector<NetworkSnapshot>& snapshots,
                                                  const dataset::EncodedDataset& ds,
                                                  const Eigen::MatrixXf& probs,
                                                  const std::vector<int>& rows);

std::string dependent_pairs_csv(const std::vector<DependentPairRow>& rows);

struct RuntimeRow {
    int requests = 0;
    double solver_seconds = 0.0;
    double surrogate_seconds = 0.0;
};

struct RuntimeReport {
    std::vector<RuntimeRow> rows;
    std::string machine;
};

/// Median-of-repeats wall time for serving uniformly drawn migration
/// requests with the exact solver versus featurize + predict + decode.
RuntimeReport runtime_benchmark(const std::vector<NetworkSnapshot>& snapshots,
                                const mlp::MlpModel<float>& model,
                                const dataset::FeatureSchema& schema,
                                const std::vector<int>& request_counts, int repeats,
                                std::uint64_t seed);

std::string runtime_csv(const RuntimeReport& report);

std::string feasibility_csv(const dataset::FeasibilityProfile& profile);

std::string loss_curve_csv(const mlp::TrainingHistory& history);

std::string machine_descriptor();

} // namespace vnfmig::eval
