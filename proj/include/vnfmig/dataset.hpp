#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vnfmig/optimizer.hpp"
#include "vnfmig/topology.hpp"

namespace vnfmig::dataset {

using topology::NetworkSnapshot;

/// All non-empty instance subsets, ordered by ascending bitmask.
/// n_instances must be in [1, 20].
std::vector<std::uint64_t> enumerate_migration_sets(int n_instances);

struct LabeledRecord {
    std::int64_t snapshot_id = 0;
    std::uint64_t migration_mask = 0;
    Eigen::VectorXd raw_features;       // fixed layout, see FeatureSchema
    Eigen::VectorXi optimal_placement;  // one server per instance
    int migrated_count = 0;
};

struct FeasibilityProfile {
    struct Row {
        int migrated = 0;
        std::int64_t attempts = 0;
        std::int64_t feasible = 0;
    };
    std::vector<Row> per_size; // indexed by migrated-1
    std::int64_t total_attempts = 0;
    std::int64_t total_feasible = 0;
    std::int64_t errors = 0;

    double success_rate() const {
        return total_attempts > 0
                   ? static_cast<double>(total_feasible) / static_cast<double>(total_attempts)
                   : 0.0;
    }
    double success_rate_at(int migrated) const;
};

struct BuildResult {
    std::vector<LabeledRecord> records; // feasible solves only, (snapshot, mask) order
    FeasibilityProfile profile;
};

/// Solves every (snapshot, non-empty subset) pair, keeps the feasible ones as
/// labeled records and tallies the rest. Labels are re-verified feasible.
BuildResult build_raw_dataset(const std::vector<NetworkSnapshot>& snapshots, int workers = 1);

enum class ColumnKind { flag, one_hot, numeric };

struct ColumnDesc {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

/// Raw feature layout plus everything fitted on the training split: the
/// dropped-constant set and the z-score statistics for numeric columns.
/// Flag and one-hot columns pass through unnormalized.
struct FeatureSchema {
    int n_instances = 0;
    int n_servers = 0;
    int n_resources = 0;
    std::vector<ColumnDesc> columns; // raw layout
    std::vector<int> kept;           // raw indices surviving the constant scan
    Eigen::VectorXd mean;            // per raw column; identity for non-numeric
    Eigen::VectorXd stddev;

    static FeatureSchema make(int n_instances, int n_servers, int n_resources);

    int raw_width() const { return static_cast<int>(columns.size()); }
    int encoded_width() const { return static_cast<int>(kept.size()); }

    /// Drops columns constant across the given training rows and fits
    /// population mean/std for the surviving numeric columns.
    void fit(const std::vector<LabeledRecord>& records, const std::vector<int>& train_indices);

    Eigen::VectorXd encode(const Eigen::VectorXd& raw) const;

    /// Recovers the initial placement from an encoded row's one-hot block.
    Eigen::VectorXi decode_initial_placement(const Eigen::VectorXd& encoded) const;

    std::string to_json() const;
    static FeatureSchema from_json(const std::string& text);
};

/// Raw feature vector of a migration request: migration flags, initial-server
/// one-hots, demands, tolerances, recovery delays, migration overheads,
/// capacities, the delay matrix upper triangle and controller delays.
Eigen::VectorXd raw_features(const NetworkSnapshot& snapshot, std::uint64_t migration_mask);

Eigen::VectorXf label_row(const Eigen::VectorXi& placement, int n_servers);

struct EncodedDataset {
    FeatureSchema schema;
    Eigen::MatrixXf features; // rows x encoded width, train-normalized
    Eigen::MatrixXf labels;   // rows x (n_instances * n_servers)
    std::vector<std::int64_t> snapshot_ids;
    std::vector<std::uint64_t> masks;
    std::vector<int> migrated_counts;
    std::vector<Eigen::VectorXi> placements;
    std::vector<int> train_indices; // ascending
    std::vector<int> test_indices;
    double split_ratio = 0.8;
    std::uint64_t split_seed = 0;

    int rows() const { return static_cast<int>(features.rows()); }
};

/// Seeded shuffle split (train share = ratio, +-1 row), schema fitted on the
/// training rows only, features z-scored with those statistics.
/// Throws DegenerateDataset below 10 rows or on an empty split.
EncodedDataset split_and_normalize(const std::vector<LabeledRecord>& records, int n_instances,
                                   int n_servers, int n_resources, double ratio,
                                   std::uint64_t seed);

// ---- persistence ----

void write_records_jsonl(const std::string& path, const std::vector<LabeledRecord>& records);
std::vector<LabeledRecord> read_records_jsonl(const std::string& path);

std::string profile_to_json(const FeasibilityProfile& profile);
FeasibilityProfile profile_from_json(const std::string& text);

/// Writes schema.json, features.csv, labels.csv and splits.json into dir.
void write_encoded_dataset(const std::string& dir, const EncodedDataset& dataset);

/// Rebuilds the dataset from dir; per-row metadata comes from the records.
EncodedDataset read_encoded_dataset(const std::string& dir,
                                    const std::vector<LabeledRecord>& records);

} // namespace vnfmig::dataset
