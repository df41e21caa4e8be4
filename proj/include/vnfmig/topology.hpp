#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vnfmig/errors.hpp"

namespace vnfmig::topology {

/// Inclusive sampling ranges. Delays are drawn on a 0.1 ms grid so that
/// downtime sums compare reproducibly without epsilons.
struct GeneratorConfig {
    int n_servers = 15;
    int n_instances = 6;
    int n_resources = 2;
    std::vector<int> chain_type_counts{2, 2, 1, 1};

    std::pair<int, int> capacity_range{8, 16};
    std::pair<int, int> demand_range{2, 6};
    std::pair<double, double> inter_server_delay_ms{1.0, 20.0};
    std::pair<double, double> controller_delay_ms{1.0, 5.0};
    std::pair<double, double> delay_tolerance_ms{5.0, 25.0};
    std::pair<double, double> recovery_delay_ms{5.0, 25.0};
    std::pair<double, double> migration_overhead_ms{1.0, 10.0};

    std::uint64_t seed = 42;
    int max_attempts = 100;

    /// Throws ConfigError on structural or range inconsistencies.
    void validate() const;
};

struct InstanceSpec {
    int type_index = 0;
    Eigen::VectorXi demand;            // per resource
    double delay_tolerance_ms = 0.0;   // D^t
    double recovery_delay_ms = 0.0;    // D^rec
    double migration_overhead_ms = 0.0;
    std::vector<int> dependents;       // instances of chain-adjacent types
};

struct NetworkSnapshot {
    std::int64_t snapshot_id = 0;
    std::uint64_t seed = 0;
    std::vector<int> chain_type_counts;
    Eigen::MatrixXi server_capacity;    // n_servers x n_resources
    Eigen::MatrixXd inter_server_delay; // symmetric, zero diagonal, ms
    Eigen::VectorXd controller_delay;   // per server, ms
    std::vector<InstanceSpec> instances;
    Eigen::VectorXi initial_placement;  // per instance, server index

    int n_servers() const { return static_cast<int>(server_capacity.rows()); }
    int n_instances() const { return static_cast<int>(instances.size()); }
    int n_resources() const { return static_cast<int>(server_capacity.cols()); }
};

/// Availability rule between an instance being (re)placed and one of its
/// dependents: a dependent that tolerates at least the recovery delay must sit
/// on a different server; one that cannot tolerate it must share the server.
inline bool requires_separation(double dependent_tolerance_ms, double recovery_delay_ms) {
    return dependent_tolerance_ms >= recovery_delay_ms;
}

/// Greedy placement in chain order: each instance takes the feasible server
/// (capacity, affinity/anti-affinity against already-placed dependents)
/// minimizing the sum of delays to placed dependents plus the controller
/// delay, ties to the lowest index. Throws NoFeasiblePlacement.
Eigen::VectorXi compute_initial_placement(const NetworkSnapshot& snapshot);

/// Deterministic in (config.seed, index); resamples parameters until the
/// greedy placement succeeds, up to config.max_attempts.
NetworkSnapshot generate_snapshot(const GeneratorConfig& config, std::int64_t index);

std::vector<NetworkSnapshot> generate_corpus(const GeneratorConfig& config, int count);

std::string snapshot_to_json(const NetworkSnapshot& snapshot);
NetworkSnapshot snapshot_from_json(const std::string& text);

} // namespace vnfmig::topology
