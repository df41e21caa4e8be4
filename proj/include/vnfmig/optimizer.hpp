#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vnfmig/topology.hpp"

namespace vnfmig::optimizer {

using topology::NetworkSnapshot;

/// Instance indices selected by the mask (bit i = instance i), ascending.
std::vector<int> mask_to_instances(std::uint64_t migration_mask, int n_instances);

/// A snapshot plus the set of instances that must move to new servers.
struct MigrationProblem {
    NetworkSnapshot snapshot;
    std::uint64_t migration_mask = 0;
};

enum class ConstraintTag {
    none,
    placement_shape,    // wrong length or server index out of range
    non_migrated_moved, // an unselected instance left its initial server
    migrated_not_moved, // a selected instance kept its initial server
    affinity,           // fate-sharing pair split across servers
    anti_affinity,      // pair that must be separated shares a server
    capacity,           // per-resource server capacity exceeded
    negative_downtime,
};

const char* to_string(ConstraintTag tag);

struct FeasibilityVerdict {
    bool ok = true;
    ConstraintTag tag = ConstraintTag::none;
    std::string detail; // first violation in check order
};

/// Delay of hosting `instance` on `server`: inter-server delay to every
/// dependent at its initial server, plus the controller delay of `server`.
/// Dependents are charged at their initial servers even when they co-migrate.
double placement_delay(const NetworkSnapshot& snapshot, int server, int instance);

/// Per-instance downtime (placement delay + migration overhead for selected
/// instances, zero otherwise) and the total across instances.
std::pair<Eigen::VectorXd, double> downtime(const NetworkSnapshot& snapshot,
                                            const Eigen::VectorXi& placement,
                                            std::uint64_t migration_mask);

/// Validates a full placement in a fixed order: shape, pinned non-migrated
/// instances, the move requirement, availability rules (separation dominates
/// when the two directions of a co-migrated pair disagree), capacity, and
/// non-negative downtime. Returns the first violation.
FeasibilityVerdict check_feasible(const NetworkSnapshot& snapshot,
                                  const Eigen::VectorXi& placement,
                                  std::uint64_t migration_mask);

struct PlacementSolution {
    Eigen::VectorXi placement;
    Eigen::VectorXd downtime_per_instance_ms;
    double total_downtime_ms = 0.0;
    std::int64_t nodes_explored = 0;
    double solve_time_s = 0.0;
};

struct SolveResult {
    bool optimal = false;
    PlacementSolution solution;    // valid when optimal
    std::string infeasible_reason; // set otherwise
    std::int64_t nodes_explored = 0;
    double solve_time_s = 0.0;
};

/// Exact minimizer of total downtime. Depth-first search over server choices
/// for the selected instances in ascending index order, pruning on partial
/// constraint violations and on partial downtime >= incumbent; among equal
/// optima the lexicographically smallest placement wins.
SolveResult solve(const NetworkSnapshot& snapshot, std::uint64_t migration_mask);

inline SolveResult solve(const MigrationProblem& problem) {
    return solve(problem.snapshot, problem.migration_mask);
}

/// Full enumeration with the same feasibility semantics and tie-break;
/// throws SearchSpaceTooLarge when n_servers^|migration set| exceeds `guard`.
SolveResult brute_force_oracle(const NetworkSnapshot& snapshot, std::uint64_t migration_mask,
                               double guard = 1e7);

/// Single-line JSON record of a solve outcome.
std::string solve_record_json(std::int64_t snapshot_id, std::uint64_t migration_mask,
                              const SolveResult& result);

} // namespace vnfmig::optimizer
