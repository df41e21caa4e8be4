#include "vnfmig/optimizer.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "vnfmig/errors.hpp"

namespace vnfmig::optimizer {

using nlohmann::json;
using topology::requires_separation;

std::vector<int> mask_to_instances(std::uint64_t migration_mask, int n_instances) {
    std::vector<int> out;
    for (int i = 0; i < n_instances; ++i)
        if (migration_mask & (std::uint64_t{1} << i)) out.push_back(i);
    return out;
}

const char* to_string(ConstraintTag tag) {
    switch (tag) {
        case ConstraintTag::none: return "none";
        case ConstraintTag::placement_shape: return "placement_shape";
        case ConstraintTag::non_migrated_moved: return "non_migrated_moved";
        case ConstraintTag::migrated_not_moved: return "migrated_not_moved";
        case ConstraintTag::affinity: return "affinity";
        case ConstraintTag::anti_affinity: return "anti_affinity";
        case ConstraintTag::capacity: return "capacity";
        case ConstraintTag::negative_downtime: return "negative_downtime";
    }
    return "unknown";
}

namespace {

bool is_migrated(std::uint64_t mask, int i) { return (mask >> i) & 1u; }

/// Separation requirement for (migrated a, dependent b). Both directions
/// apply when b co-migrates; separation dominates a direction conflict.
bool pair_requires_separation(const NetworkSnapshot& snap, int a, int b, bool b_migrated) {
    bool sep = requires_separation(snap.instances[static_cast<std::size_t>(b)].delay_tolerance_ms,
                                   snap.instances[static_cast<std::size_t>(a)].recovery_delay_ms);
    if (b_migrated && !sep)
        sep = requires_separation(snap.instances[static_cast<std::size_t>(a)].delay_tolerance_ms,
                                  snap.instances[static_cast<std::size_t>(b)].recovery_delay_ms);
    return sep;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SolveResult trivial_result(const NetworkSnapshot& snap,
                           std::chrono::steady_clock::time_point t0) {
    SolveResult res;
    res.optimal = true;
    res.solution.placement = snap.initial_placement;
    res.solution.downtime_per_instance_ms = Eigen::VectorXd::Zero(snap.n_instances());
    res.solution.total_downtime_ms = 0.0;
    res.solution.nodes_explored = 0;
    res.solve_time_s = res.solution.solve_time_s = seconds_since(t0);
    return res;
}

} // namespace

double placement_delay(const NetworkSnapshot& snapshot, int server, int instance) {
    const topology::InstanceSpec& inst = snapshot.instances[static_cast<std::size_t>(instance)];
    double delay = 0.0;
    for (int j : inst.dependents)
        delay += snapshot.inter_server_delay(server, snapshot.initial_placement(j));
    return delay + snapshot.controller_delay(server);
}

std::pair<Eigen::VectorXd, double> downtime(const NetworkSnapshot& snapshot,
                                            const Eigen::VectorXi& placement,
                                            std::uint64_t migration_mask) {
    const int n = snapshot.n_instances();
    Eigen::VectorXd per = Eigen::VectorXd::Zero(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!is_migrated(migration_mask, i)) continue;
        per(i) = placement_delay(snapshot, placement(i), i) +
                 snapshot.instances[static_cast<std::size_t>(i)].migration_overhead_ms;
        total += per(i);
    }
    return {per, total};
}

FeasibilityVerdict check_feasible(const NetworkSnapshot& snapshot,
                                  const Eigen::VectorXi& placement,
                                  std::uint64_t migration_mask) {
    const int n_instances = snapshot.n_instances();
    const int n_servers = snapshot.n_servers();
    const int n_resources = snapshot.n_resources();

    auto fail = [](ConstraintTag tag, std::string detail) {
        return FeasibilityVerdict{false, tag, std::move(detail)};
    };

    if (placement.size() != n_instances)
        return fail(ConstraintTag::placement_shape, "placement length != instance count");
    for (int i = 0; i < n_instances; ++i)
        if (placement(i) < 0 || placement(i) >= n_servers)
            return fail(ConstraintTag::placement_shape,
                        "instance " + std::to_string(i) + " has no valid server");

    for (int i = 0; i < n_instances; ++i)
        if (!is_migrated(migration_mask, i) && placement(i) != snapshot.initial_placement(i))
            return fail(ConstraintTag::non_migrated_moved,
                        "instance " + std::to_string(i) + " is not selected but moved");

    for (int i = 0; i < n_instances; ++i)
        if (is_migrated(migration_mask, i) && placement(i) == snapshot.initial_placement(i))
            return fail(ConstraintTag::migrated_not_moved,
                        "instance " + std::to_string(i) + " is selected but kept its server");

    for (int i = 0; i < n_instances; ++i) {
        if (!is_migrated(migration_mask, i)) continue;
        for (int j : snapshot.instances[static_cast<std::size_t>(i)].dependents) {
            const bool j_migrated = is_migrated(migration_mask, j);
            const int target = j_migrated ? placement(j) : snapshot.initial_placement(j);
            const bool separate = pair_requires_separation(snapshot, i, j, j_migrated);
            if (separate && placement(i) == target)
                return fail(ConstraintTag::anti_affinity,
                            "instances " + std::to_string(i) + " and " + std::to_string(j) +
                                " share server " + std::to_string(target));
            if (!separate && placement(i) != target)
                return fail(ConstraintTag::affinity,
                            "instance " + std::to_string(i) + " must share a server with " +
                                std::to_string(j));
        }
    }

    Eigen::MatrixXi load = Eigen::MatrixXi::Zero(n_servers, n_resources);
    for (int i = 0; i < n_instances; ++i)
        load.row(placement(i)) += snapshot.instances[static_cast<std::size_t>(i)].demand.transpose();
    for (int s = 0; s < n_servers; ++s)
        for (int r = 0; r < n_resources; ++r)
            if (load(s, r) > snapshot.server_capacity(s, r))
                return fail(ConstraintTag::capacity,
                            "server " + std::to_string(s) + " exceeds resource " +
                                std::to_string(r));

    const auto [per, total] = downtime(snapshot, placement, migration_mask);
    (void)total;
    for (int i = 0; i < n_instances; ++i)
        if (per(i) < 0.0)
            return fail(ConstraintTag::negative_downtime,
                        "instance " + std::to_string(i) + " has negative downtime");

    return {};
}

SolveResult solve(const NetworkSnapshot& snapshot, std::uint64_t migration_mask) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n_servers = snapshot.n_servers();
    const int n_resources = snapshot.n_resources();
    const std::vector<int> migrated = mask_to_instances(migration_mask, snapshot.n_instances());

    if (migrated.empty()) return trivial_result(snapshot, t0);

    const int depth_max = static_cast<int>(migrated.size());

    // Downtime of each selected instance on each server; dependents are
    // charged at their initial servers, so the objective is separable.
    Eigen::MatrixXd down_table(depth_max, n_servers);
    for (int d = 0; d < depth_max; ++d)
        for (int s = 0; s < n_servers; ++s)
            down_table(d, s) =
                placement_delay(snapshot, s, migrated[static_cast<std::size_t>(d)]) +
                snapshot.instances[static_cast<std::size_t>(migrated[static_cast<std::size_t>(d)])]
                    .migration_overhead_ms;

    Eigen::MatrixXi load = Eigen::MatrixXi::Zero(n_servers, n_resources);
    for (int i = 0; i < snapshot.n_instances(); ++i)
        if (!is_migrated(migration_mask, i))
            load.row(snapshot.initial_placement(i)) +=
                snapshot.instances[static_cast<std::size_t>(i)].demand.transpose();

    Eigen::VectorXi current = snapshot.initial_placement;
    Eigen::VectorXi best;
    double best_total = 0.0;
    bool have_best = false;
    std::int64_t nodes = 0;

    auto dfs = [&](auto&& self, int depth, double partial) -> void {
        const int i = migrated[static_cast<std::size_t>(depth)];
        const topology::InstanceSpec& inst = snapshot.instances[static_cast<std::size_t>(i)];
        for (int s = 0; s < n_servers; ++s) {
            ++nodes;
            if (s == snapshot.initial_placement(i)) continue;

            bool ok = true;
            for (int r = 0; r < n_resources; ++r)
                if (load(s, r) + inst.demand(r) > snapshot.server_capacity(s, r)) {
                    ok = false;
                    break;
                }
            if (!ok) continue;

            for (int j : inst.dependents) {
                const bool j_migrated = is_migrated(migration_mask, j);
                if (j_migrated && j > i) continue; // decided later in the search
                const int target = j_migrated ? current(j) : snapshot.initial_placement(j);
                const bool separate = pair_requires_separation(snapshot, i, j, j_migrated);
                if (separate ? s == target : s != target) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;

            const double next_partial = partial + down_table(depth, s);
            if (have_best && next_partial >= best_total) continue;

            if (depth + 1 == depth_max) {
                current(i) = s;
                best = current;
                best_total = next_partial;
                have_best = true;
                current(i) = snapshot.initial_placement(i);
                continue;
            }

            current(i) = s;
            load.row(s) += inst.demand.transpose();
            self(self, depth + 1, next_partial);
            load.row(s) -= inst.demand.transpose();
            current(i) = snapshot.initial_placement(i);
        }
    };
    dfs(dfs, 0, 0.0);

    SolveResult res;
    res.nodes_explored = nodes;
    if (!have_best) {
        res.infeasible_reason = "no server assignment satisfies the constraints";
        res.solve_time_s = seconds_since(t0);
        return res;
    }
    res.optimal = true;
    res.solution.placement = best;
    auto [per, total] = downtime(snapshot, best, migration_mask);
    res.solution.downtime_per_instance_ms = std::move(per);
    res.solution.total_downtime_ms = total;
    res.solution.nodes_explored = nodes;
    res.solve_time_s = res.solution.solve_time_s = seconds_since(t0);
    return res;
}

SolveResult brute_force_oracle(const NetworkSnapshot& snapshot, std::uint64_t migration_mask,
                               double guard) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<int> migrated = mask_to_instances(migration_mask, snapshot.n_instances());
    const int n_servers = snapshot.n_servers();

    const double space = std::pow(static_cast<double>(n_servers),
                                  static_cast<double>(migrated.size()));
    if (space > guard)
        throw SearchSpaceTooLarge("oracle search space " + std::to_string(space) +
                                  " exceeds guard " + std::to_string(guard));

    if (migrated.empty()) return trivial_result(snapshot, t0);

    const int k = static_cast<int>(migrated.size());
    std::vector<int> odo(static_cast<std::size_t>(k), 0);
    Eigen::VectorXi placement = snapshot.initial_placement;
    Eigen::VectorXi best;
    double best_total = 0.0;
    bool have_best = false;
    std::int64_t nodes = 0;

    bool done = false;
    while (!done) {
        ++nodes;
        for (int d = 0; d < k; ++d)
            placement(migrated[static_cast<std::size_t>(d)]) = odo[static_cast<std::size_t>(d)];
        if (check_feasible(snapshot, placement, migration_mask).ok) {
            const double total = downtime(snapshot, placement, migration_mask).second;
            if (!have_best || total < best_total) {
                best = placement;
                best_total = total;
                have_best = true;
            }
        }
        // lexicographic odometer: last position advances fastest
        int d = k - 1;
        while (d >= 0 && ++odo[static_cast<std::size_t>(d)] == n_servers) {
            odo[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        done = d < 0;
    }

    SolveResult res;
    res.nodes_explored = nodes;
    if (!have_best) {
        res.infeasible_reason = "no server assignment satisfies the constraints";
        res.solve_time_s = seconds_since(t0);
        return res;
    }
    res.optimal = true;
    res.solution.placement = best;
    auto [per, total] = downtime(snapshot, best, migration_mask);
    res.solution.downtime_per_instance_ms = std::move(per);
    res.solution.total_downtime_ms = total;
    res.solution.nodes_explored = nodes;
    res.solve_time_s = res.solution.solve_time_s = seconds_since(t0);
    return res;
}

std::string solve_record_json(std::int64_t snapshot_id, std::uint64_t migration_mask,
                              const SolveResult& result) {
    json j;
    j["snapshot_id"] = snapshot_id;
    j["migration_mask"] = migration_mask;
    j["status"] = result.optimal ? "optimal" : "infeasible";
    if (result.optimal) {
        j["placement"] = std::vector<int>(
            result.solution.placement.data(),
            result.solution.placement.data() + result.solution.placement.size());
        j["total_downtime_ms"] = result.solution.total_downtime_ms;
    } else {
        j["placement"] = nullptr;
        j["total_downtime_ms"] = nullptr;
        j["infeasible_reason"] = result.infeasible_reason;
    }
    j["nodes_explored"] = result.nodes_explored;
    j["solve_time_s"] = result.solve_time_s;
    return j.dump();
}

} // namespace vnfmig::optimizer
