#include "vnfmig/topology.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "vnfmig/rng.hpp"

namespace vnfmig::topology {

using nlohmann::json;

void GeneratorConfig::validate() const {
    if (n_servers < 1) throw ConfigError("n_servers must be >= 1");
    if (n_instances < 1) throw ConfigError("n_instances must be >= 1");
    if (n_instances > 62) throw ConfigError("n_instances must fit a 64-bit migration mask");
    if (n_resources < 1) throw ConfigError("n_resources must be >= 1");
    if (chain_type_counts.empty()) throw ConfigError("chain_type_counts must be non-empty");
    int total = 0;
    for (int c : chain_type_counts) {
        if (c < 1) throw ConfigError("chain_type_counts entries must be >= 1");
        total += c;
    }
    if (total != n_instances)
        throw ConfigError("chain_type_counts must sum to n_instances");
    if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");

    auto check_int = [](std::pair<int, int> r, int lo_min, const char* name) {
        if (r.first < lo_min || r.second < r.first)
            throw ConfigError(std::string(name) + " range is invalid");
    };
    auto check_real = [](std::pair<double, double> r, const char* name) {
        if (r.first < 0.0 || r.second < r.first)
            throw ConfigError(std::string(name) + " range is invalid");
    };
    check_int(capacity_range, 1, "capacity");
    check_int(demand_range, 0, "demand");
    check_real(inter_server_delay_ms, "inter_server_delay_ms");
    check_real(controller_delay_ms, "controller_delay_ms");
    check_real(delay_tolerance_ms, "delay_tolerance_ms");
    check_real(recovery_delay_ms, "recovery_delay_ms");
    check_real(migration_overhead_ms, "migration_overhead_ms");
}

Eigen::VectorXi compute_initial_placement(const NetworkSnapshot& snapshot) {
    const int n_servers = snapshot.n_servers();
    const int n_instances = snapshot.n_instances();
    const int n_resources = snapshot.n_resources();

    Eigen::MatrixXi load = Eigen::MatrixXi::Zero(n_servers, n_resources);
    Eigen::VectorXi placement = Eigen::VectorXi::Constant(n_instances, -1);

    for (int i = 0; i < n_instances; ++i) {
        const InstanceSpec& inst = snapshot.instances[i];
        int best = -1;
        double best_score = 0.0;
        for (int s = 0; s < n_servers; ++s) {
            bool ok = true;
            for (int r = 0; r < n_resources; ++r) {
                if (load(s, r) + inst.demand(r) > snapshot.server_capacity(s, r)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;

            double score = snapshot.controller_delay(s);
            for (int j : inst.dependents) {
                if (placement(j) < 0) continue;
                const bool separate = requires_separation(
                    snapshot.instances[j].delay_tolerance_ms, inst.recovery_delay_ms);
                if (separate ? s == placement(j) : s != placement(j)) {
                    ok = false;
                    break;
                }
                score += snapshot.inter_server_delay(s, placement(j));
            }
            if (!ok) continue;

            if (best < 0 || score < best_score) {
                best = s;
                best_score = score;
            }
        }
        if (best < 0)
            throw NoFeasiblePlacement("no feasible server for instance " + std::to_string(i));
        placement(i) = best;
        load.row(best) += inst.demand.transpose();
    }
    return placement;
}

namespace {

std::vector<int> expand_types(const std::vector<int>& chain_type_counts) {
    std::vector<int> types;
    for (std::size_t t = 0; t < chain_type_counts.size(); ++t)
        for (int k = 0; k < chain_type_counts[t]; ++k) types.push_back(static_cast<int>(t));
    return types;
}

NetworkSnapshot draw_snapshot(const GeneratorConfig& cfg, std::int64_t index, Rng& rng) {
    NetworkSnapshot snap;
    snap.snapshot_id = index;
    snap.seed = cfg.seed;
    snap.chain_type_counts = cfg.chain_type_counts;

    snap.server_capacity.resize(cfg.n_servers, cfg.n_resources);
    for (int s = 0; s < cfg.n_servers; ++s)
        for (int r = 0; r < cfg.n_resources; ++r)
            snap.server_capacity(s, r) = static_cast<int>(
                rng.uniform_int(cfg.capacity_range.first, cfg.capacity_range.second));

    snap.inter_server_delay = Eigen::MatrixXd::Zero(cfg.n_servers, cfg.n_servers);
    for (int a = 0; a < cfg.n_servers; ++a)
        for (int b = a + 1; b < cfg.n_servers; ++b) {
            const double d = rng.uniform_decimal(cfg.inter_server_delay_ms.first,
                                                 cfg.inter_server_delay_ms.second);
            snap.inter_server_delay(a, b) = d;
            snap.inter_server_delay(b, a) = d;
        }

    snap.controller_delay.resize(cfg.n_servers);
    for (int s = 0; s < cfg.n_servers; ++s)
        snap.controller_delay(s) =
            rng.uniform_decimal(cfg.controller_delay_ms.first, cfg.controller_delay_ms.second);

    const std::vector<int> types = expand_types(cfg.chain_type_counts);
    snap.instances.resize(static_cast<std::size_t>(cfg.n_instances));
    for (int i = 0; i < cfg.n_instances; ++i) {
        InstanceSpec& inst = snap.instances[static_cast<std::size_t>(i)];
        inst.type_index = types[static_cast<std::size_t>(i)];
        inst.demand.resize(cfg.n_resources);
        for (int r = 0; r < cfg.n_resources; ++r)
            inst.demand(r) = static_cast<int>(
                rng.uniform_int(cfg.demand_range.first, cfg.demand_range.second));
        inst.delay_tolerance_ms =
            rng.uniform_decimal(cfg.delay_tolerance_ms.first, cfg.delay_tolerance_ms.second);
        inst.recovery_delay_ms =
            rng.uniform_decimal(cfg.recovery_delay_ms.first, cfg.recovery_delay_ms.second);
        inst.migration_overhead_ms = rng.uniform_decimal(cfg.migration_overhead_ms.first,
                                                         cfg.migration_overhead_ms.second);
    }
    for (int i = 0; i < cfg.n_instances; ++i)
        for (int j = 0; j < cfg.n_instances; ++j)
            if (std::abs(types[static_cast<std::size_t>(i)] - types[static_cast<std::size_t>(j)]) == 1)
                snap.instances[static_cast<std::size_t>(i)].dependents.push_back(j);

    return snap;
}

} // namespace

NetworkSnapshot generate_snapshot(const GeneratorConfig& config, std::int64_t index) {
    config.validate();
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));
    for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
        NetworkSnapshot snap = draw_snapshot(config, index, rng);
        try {
            snap.initial_placement = compute_initial_placement(snap);
            return snap;
        } catch (const NoFeasiblePlacement&) {
            // resample with the next slice of the stream
        }
    }
    throw GenerationError("no feasible initial placement for snapshot " + std::to_string(index) +
                          " after " + std::to_string(config.max_attempts) +
                          " attempts (seed " + std::to_string(config.seed) + ")");
}

std::vector<NetworkSnapshot> generate_corpus(const GeneratorConfig& config, int count) {
    std::vector<NetworkSnapshot> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(generate_snapshot(config, i));
    return out;
}

std::string snapshot_to_json(const NetworkSnapshot& snapshot) {
    json j;
    j["schema_version"] = 1;
    j["snapshot_id"] = snapshot.snapshot_id;
    j["seed"] = snapshot.seed;
    j["chain_type_counts"] = snapshot.chain_type_counts;

    json caps = json::array();
    for (int s = 0; s < snapshot.n_servers(); ++s) {
        json row = json::array();
        for (int r = 0; r < snapshot.n_resources(); ++r) row.push_back(snapshot.server_capacity(s, r));
        caps.push_back(std::move(row));
    }
    j["server_capacity"] = std::move(caps);

    json delays = json::array();
    for (int a = 0; a < snapshot.n_servers(); ++a) {
        json row = json::array();
        for (int b = 0; b < snapshot.n_servers(); ++b) row.push_back(snapshot.inter_server_delay(a, b));
        delays.push_back(std::move(row));
    }
    j["inter_server_delay_ms"] = std::move(delays);

    json ctrl = json::array();
    for (int s = 0; s < snapshot.n_servers(); ++s) ctrl.push_back(snapshot.controller_delay(s));
    j["controller_delay_ms"] = std::move(ctrl);

    json instances = json::array();
    for (const InstanceSpec& inst : snapshot.instances) {
        json e;
        e["type_index"] = inst.type_index;
        e["demand"] = std::vector<int>(inst.demand.data(), inst.demand.data() + inst.demand.size());
        e["delay_tolerance_ms"] = inst.delay_tolerance_ms;
        e["recovery_delay_ms"] = inst.recovery_delay_ms;
        e["migration_overhead_ms"] = inst.migration_overhead_ms;
        e["dependents"] = inst.dependents;
        instances.push_back(std::move(e));
    }
    j["instances"] = std::move(instances);

    j["initial_placement"] = std::vector<int>(
        snapshot.initial_placement.data(),
        snapshot.initial_placement.data() + snapshot.initial_placement.size());

    return j.dump();
}

NetworkSnapshot snapshot_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("snapshot parse error: ") + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != 1)
            throw SchemaMismatch("unsupported snapshot schema version");
        NetworkSnapshot snap;
        snap.snapshot_id = j.at("snapshot_id").get<std::int64_t>();
        snap.seed = j.at("seed").get<std::uint64_t>();
        snap.chain_type_counts = j.at("chain_type_counts").get<std::vector<int>>();

        const auto& caps = j.at("server_capacity");
        const int n_servers = static_cast<int>(caps.size());
        const int n_resources = n_servers > 0 ? static_cast<int>(caps.at(0).size()) : 0;
        snap.server_capacity.resize(n_servers, n_resources);
        for (int s = 0; s < n_servers; ++s)
            for (int r = 0; r < n_resources; ++r)
                snap.server_capacity(s, r) = caps.at(s).at(r).get<int>();

        snap.inter_server_delay.resize(n_servers, n_servers);
        const auto& delays = j.at("inter_server_delay_ms");
        for (int a = 0; a < n_servers; ++a)
            for (int b = 0; b < n_servers; ++b)
                snap.inter_server_delay(a, b) = delays.at(a).at(b).get<double>();

        snap.controller_delay.resize(n_servers);
        const auto& ctrl = j.at("controller_delay_ms");
        for (int s = 0; s < n_servers; ++s) snap.controller_delay(s) = ctrl.at(s).get<double>();

        for (const auto& e : j.at("instances")) {
            InstanceSpec inst;
            inst.type_index = e.at("type_index").get<int>();
            const auto demand = e.at("demand").get<std::vector<int>>();
            inst.demand = Eigen::Map<const Eigen::VectorXi>(demand.data(),
                                                            static_cast<int>(demand.size()));
            inst.delay_tolerance_ms = e.at("delay_tolerance_ms").get<double>();
            inst.recovery_delay_ms = e.at("recovery_delay_ms").get<double>();
            inst.migration_overhead_ms = e.at("migration_overhead_ms").get<double>();
            inst.dependents = e.at("dependents").get<std::vector<int>>();
            snap.instances.push_back(std::move(inst));
        }

        const auto place = j.at("initial_placement").get<std::vector<int>>();
        snap.initial_placement =
            Eigen::Map<const Eigen::VectorXi>(place.data(), static_cast<int>(place.size()));
        return snap;
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("snapshot field error: ") + e.what());
    }
}

} // namespace vnfmig::topology
