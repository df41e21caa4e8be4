#include "vnfmig/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "vnfmig/errors.hpp"
#include "vnfmig/rng.hpp"

namespace vnfmig::dataset {

using nlohmann::json;

namespace {

void parallel_for(std::int64_t count, int workers,
                  const std::function<void(std::int64_t)>& fn) {
    if (workers <= 1 || count < 2) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto body = [&]() {
        for (;;) {
            const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            fn(i);
        }
    };
    const int n_threads = static_cast<int>(std::min<std::int64_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
}

template <typename T>
std::string fmt_number(T value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

float parse_float(const char* first, const char* last, const std::string& path) {
    float value = 0.0f;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw SchemaMismatch("malformed numeric cell in " + path);
    return value;
}

Eigen::MatrixXf read_csv_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("missing csv file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("empty csv file: " + path);
    const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    std::vector<float> cells;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t start = 0;
        std::size_t seen = 0;
        while (true) {
            std::size_t end = line.find(',', start);
            const std::size_t stop = end == std::string::npos ? line.size() : end;
            cells.push_back(parse_float(line.data() + start, line.data() + stop, path));
            ++seen;
            if (end == std::string::npos) break;
            start = end + 1;
        }
        if (seen != cols) throw SchemaMismatch("ragged csv row in " + path);
        ++rows;
    }
    Eigen::MatrixXf out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cells[r * cols + c];
    return out;
}

void write_csv_matrix(const std::string& path, const std::vector<std::string>& header,
                      const Eigen::MatrixXf& m) {
    if (static_cast<Eigen::Index>(header.size()) != m.cols())
        throw SchemaMismatch("csv header width does not match matrix: " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    std::string line;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) line += ',';
        line += header[c];
    }
    out << line << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        line.clear();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) line += ',';
            line += fmt_number(m(r, c));
        }
        out << line << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

const char* kind_name(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::flag: return "flag";
        case ColumnKind::one_hot: return "one_hot";
        case ColumnKind::numeric: return "numeric";
    }
    return "numeric";
}

ColumnKind kind_from_name(const std::string& name) {
    if (name == "flag") return ColumnKind::flag;
    if (name == "one_hot") return ColumnKind::one_hot;
    if (name == "numeric") return ColumnKind::numeric;
    throw SchemaMismatch("unknown column kind: " + name);
}

} // namespace

std::vector<std::uint64_t> enumerate_migration_sets(int n_instances) {
    if (n_instances < 1 || n_instances > 20)
        throw ConfigError("n_instances must lie in [1, 20] for subset enumeration");
    const std::uint64_t limit = std::uint64_t{1} << n_instances;
    std::vector<std::uint64_t> masks;
    masks.reserve(limit - 1);
    for (std::uint64_t mask = 1; mask < limit; ++mask) masks.push_back(mask);
    return masks;
}

double FeasibilityProfile::success_rate_at(int migrated) const {
    for (const auto& row : per_size) {
        if (row.migrated == migrated)
            return row.attempts > 0
                       ? static_cast<double>(row.feasible) / static_cast<double>(row.attempts)
                       : 0.0;
    }
    return 0.0;
}

BuildResult build_raw_dataset(const std::vector<NetworkSnapshot>& snapshots, int workers) {
    BuildResult out;
    if (snapshots.empty()) return out;

    struct Task {
        int snapshot_index;
        std::uint64_t mask;
    };
    std::vector<Task> tasks;
    int max_instances = 0;
    for (int s = 0; s < static_cast<int>(snapshots.size()); ++s) {
        const int n = snapshots[static_cast<std::size_t>(s)].n_instances();
        max_instances = std::max(max_instances, n);
        for (std::uint64_t mask : enumerate_migration_sets(n)) tasks.push_back({s, mask});
    }

    struct Slot {
        std::int8_t status = 0; // 0 infeasible, 1 feasible, 2 error
        Eigen::VectorXi placement;
    };
    std::vector<Slot> slots(tasks.size());
    parallel_for(static_cast<std::int64_t>(tasks.size()), workers, [&](std::int64_t t) {
        const Task& task = tasks[static_cast<std::size_t>(t)];
        Slot& slot = slots[static_cast<std::size_t>(t)];
        try {
            const auto result =
                optimizer::solve(snapshots[static_cast<std::size_t>(task.snapshot_index)], task.mask);
            if (result.optimal) {
                slot.status = 1;
                slot.placement = result.solution.placement;
            }
        } catch (const std::exception&) {
            slot.status = 2;
        }
    });

    out.profile.per_size.resize(static_cast<std::size_t>(max_instances));
    for (int k = 1; k <= max_instances; ++k)
        out.profile.per_size[static_cast<std::size_t>(k - 1)].migrated = k;

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const Task& task = tasks[t];
        const Slot& slot = slots[t];
        const auto& snapshot = snapshots[static_cast<std::size_t>(task.snapshot_index)];
        const int migrated = std::popcount(task.mask);
        auto& row = out.profile.per_size[static_cast<std::size_t>(migrated - 1)];
        ++row.attempts;
        ++out.profile.total_attempts;
        if (slot.status == 2) {
            ++out.profile.errors;
            continue;
        }
        if (slot.status == 0) continue;
        const auto verdict = optimizer::check_feasible(snapshot, slot.placement, task.mask);
        if (!verdict.ok)
            throw std::logic_error("label failed feasibility re-verification: " + verdict.detail);
        ++row.feasible;
        ++out.profile.total_feasible;
        LabeledRecord record;
        record.snapshot_id = snapshot.snapshot_id;
        record.migration_mask = task.mask;
        record.raw_features = raw_features(snapshot, task.mask);
        record.optimal_placement = slot.placement;
        record.migrated_count = migrated;
        out.records.push_back(std::move(record));
    }
    return out;
}

FeatureSchema FeatureSchema::make(int n_instances, int n_servers, int n_resources) {
    if (n_instances < 1 || n_servers < 1 || n_resources < 1)
        throw ConfigError("feature schema dimensions must be positive");
    FeatureSchema schema;
    schema.n_instances = n_instances;
    schema.n_servers = n_servers;
    schema.n_resources = n_resources;
    auto add = [&schema](std::string name, ColumnKind kind) {
        schema.columns.push_back({std::move(name), kind});
    };
    for (int i = 0; i < n_instances; ++i)
        add("migrate[" + std::to_string(i) + "]", ColumnKind::flag);
    for (int i = 0; i < n_instances; ++i)
        for (int s = 0; s < n_servers; ++s)
            add("init[" + std::to_string(i) + "][" + std::to_string(s) + "]", ColumnKind::one_hot);
    for (int i = 0; i < n_instances; ++i)
        for (int r = 0; r < n_resources; ++r)
            add("demand[" + std::to_string(i) + "][" + std::to_string(r) + "]",
                ColumnKind::numeric);
    for (int i = 0; i < n_instances; ++i)
        add("tolerance[" + std::to_string(i) + "]", ColumnKind::numeric);
    for (int i = 0; i < n_instances; ++i)
        add("recovery[" + std::to_string(i) + "]", ColumnKind::numeric);
    for (int i = 0; i < n_instances; ++i)
        add("overhead[" + std::to_string(i) + "]", ColumnKind::numeric);
    for (int s = 0; s < n_servers; ++s)
        for (int r = 0; r < n_resources; ++r)
            add("capacity[" + std::to_string(s) + "][" + std::to_string(r) + "]",
                ColumnKind::numeric);
    for (int a = 0; a < n_servers; ++a)
        for (int b = a + 1; b < n_servers; ++b)
            add("delay[" + std::to_string(a) + "][" + std::to_string(b) + "]",
                ColumnKind::numeric);
    for (int s = 0; s < n_servers; ++s)
        add("controller[" + std::to_string(s) + "]", ColumnKind::numeric);

    schema.kept.resize(schema.columns.size());
    std::iota(schema.kept.begin(), schema.kept.end(), 0);
    schema.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(schema.columns.size()));
    schema.stddev = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(schema.columns.size()));
    return schema;
}

void FeatureSchema::fit(const std::vector<LabeledRecord>& records,
                        const std::vector<int>& train_indices) {
    if (train_indices.empty()) throw DegenerateDataset("cannot fit schema on an empty split");
    const int width = raw_width();
    for (int idx : train_indices) {
        if (idx < 0 || idx >= static_cast<int>(records.size()))
            throw SchemaMismatch("train index out of range");
        if (records[static_cast<std::size_t>(idx)].raw_features.size() != width)
            throw SchemaMismatch("record width does not match schema");
    }
    kept.clear();
    mean = Eigen::VectorXd::Zero(width);
    stddev = Eigen::VectorXd::Ones(width);
    const double count = static_cast<double>(train_indices.size());
    for (int c = 0; c < width; ++c) {
        const double first = records[static_cast<std::size_t>(train_indices[0])].raw_features(c);
        bool constant = true;
        for (int idx : train_indices) {
            if (records[static_cast<std::size_t>(idx)].raw_features(c) != first) {
                constant = false;
                break;
            }
        }
        if (constant) continue;
        kept.push_back(c);
        if (columns[static_cast<std::size_t>(c)].kind != ColumnKind::numeric) continue;
        double sum = 0.0;
        for (int idx : train_indices) sum += records[static_cast<std::size_t>(idx)].raw_features(c);
        const double m = sum / count;
        double sq = 0.0;
        for (int idx : train_indices) {
            const double d = records[static_cast<std::size_t>(idx)].raw_features(c) - m;
            sq += d * d;
        }
        mean(c) = m;
        stddev(c) = std::sqrt(sq / count);
    }
    if (kept.empty()) throw DegenerateDataset("every feature column is constant");
}

Eigen::VectorXd FeatureSchema::encode(const Eigen::VectorXd& raw) const {
    if (raw.size() != raw_width())
        throw SchemaMismatch("raw feature width " + std::to_string(raw.size()) +
                             " does not match schema width " + std::to_string(raw_width()));
    Eigen::VectorXd out(encoded_width());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const int c = kept[k];
        if (columns[static_cast<std::size_t>(c)].kind == ColumnKind::numeric)
            out(static_cast<Eigen::Index>(k)) = (raw(c) - mean(c)) / stddev(c);
        else
            out(static_cast<Eigen::Index>(k)) = raw(c);
    }
    return out;
}

Eigen::VectorXi FeatureSchema::decode_initial_placement(const Eigen::VectorXd& encoded) const {
    if (encoded.size() != encoded_width())
        throw SchemaMismatch("encoded width does not match schema");
    // -1 marks instances whose hot column was dropped as train-constant.
    Eigen::VectorXi placement = Eigen::VectorXi::Constant(n_instances, -1);
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const int c = kept[k];
        if (columns[static_cast<std::size_t>(c)].kind != ColumnKind::one_hot) continue;
        if (encoded(static_cast<Eigen::Index>(k)) <= 0.5) continue;
        const int offset = c - n_instances;
        placement(offset / n_servers) = offset % n_servers;
    }
    return placement;
}

std::string FeatureSchema::to_json() const {
    json j;
    j["version"] = 1;
    j["n_instances"] = n_instances;
    j["n_servers"] = n_servers;
    j["n_resources"] = n_resources;
    json cols = json::array();
    for (const auto& col : columns) cols.push_back({{"name", col.name}, {"kind", kind_name(col.kind)}});
    j["columns"] = std::move(cols);
    j["kept"] = kept;
    std::vector<double> m(mean.data(), mean.data() + mean.size());
    std::vector<double> sd(stddev.data(), stddev.data() + stddev.size());
    j["mean"] = m;
    j["stddev"] = sd;
    return j.dump();
}

FeatureSchema FeatureSchema::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& err) {
        throw SchemaMismatch(std::string("schema json parse failure: ") + err.what());
    }
    try {
        FeatureSchema schema;
        if (j.at("version").get<int>() != 1) throw SchemaMismatch("unsupported schema version");
        schema.n_instances = j.at("n_instances").get<int>();
        schema.n_servers = j.at("n_servers").get<int>();
        schema.n_resources = j.at("n_resources").get<int>();
        for (const auto& col : j.at("columns"))
            schema.columns.push_back(
                {col.at("name").get<std::string>(), kind_from_name(col.at("kind").get<std::string>())});
        schema.kept = j.at("kept").get<std::vector<int>>();
        const auto m = j.at("mean").get<std::vector<double>>();
        const auto sd = j.at("stddev").get<std::vector<double>>();
        if (m.size() != schema.columns.size() || sd.size() != schema.columns.size())
            throw SchemaMismatch("schema statistics width mismatch");
        schema.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
        schema.stddev =
            Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
        for (int c : schema.kept)
            if (c < 0 || c >= schema.raw_width()) throw SchemaMismatch("kept index out of range");
        return schema;
    } catch (const json::exception& err) {
        throw SchemaMismatch(std::string("schema json field failure: ") + err.what());
    }
}

Eigen::VectorXd raw_features(const NetworkSnapshot& snapshot, std::uint64_t migration_mask) {
    const int nI = snapshot.n_instances();
    const int nS = snapshot.n_servers();
    const int nR = snapshot.n_resources();
    const int width = nI + nI * nS + nI * nR + 3 * nI + nS * nR + nS * (nS - 1) / 2 + nS;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(width);
    int c = 0;
    for (int i = 0; i < nI; ++i) f(c++) = static_cast<double>((migration_mask >> i) & 1ULL);
    for (int i = 0; i < nI; ++i) f(c + i * nS + snapshot.initial_placement(i)) = 1.0;
    c += nI * nS;
    for (int i = 0; i < nI; ++i)
        for (int r = 0; r < nR; ++r)
            f(c++) = static_cast<double>(snapshot.instances[static_cast<std::size_t>(i)].demand(r));
    for (int i = 0; i < nI; ++i)
        f(c++) = snapshot.instances[static_cast<std::size_t>(i)].delay_tolerance_ms;
    for (int i = 0; i < nI; ++i)
        f(c++) = snapshot.instances[static_cast<std::size_t>(i)].recovery_delay_ms;
    for (int i = 0; i < nI; ++i)
        f(c++) = snapshot.instances[static_cast<std::size_t>(i)].migration_overhead_ms;
    for (int s = 0; s < nS; ++s)
        for (int r = 0; r < nR; ++r) f(c++) = static_cast<double>(snapshot.server_capacity(s, r));
    for (int a = 0; a < nS; ++a)
        for (int b = a + 1; b < nS; ++b) f(c++) = snapshot.inter_server_delay(a, b);
    for (int s = 0; s < nS; ++s) f(c++) = snapshot.controller_delay(s);
    return f;
}

Eigen::VectorXf label_row(const Eigen::VectorXi& placement, int n_servers) {
    Eigen::VectorXf row = Eigen::VectorXf::Zero(placement.size() * n_servers);
    for (Eigen::Index i = 0; i < placement.size(); ++i) {
        if (placement(i) < 0 || placement(i) >= n_servers)
            throw SchemaMismatch("placement entry out of server range");
        row(i * n_servers + placement(i)) = 1.0f;
    }
    return row;
}

EncodedDataset split_and_normalize(const std::vector<LabeledRecord>& records, int n_instances,
                                   int n_servers, int n_resources, double ratio,
                                   std::uint64_t seed) {
    const int n = static_cast<int>(records.size());
    if (n < 10)
        throw DegenerateDataset("need at least 10 labeled rows, got " + std::to_string(n));
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    const int train_count = static_cast<int>(std::floor(ratio * n));
    if (train_count < 1 || train_count >= n)
        throw DegenerateDataset("split ratio leaves an empty side");

    EncodedDataset ds;
    ds.split_ratio = ratio;
    ds.split_seed = seed;
    ds.train_indices.assign(order.begin(), order.begin() + train_count);
    ds.test_indices.assign(order.begin() + train_count, order.end());
    std::sort(ds.train_indices.begin(), ds.train_indices.end());
    std::sort(ds.test_indices.begin(), ds.test_indices.end());

    ds.schema = FeatureSchema::make(n_instances, n_servers, n_resources);
    ds.schema.fit(records, ds.train_indices);

    ds.features.resize(n, ds.schema.encoded_width());
    ds.labels.resize(n, n_instances * n_servers);
    ds.snapshot_ids.reserve(static_cast<std::size_t>(n));
    ds.masks.reserve(static_cast<std::size_t>(n));
    ds.migrated_counts.reserve(static_cast<std::size_t>(n));
    ds.placements.reserve(static_cast<std::size_t>(n));
    for (int row = 0; row < n; ++row) {
        const auto& record = records[static_cast<std::size_t>(row)];
        ds.features.row(row) = ds.schema.encode(record.raw_features).cast<float>();
        ds.labels.row(row) = label_row(record.optimal_placement, n_servers);
        ds.snapshot_ids.push_back(record.snapshot_id);
        ds.masks.push_back(record.migration_mask);
        ds.migrated_counts.push_back(record.migrated_count);
        ds.placements.push_back(record.optimal_placement);
    }
    return ds;
}

void write_records_jsonl(const std::string& path, const std::vector<LabeledRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& record : records) {
        json j;
        j["snapshot_id"] = record.snapshot_id;
        j["migration_mask"] = record.migration_mask;
        std::vector<double> features(record.raw_features.data(),
                                     record.raw_features.data() + record.raw_features.size());
        j["features"] = std::move(features);
        std::vector<int> placement(record.optimal_placement.data(),
                                   record.optimal_placement.data() + record.optimal_placement.size());
        j["placement"] = std::move(placement);
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<LabeledRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("missing records file: " + path);
    std::vector<LabeledRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& err) {
            throw SchemaMismatch(path + ":" + std::to_string(line_no) + ": " + err.what());
        }
        try {
            LabeledRecord record;
            record.snapshot_id = j.at("snapshot_id").get<std::int64_t>();
            record.migration_mask = j.at("migration_mask").get<std::uint64_t>();
            const auto features = j.at("features").get<std::vector<double>>();
            record.raw_features = Eigen::Map<const Eigen::VectorXd>(
                features.data(), static_cast<Eigen::Index>(features.size()));
            const auto placement = j.at("placement").get<std::vector<int>>();
            record.optimal_placement = Eigen::Map<const Eigen::VectorXi>(
                placement.data(), static_cast<Eigen::Index>(placement.size()));
            record.migrated_count = std::popcount(record.migration_mask);
            records.push_back(std::move(record));
        } catch (const json::exception& err) {
            throw SchemaMismatch(path + ":" + std::to_string(line_no) + ": " + err.what());
        }
    }
    return records;
}

std::string profile_to_json(const FeasibilityProfile& profile) {
    json j;
    j["version"] = 1;
    json rows = json::array();
    for (const auto& row : profile.per_size)
        rows.push_back(
            {{"migrated", row.migrated}, {"attempts", row.attempts}, {"feasible", row.feasible}});
    j["per_size"] = std::move(rows);
    j["total_attempts"] = profile.total_attempts;
    j["total_feasible"] = profile.total_feasible;
    j["errors"] = profile.errors;
    return j.dump();
}

FeasibilityProfile profile_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        FeasibilityProfile profile;
        for (const auto& row : j.at("per_size"))
            profile.per_size.push_back({row.at("migrated").get<int>(),
                                        row.at("attempts").get<std::int64_t>(),
                                        row.at("feasible").get<std::int64_t>()});
        profile.total_attempts = j.at("total_attempts").get<std::int64_t>();
        profile.total_feasible = j.at("total_feasible").get<std::int64_t>();
        profile.errors = j.at("errors").get<std::int64_t>();
        return profile;
    } catch (const json::exception& err) {
        throw SchemaMismatch(std::string("profile json failure: ") + err.what());
    }
}

void write_encoded_dataset(const std::string& dir, const EncodedDataset& dataset) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "schema.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write schema.json under " + dir);
        out << dataset.schema.to_json() << '\n';
    }
    std::vector<std::string> feature_header;
    for (int c : dataset.schema.kept)
        feature_header.push_back(dataset.schema.columns[static_cast<std::size_t>(c)].name);
    write_csv_matrix((fs::path(dir) / "features.csv").string(), feature_header, dataset.features);

    std::vector<std::string> label_header;
    for (int i = 0; i < dataset.schema.n_instances; ++i)
        for (int s = 0; s < dataset.schema.n_servers; ++s)
            label_header.push_back("y[" + std::to_string(i) + "][" + std::to_string(s) + "]");
    write_csv_matrix((fs::path(dir) / "labels.csv").string(), label_header, dataset.labels);

    json splits;
    splits["version"] = 1;
    splits["seed"] = dataset.split_seed;
    splits["ratio"] = dataset.split_ratio;
    splits["train"] = dataset.train_indices;
    splits["test"] = dataset.test_indices;
    std::ofstream out(fs::path(dir) / "splits.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write splits.json under " + dir);
    out << splits.dump() << '\n';
}

EncodedDataset read_encoded_dataset(const std::string& dir,
                                    const std::vector<LabeledRecord>& records) {
    namespace fs = std::filesystem;
    const auto read_text = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw MissingArtifact("missing dataset file: " + path.string());
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };

    EncodedDataset ds;
    ds.schema = FeatureSchema::from_json(read_text(fs::path(dir) / "schema.json"));
    ds.features = read_csv_matrix((fs::path(dir) / "features.csv").string());
    ds.labels = read_csv_matrix((fs::path(dir) / "labels.csv").string());

    json splits;
    try {
        splits = json::parse(read_text(fs::path(dir) / "splits.json"));
        ds.split_seed = splits.at("seed").get<std::uint64_t>();
        ds.split_ratio = splits.at("ratio").get<double>();
        ds.train_indices = splits.at("train").get<std::vector<int>>();
        ds.test_indices = splits.at("test").get<std::vector<int>>();
    } catch (const json::exception& err) {
        throw SchemaMismatch(std::string("splits json failure: ") + err.what());
    }

    if (ds.features.rows() != static_cast<Eigen::Index>(records.size()) ||
        ds.labels.rows() != ds.features.rows())
        throw SchemaMismatch("dataset row count does not match records");
    if (ds.features.cols() != ds.schema.encoded_width())
        throw SchemaMismatch("feature width does not match schema");
    if (ds.labels.cols() != ds.schema.n_instances * ds.schema.n_servers)
        throw SchemaMismatch("label width does not match schema");
    for (int idx : ds.train_indices)
        if (idx < 0 || idx >= static_cast<int>(records.size()))
            throw SchemaMismatch("train index out of range");
    for (int idx : ds.test_indices)
        if (idx < 0 || idx >= static_cast<int>(records.size()))
            throw SchemaMismatch("test index out of range");

    for (const auto& record : records) {
        ds.snapshot_ids.push_back(record.snapshot_id);
        ds.masks.push_back(record.migration_mask);
        ds.migrated_counts.push_back(record.migrated_count);
        ds.placements.push_back(record.optimal_placement);
    }
    return ds;
}

} // namespace vnfmig::dataset
