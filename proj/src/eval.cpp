#include "vnfmig/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "vnfmig/errors.hpp"
#include "vnfmig/optimizer.hpp"
#include "vnfmig/rng.hpp"

namespace vnfmig::eval {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::unordered_map<std::int64_t, const NetworkSnapshot*> index_snapshots(
    const std::vector<NetworkSnapshot>& snapshots) {
    std::unordered_map<std::int64_t, const NetworkSnapshot*> map;
    map.reserve(snapshots.size());
    for (const auto& snapshot : snapshots) map[snapshot.snapshot_id] = &snapshot;
    return map;
}

const NetworkSnapshot& snapshot_for(
    const std::unordered_map<std::int64_t, const NetworkSnapshot*>& map, std::int64_t id) {
    const auto it = map.find(id);
    if (it == map.end())
        throw MissingArtifact("snapshot " + std::to_string(id) + " absent from corpus");
    return *it->second;
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

Eigen::MatrixXf predict_probs(const mlp::MlpModel<float>& model, const Eigen::MatrixXf& features,
                              int chunk) {
    if (chunk < 1) throw ConfigError("prediction chunk must be positive");
    Eigen::MatrixXf probs(features.rows(), model.spec().output_dim);
    for (Eigen::Index start = 0; start < features.rows(); start += chunk) {
        const Eigen::Index rows = std::min<Eigen::Index>(chunk, features.rows() - start);
        probs.middleRows(start, rows) = model.predict(features.middleRows(start, rows));
    }
    return probs;
}

double binary_accuracy(const Eigen::MatrixXf& probs, const Eigen::MatrixXf& labels,
                       float threshold) {
    if (probs.rows() != labels.rows() || probs.cols() != labels.cols())
        throw SchemaMismatch("probability and label shapes differ");
    if (probs.size() == 0) throw SchemaMismatch("empty matrices in binary accuracy");
    const auto predicted = probs.array() >= threshold;
    const auto actual = labels.array() >= 0.5f;
    const std::int64_t hits = (predicted == actual).count();
    return static_cast<double>(hits) / static_cast<double>(probs.size());
}

std::vector<BucketAccuracy> accuracy_by_migrated(const Eigen::MatrixXf& probs,
                                                 const std::vector<Eigen::VectorXi>& placements,
                                                 const std::vector<int>& migrated_counts,
                                                 const std::vector<int>& rows, int n_instances,
                                                 int n_servers) {
    struct Tally {
        std::int64_t records = 0;
        std::int64_t instance_hits = 0;
        std::int64_t complete_hits = 0;
    };
    std::unordered_map<int, Tally> tallies;
    for (int r : rows) {
        if (r < 0 || r >= static_cast<int>(placements.size()))
            throw SchemaMismatch("accuracy row index out of range");
        const Eigen::VectorXf row = probs.row(r).transpose();
        const Eigen::VectorXi predicted = mlp::decode_placement(row, n_instances, n_servers);
        const Eigen::VectorXi& label = placements[static_cast<std::size_t>(r)];
        Tally& tally = tallies[migrated_counts[static_cast<std::size_t>(r)]];
        ++tally.records;
        int hits = 0;
        for (int i = 0; i < n_instances; ++i)
            if (predicted(i) == label(i)) ++hits;
        tally.instance_hits += hits;
        if (hits == n_instances) ++tally.complete_hits;
    }
    std::vector<int> keys;
    keys.reserve(tallies.size());
    for (const auto& [k, _] : tallies) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::vector<BucketAccuracy> out;
    for (int k : keys) {
        const Tally& tally = tallies[k];
        BucketAccuracy bucket;
        bucket.migrated = k;
        bucket.records = tally.records;
        bucket.categorical = static_cast<double>(tally.instance_hits) /
                             static_cast<double>(tally.records * n_instances);
        bucket.complete =
            static_cast<double>(tally.complete_hits) / static_cast<double>(tally.records);
        out.push_back(bucket);
    }
    return out;
}

AccuracyReport accuracy_report(const mlp::MlpModel<float>& model,
                               const dataset::EncodedDataset& ds) {
    AccuracyReport report;
    const Eigen::MatrixXf train_probs =
        predict_probs(model, mlp::gather_rows<float>(ds.features, ds.train_indices));
    const Eigen::MatrixXf test_probs =
        predict_probs(model, mlp::gather_rows<float>(ds.features, ds.test_indices));
    const Eigen::MatrixXf train_labels = mlp::gather_rows<float>(ds.labels, ds.train_indices);
    const Eigen::MatrixXf test_labels = mlp::gather_rows<float>(ds.labels, ds.test_indices);
    report.binary_train = binary_accuracy(train_probs, train_labels);
    report.binary_test = binary_accuracy(test_probs, test_labels);
    report.baseline_binary =
        binary_accuracy(Eigen::MatrixXf::Zero(test_labels.rows(), test_labels.cols()), test_labels);

    const int n_servers = ds.schema.n_servers;
    const int n_instances = ds.schema.n_instances;
    Eigen::MatrixXf probs = Eigen::MatrixXf::Zero(ds.features.rows(), ds.labels.cols());
    for (std::size_t k = 0; k < ds.test_indices.size(); ++k)
        probs.row(ds.test_indices[k]) = test_probs.row(static_cast<Eigen::Index>(k));
    report.by_migrated = accuracy_by_migrated(probs, ds.placements, ds.migrated_counts,
                                              ds.test_indices, n_instances, n_servers);
    std::int64_t records = 0;
    double instance_hits = 0.0;
    double complete_hits = 0.0;
    for (const auto& bucket : report.by_migrated) {
        records += bucket.records;
        instance_hits += bucket.categorical * static_cast<double>(bucket.records);
        complete_hits += bucket.complete * static_cast<double>(bucket.records);
    }
    if (records > 0) {
        report.categorical = instance_hits / static_cast<double>(records);
        report.complete = complete_hits / static_cast<double>(records);
    }
    return report;
}

std::string accuracy_csv(const std::vector<BucketAccuracy>& buckets) {
    std::string out = "migrated,records,categorical_accuracy,complete_accuracy\n";
    for (const auto& bucket : buckets) {
        out += std::to_string(bucket.migrated);
        out += ',';
        out += std::to_string(bucket.records);
        out += ',';
        out += fmt(bucket.categorical);
        out += ',';
        out += fmt(bucket.complete);
        out += '\n';
    }
    return out;
}

std::vector<std::vector<int>> computational_paths(const NetworkSnapshot& snapshot) {
    const int n_types = static_cast<int>(snapshot.chain_type_counts.size());
    std::vector<std::vector<int>> by_type(static_cast<std::size_t>(n_types));
    for (int i = 0; i < snapshot.n_instances(); ++i)
        by_type[static_cast<std::size_t>(snapshot.instances[static_cast<std::size_t>(i)].type_index)]
            .push_back(i);
    for (const auto& members : by_type)
        if (members.empty()) throw SchemaMismatch("a chain type has no instances");

    std::vector<std::vector<int>> paths;
    std::vector<int> current(static_cast<std::size_t>(n_types));
    const std::function<void(int)> extend = [&](int type) {
        if (type == n_types) {
            paths.push_back(current);
            return;
        }
        for (int instance : by_type[static_cast<std::size_t>(type)]) {
            current[static_cast<std::size_t>(type)] = instance;
            extend(type + 1);
        }
    };
    extend(0);
    return paths;
}

Eigen::VectorXd path_delays(const NetworkSnapshot& snapshot, const Eigen::VectorXi& placement) {
    if (placement.size() != snapshot.n_instances())
        throw SchemaMismatch("placement width does not match snapshot");
    const auto paths = computational_paths(snapshot);
    Eigen::VectorXd delays(static_cast<Eigen::Index>(paths.size()));
    for (std::size_t p = 0; p < paths.size(); ++p) {
        double total = 0.0;
        for (std::size_t hop = 0; hop + 1 < paths[p].size(); ++hop)
            total += snapshot.inter_server_delay(placement(paths[p][hop]),
                                                 placement(paths[p][hop + 1]));
        delays(static_cast<Eigen::Index>(p)) = total;
    }
    return delays;
}

double mean_path_delay(const NetworkSnapshot& snapshot, const Eigen::VectorXi& placement) {
    return path_delays(snapshot, placement).mean();
}

DelayReport delay_difference_report(const std::vector<NetworkSnapshot>& snapshots,
                                    const dataset::EncodedDataset& ds,
                                    const Eigen::MatrixXf& probs, const std::vector<int>& rows,
                                    int histogram_bins) {
    if (histogram_bins < 1) throw ConfigError("histogram needs at least one bin");
    const auto map = index_snapshots(snapshots);
    DelayReport report;
    report.rows.reserve(rows.size());
    double optimal_total = 0.0;
    for (int r : rows) {
        const auto& snapshot = snapshot_for(map, ds.snapshot_ids[static_cast<std::size_t>(r)]);
        const Eigen::VectorXf row = probs.row(r).transpose();
        const Eigen::VectorXi predicted =
            mlp::decode_placement(row, snapshot.n_instances(), snapshot.n_servers());
        const Eigen::VectorXi& optimal = ds.placements[static_cast<std::size_t>(r)];

        DelayDiffRow out;
        out.snapshot_id = snapshot.snapshot_id;
        out.migration_mask = ds.masks[static_cast<std::size_t>(r)];
        out.migrated = ds.migrated_counts[static_cast<std::size_t>(r)];
        const Eigen::VectorXd opt = path_delays(snapshot, optimal);
        const Eigen::VectorXd pred = path_delays(snapshot, predicted);
        out.optimal_ms.assign(opt.data(), opt.data() + opt.size());
        out.predicted_ms.assign(pred.data(), pred.data() + pred.size());
        out.diff_ms.resize(out.optimal_ms.size());
        for (std::size_t p = 0; p < out.diff_ms.size(); ++p) {
            out.diff_ms[p] = out.optimal_ms[p] - out.predicted_ms[p];
            report.samples.push_back(out.diff_ms[p]);
            optimal_total += out.optimal_ms[p];
        }
        out.predicted_feasible =
            optimizer::check_feasible(snapshot, predicted, out.migration_mask).ok;
        out.exact_match = predicted == optimal;
        if (out.exact_match) ++report.exact_matches;
        if (out.predicted_feasible) ++report.feasible_predictions;
        report.rows.push_back(std::move(out));
    }
    if (!report.samples.empty()) {
        const double n = static_cast<double>(report.samples.size());
        double total = 0.0;
        double abs_total = 0.0;
        for (double v : report.samples) {
            total += v;
            abs_total += std::fabs(v);
        }
        report.mean_diff_ms = total / n;
        report.mean_abs_diff_ms = abs_total / n;
        report.mean_optimal_ms = optimal_total / n;
        double sq = 0.0;
        for (double v : report.samples) sq += (v - report.mean_diff_ms) * (v - report.mean_diff_ms);
        report.std_diff_ms = std::sqrt(sq / n);

        const auto [lo_it, hi_it] = std::minmax_element(report.samples.begin(), report.samples.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        if (lo == hi) {
            report.histogram.push_back(
                {lo, hi, static_cast<std::int64_t>(report.samples.size())});
        } else {
            const double width = (hi - lo) / histogram_bins;
            report.histogram.resize(static_cast<std::size_t>(histogram_bins));
            for (int b = 0; b < histogram_bins; ++b) {
                report.histogram[static_cast<std::size_t>(b)].lo = lo + b * width;
                report.histogram[static_cast<std::size_t>(b)].hi = lo + (b + 1) * width;
            }
            for (double v : report.samples) {
                int b = static_cast<int>((v - lo) / width);
                b = std::clamp(b, 0, histogram_bins - 1);
                ++report.histogram[static_cast<std::size_t>(b)].count;
            }
        }
    }
    if (!report.rows.empty())
        report.feasible_rate = static_cast<double>(report.feasible_predictions) /
                               static_cast<double>(report.rows.size());
    return report;
}

std::string delay_histogram_csv(const DelayReport& report) {
    std::string out = "bin_lo_ms,bin_hi_ms,count\n";
    for (const auto& bin : report.histogram) {
        out += fmt(bin.lo);
        out += ',';
        out += fmt(bin.hi);
        out += ',';
        out += std::to_string(bin.count);
        out += '\n';
    }
    return out;
}

std::vector<DependentPairRow> dependent_pair_rows(const std::vector<NetworkSnapshot>& snapshots,
                                                  const dataset::EncodedDataset& ds,
                                                  const Eigen::MatrixXf& probs,
                                                  const std::vector<int>& rows) {
    const auto map = index_snapshots(snapshots);
    std::vector<DependentPairRow> out;
    for (int r : rows) {
        const auto& snapshot = snapshot_for(map, ds.snapshot_ids[static_cast<std::size_t>(r)]);
        const Eigen::VectorXf row = probs.row(r).transpose();
        const Eigen::VectorXi predicted =
            mlp::decode_placement(row, snapshot.n_instances(), snapshot.n_servers());
        const Eigen::VectorXi& optimal = ds.placements[static_cast<std::size_t>(r)];
        if (predicted == optimal) continue;
        for (int i = 0; i < snapshot.n_instances(); ++i) {
            for (int j : snapshot.instances[static_cast<std::size_t>(i)].dependents) {
                if (j <= i) continue;
                DependentPairRow pair;
                pair.snapshot_id = snapshot.snapshot_id;
                pair.migration_mask = ds.masks[static_cast<std::size_t>(r)];
                pair.instance_a = i;
                pair.instance_b = j;
                pair.predicted_delay_ms = snapshot.inter_server_delay(predicted(i), predicted(j));
                pair.optimal_delay_ms = snapshot.inter_server_delay(optimal(i), optimal(j));
                out.push_back(pair);
            }
        }
    }
    return out;
}

std::string dependent_pairs_csv(const std::vector<DependentPairRow>& rows) {
    std::string out =
        "snapshot_id,migration_mask,instance_a,instance_b,predicted_delay_ms,optimal_delay_ms\n";
    for (const auto& row : rows) {
        out += std::to_string(row.snapshot_id);
        out += ',';
        out += std::to_string(row.migration_mask);
        out += ',';
        out += std::to_string(row.instance_a);
        out += ',';
        out += std::to_string(row.instance_b);
        out += ',';
        out += fmt(row.predicted_delay_ms);
        out += ',';
        out += fmt(row.optimal_delay_ms);
        out += '\n';
    }
    return out;
}

RuntimeReport runtime_benchmark(const std::vector<NetworkSnapshot>& snapshots,
                                const mlp::MlpModel<float>& model,
                                const dataset::FeatureSchema& schema,
                                const std::vector<int>& request_counts, int repeats,
                                std::uint64_t seed) {
    if (snapshots.empty()) throw MissingArtifact("runtime benchmark needs a snapshot corpus");
    if (repeats < 1) throw ConfigError("benchmark repeats must be positive");
    if (request_counts.empty()) throw ConfigError("benchmark needs at least one request count");
    int max_count = 0;
    for (std::size_t k = 0; k < request_counts.size(); ++k) {
        if (request_counts[k] < 1) throw ConfigError("benchmark request counts must be positive");
        if (k > 0 && request_counts[k] <= request_counts[k - 1])
            throw ConfigError("benchmark request counts must be strictly increasing");
        max_count = std::max(max_count, request_counts[k]);
    }

    struct Request {
        const NetworkSnapshot* snapshot;
        std::uint64_t mask;
    };
    Rng rng(seed);
    std::vector<Request> requests;
    requests.reserve(static_cast<std::size_t>(max_count));
    for (int k = 0; k < max_count; ++k) {
        const auto& snapshot = snapshots[static_cast<std::size_t>(rng.below(snapshots.size()))];
        const std::uint64_t subsets = (std::uint64_t{1} << snapshot.n_instances()) - 1;
        requests.push_back({&snapshot, 1 + rng.below(subsets)});
    }

    using clock = std::chrono::steady_clock;
    double sink = 0.0;
    RuntimeReport report;
    report.machine = machine_descriptor();
    for (int count : request_counts) {
        std::vector<double> solver_runs;
        std::vector<double> surrogate_runs;
        for (int rep = 0; rep < repeats; ++rep) {
            const auto t0 = clock::now();
            for (int k = 0; k < count; ++k) {
                const auto& req = requests[static_cast<std::size_t>(k)];
                const auto result = optimizer::solve(*req.snapshot, req.mask);
                if (result.optimal) sink += result.solution.total_downtime_ms;
            }
            const auto t1 = clock::now();
            for (int k = 0; k < count; ++k) {
                const auto& req = requests[static_cast<std::size_t>(k)];
                const Eigen::VectorXd raw = dataset::raw_features(*req.snapshot, req.mask);
                const Eigen::VectorXd encoded = schema.encode(raw);
                Eigen::MatrixXf input(1, encoded.size());
                input.row(0) = encoded.cast<float>().transpose();
                const Eigen::MatrixXf probs = model.predict(input);
                const Eigen::VectorXf row = probs.row(0).transpose();
                const Eigen::VectorXi placement = mlp::decode_placement(
                    row, req.snapshot->n_instances(), req.snapshot->n_servers());
                sink += static_cast<double>(placement(0));
            }
            const auto t2 = clock::now();
            solver_runs.push_back(std::chrono::duration<double>(t1 - t0).count());
            surrogate_runs.push_back(std::chrono::duration<double>(t2 - t1).count());
        }
        report.rows.push_back({count, median_of(solver_runs), median_of(surrogate_runs)});
    }
    volatile double keep = sink;
    (void)keep;
    return report;
}

std::string runtime_csv(const RuntimeReport& report) {
    std::string out = "requests,solver_seconds,surrogate_seconds,speedup\n";
    for (const auto& row : report.rows) {
        out += std::to_string(row.requests);
        out += ',';
        out += fmt(row.solver_seconds);
        out += ',';
        out += fmt(row.surrogate_seconds);
        out += ',';
        out += fmt(row.surrogate_seconds > 0.0 ? row.solver_seconds / row.surrogate_seconds : 0.0);
        out += '\n';
    }
    return out;
}

std::string feasibility_csv(const dataset::FeasibilityProfile& profile) {
    std::string out = "migrated,attempts,feasible,success_rate\n";
    for (const auto& row : profile.per_size) {
        out += std::to_string(row.migrated);
        out += ',';
        out += std::to_string(row.attempts);
        out += ',';
        out += std::to_string(row.feasible);
        out += ',';
        out += fmt(row.attempts > 0
                       ? static_cast<double>(row.feasible) / static_cast<double>(row.attempts)
                       : 0.0);
        out += '\n';
    }
    return out;
}

std::string loss_curve_csv(const mlp::TrainingHistory& history) {
    std::string out = history.has_validation
                          ? "epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds\n"
                          : "epoch,train_loss,train_accuracy,seconds\n";
    for (const auto& stats : history.epochs) {
        out += std::to_string(stats.epoch);
        out += ',';
        out += fmt(stats.loss);
        out += ',';
        out += fmt(stats.accuracy);
        if (history.has_validation) {
            out += ',';
            out += fmt(stats.val_loss);
            out += ',';
            out += fmt(stats.val_accuracy);
        }
        out += ',';
        out += fmt(stats.seconds);
        out += '\n';
    }
    return out;
}

std::string machine_descriptor() {
    std::string cpu = "unknown cpu";
    std::ifstream info("/proc/cpuinfo");
    std::string line;
    while (std::getline(info, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                cpu = line.substr(colon + 1);
                const auto first = cpu.find_first_not_of(' ');
                if (first != std::string::npos) cpu = cpu.substr(first);
            }
            break;
        }
    }
    const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    return cpu + " (" + std::to_string(threads) + " hardware threads)";
}

} // namespace vnfmig::eval
