#include "vnfmig/pso.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "vnfmig/errors.hpp"
#include "vnfmig/rng.hpp"

namespace vnfmig::pso {

namespace {

constexpr double kPenalty = 1e6;

double guarded(const std::function<double(double)>& objective, double x) {
    const double value = objective(x);
    return std::isfinite(value) ? value : kPenalty;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

void SwarmConfig::validate() const {
    if (particles < 1) throw ConfigError("swarm needs at least one particle");
    if (iterations < 1) throw ConfigError("swarm needs at least one iteration");
    if (!(lower < upper)) throw ConfigError("swarm bounds must satisfy lower < upper");
    if (!(max_velocity > 0.0)) throw ConfigError("max_velocity must be positive");
    if (!(inertia >= 0.0) || !(cognitive >= 0.0) || !(social >= 0.0))
        throw ConfigError("swarm coefficients must be non-negative");
}

SwarmResult minimize(const std::function<double(double)>& objective, const SwarmConfig& config) {
    config.validate();
    Rng rng(config.seed);

    const int n = config.particles;
    std::vector<double> position(static_cast<std::size_t>(n));
    std::vector<double> velocity(static_cast<std::size_t>(n), 0.0);
    std::vector<double> best_position(static_cast<std::size_t>(n));
    std::vector<double> best_value(static_cast<std::size_t>(n));

    SwarmResult result;
    result.best_value = std::numeric_limits<double>::infinity();

    double mean = 0.0;
    for (int p = 0; p < n; ++p) {
        position[static_cast<std::size_t>(p)] = rng.uniform_real(config.lower, config.upper);
        const double value = guarded(objective, position[static_cast<std::size_t>(p)]);
        best_position[static_cast<std::size_t>(p)] = position[static_cast<std::size_t>(p)];
        best_value[static_cast<std::size_t>(p)] = value;
        mean += value;
        result.evals.push_back({1, p, position[static_cast<std::size_t>(p)], value});
        if (value < result.best_value) {
            result.best_value = value;
            result.best_position = position[static_cast<std::size_t>(p)];
        }
    }
    result.evaluations = n;
    result.trace.push_back(
        {1, result.best_position, result.best_value, mean / n, result.evaluations});

    for (int iter = 2; iter <= config.iterations; ++iter) {
        const double leader = result.best_position;
        mean = 0.0;
        for (int p = 0; p < n; ++p) {
            const std::size_t k = static_cast<std::size_t>(p);
            const double r1 = rng.unit();
            const double r2 = rng.unit();
            double v = config.inertia * velocity[k] +
                       config.cognitive * r1 * (best_position[k] - position[k]) +
                       config.social * r2 * (leader - position[k]);
            v = std::clamp(v, -config.max_velocity, config.max_velocity);
            velocity[k] = v;
            position[k] = std::clamp(position[k] + v, config.lower, config.upper);
            const double value = guarded(objective, position[k]);
            mean += value;
            result.evals.push_back({iter, p, position[k], value});
            if (value < best_value[k]) {
                best_value[k] = value;
                best_position[k] = position[k];
            }
        }
        result.evaluations += n;
        for (int p = 0; p < n; ++p) {
            const std::size_t k = static_cast<std::size_t>(p);
            if (best_value[k] < result.best_value) {
                result.best_value = best_value[k];
                result.best_position = best_position[k];
            }
        }
        result.trace.push_back(
            {iter, result.best_position, result.best_value, mean / n, result.evaluations});
    }
    return result;
}

double SwarmResult::best_h() const {
    return std::pow(10.0, best_position);
}

std::string trace_csv(const SwarmResult& result) {
    std::string out = "iteration,particle,h,value\n";
    for (const auto& row : result.evals) {
        out += std::to_string(row.iteration);
        out += ',';
        out += std::to_string(row.particle);
        out += ',';
        out += fmt(std::pow(10.0, row.position));
        out += ',';
        out += fmt(row.value);
        out += '\n';
    }
    return out;
}

void ObjectiveConfig::validate() const {
    model.validate();
    train.validate();
    if (folds < 2) throw ConfigError("cross validation needs at least two folds");
}

double cv_objective(double log10_learning_rate, const Eigen::MatrixXf& features,
                    const Eigen::MatrixXf& labels, const std::vector<int>& rows,
                    const ObjectiveConfig& config) {
    config.validate();
    if (static_cast<int>(rows.size()) < config.folds)
        throw DegenerateDataset("too few rows for the requested fold count");

    mlp::TrainConfig train = config.train;
    train.adam.learning_rate = std::pow(10.0, log10_learning_rate);

    const int n = static_cast<int>(rows.size());
    double total = 0.0;
    for (int fold = 0; fold < config.folds; ++fold) {
        const int begin = static_cast<int>(static_cast<std::int64_t>(n) * fold / config.folds);
        const int end = static_cast<int>(static_cast<std::int64_t>(n) * (fold + 1) / config.folds);
        std::vector<int> val_rows(rows.begin() + begin, rows.begin() + end);
        std::vector<int> fit_rows;
        fit_rows.reserve(static_cast<std::size_t>(n - (end - begin)));
        fit_rows.insert(fit_rows.end(), rows.begin(), rows.begin() + begin);
        fit_rows.insert(fit_rows.end(), rows.begin() + end, rows.end());

        mlp::ModelSpec spec = config.model;
        spec.input_dim = static_cast<int>(features.cols());
        spec.output_dim = static_cast<int>(labels.cols());
        mlp::MlpModel<float> model(spec, derive_seed(train.seed, static_cast<std::uint64_t>(fold)));
        mlp::TrainConfig fold_train = train;
        fold_train.seed = derive_seed(train.seed, 0x1000 + static_cast<std::uint64_t>(fold));
        try {
            model.train(features, labels, fit_rows, fold_train);
        } catch (const NonFiniteLoss&) {
            return 1e6;
        }
        const Eigen::MatrixXf vx = mlp::gather_rows<float>(features, val_rows);
        const Eigen::MatrixXf vy = mlp::gather_rows<float>(labels, val_rows);
        total += static_cast<double>(model.loss_eval(vx, vy));
    }
    return total / config.folds;
}

} // namespace vnfmig::pso
