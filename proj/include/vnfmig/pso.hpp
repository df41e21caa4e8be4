#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vnfmig/mlp.hpp"

namespace vnfmig::pso {

/// One-dimensional swarm over the base-10 logarithm of the learning rate.
struct SwarmConfig {
    int particles = 10;
    int iterations = 50;
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    double lower = -8.0;
    double upper = -1.0;
    double max_velocity = 3.5; // half the search range
    std::uint64_t seed = 7;

    void validate() const;
};

struct EvalTrace {
    int iteration = 0; // 1-based; iteration 1 scores the initial positions
    int particle = 0;
    double position = 0.0; // log10(h)
    double value = 0.0;
};

struct IterationTrace {
    int iteration = 0;
    double best_position = 0.0;
    double best_value = 0.0;
    double mean_value = 0.0;
    int evaluations = 0; // cumulative
};

struct SwarmResult {
    double best_position = 0.0;
    double best_value = 0.0;
    int evaluations = 0;
    std::vector<EvalTrace> evals;
    std::vector<IterationTrace> trace;

    double best_h() const;
};

/// Synchronous global-best PSO; non-finite objective values count as 1e6.
SwarmResult minimize(const std::function<double(double)>& objective, const SwarmConfig& config);

/// One row per evaluation: iteration, particle, h, value.
std::string trace_csv(const SwarmResult& result);

/// Cross-validated training loss of a candidate learning rate.
struct ObjectiveConfig {
    mlp::ModelSpec model;
    mlp::TrainConfig train; // learning rate overridden per candidate
    int folds = 3;

    void validate() const;
};

/// Mean validation BCE over contiguous folds of the given rows; a training
/// run that raises NonFiniteLoss scores the 1e6 penalty.
double cv_objective(double log10_learning_rate, const Eigen::MatrixXf& features,
                    const Eigen::MatrixXf& labels, const std::vector<int>& rows,
                    const ObjectiveConfig& config);

} // namespace vnfmig::pso
