#pragma once

#include <stdexcept>
#include <string>

namespace vnfmig {

/// Invalid or inconsistent configuration; the CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A required upstream artifact is missing or stale; CLI exit code 2.
struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Snapshot generation exhausted its resampling budget.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The greedy initial placement found no feasible server for some instance.
struct NoFeasiblePlacement : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The brute-force oracle refused a search space above its guard.
struct SearchSpaceTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Too few rows to split, or an empty split.
struct DegenerateDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training loss became NaN or infinite.
struct NonFiniteLoss : std::runtime_error {
    NonFiniteLoss(const std::string& what, int epoch_, int batch_)
        : std::runtime_error(what), epoch(epoch_), batch(batch_) {}
    int epoch = -1;
    int batch = -1;
};

/// A persisted artifact does not match the schema the code expects.
struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace vnfmig
