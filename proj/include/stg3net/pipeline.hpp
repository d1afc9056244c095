#ifndef STG3NET_PIPELINE_HPP
#define STG3NET_PIPELINE_HPP

#include "stg3net/config.hpp"
#include "stg3net/metrics.hpp"
#include "stg3net/train.hpp"

#include <optional>

namespace stg3net {

struct PipelineResult {
    TrainResult trained;
    Labels labels;
    metrics::MetricsReport report;
};

/**
 * Domain labels for every spot of `data`, looked up by barcode in a truth CSV
 * whose first column is the barcode and last column the domain.
 */
Labels load_truth(const std::filesystem::path& path, const MultiSliceMatrix& data);

/** train -> infer -> k-means on the latent -> metrics. */
PipelineResult run_pipeline(const MultiSliceMatrix& data, const SpatialGraph& graph, const std::optional<Labels>& truth,
                            const RunConfig& config, bool autocorrelation = false);

}

#endif
