#include "stg3net/pipeline.hpp"
#include "stg3net/io.hpp"

#include <unordered_map>

namespace stg3net {

Labels load_truth(const std::filesystem::path& path, const MultiSliceMatrix& data) {
    auto table = io::read_table(path);
    if (table.header.size() < 2) {
        throw DataError(path.string() + ": expected a barcode column and a domain column");
    }
    std::unordered_map<std::string, int> domain;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        domain[table.rows[i].front()] = io::parse_int(table.rows[i].back(), path, i + 1);
    }
    Labels out;
    out.reserve(data.barcodes.size());
    for (const auto& bc : data.barcodes) {
        auto it = domain.find(bc);
        if (it == domain.end()) {
            throw DataError(path.string() + ": no truth label for spot '" + bc + "'");
        }
        out.push_back(it->second);
    }
    return out;
}

PipelineResult run_pipeline(const MultiSliceMatrix& data, const SpatialGraph& graph, const std::optional<Labels>& truth,
                            const RunConfig& config, bool autocorrelation) {
    PipelineResult r;
    r.trained = train(data, graph, config.train, config.ablation);
    r.labels = metrics::cluster_latent(r.trained.H, config.domains, derive_seed(config.seed, {0x636c}));

    metrics::EvaluationInput in;
    in.predicted = r.labels;
    in.truth = truth;
    in.coords = data.coords;
    in.slice_of = data.slice_of;
    in.embedding = r.trained.H;
    in.lisi_k = config.lisi_k;
    in.pas_k = config.pas_k;
    if (autocorrelation) {
        in.denoised = r.trained.Z;
        in.spatial_weights = row_normalize(graph.adjacency);
    }
    r.report = metrics::evaluate(in);
    return r;
}

}
