#include "stg3net/ingest.hpp"
#include "stg3net/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace stg3net {

std::vector<Index> MultiSliceMatrix::rows_of(int s) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < slice_of.size(); ++i) {
        if (slice_of[i] == s) {
            rows.push_back(static_cast<Index>(i));
        }
    }
    return rows;
}

SliceRaw load_slice(const std::string& slice_id, const std::filesystem::path& expression,
                    const std::filesystem::path& coords) {
    if (!std::filesystem::exists(expression)) {
        throw DataError("missing file: " + expression.string());
    }
    if (!std::filesystem::exists(coords)) {
        throw DataError("missing file: " + coords.string());
    }

    SliceRaw slice;
    slice.slice_id = slice_id;

    auto expr = io::read_table(expression);
    if (expr.header.size() < 2) {
        throw DataError(expression.string() + ": expected a barcode column and at least one gene");
    }
    slice.gene_names.assign(expr.header.begin() + 1, expr.header.end());
    std::set<std::string> seen;
    for (const auto& g : slice.gene_names) {
        if (!seen.insert(g).second) {
            throw DataError(expression.string() + ": duplicate gene name '" + g + "'");
        }
    }

    const auto n = static_cast<Index>(expr.rows.size());
    const auto g = static_cast<Index>(slice.gene_names.size());
    if (n < 1) {
        throw DataError(expression.string() + ": no spots");
    }
    slice.counts.resize(n, g);
    for (Index i = 0; i < n; ++i) {
        const auto& row = expr.rows[static_cast<std::size_t>(i)];
        slice.barcodes.push_back(row[0]);
        for (Index j = 0; j < g; ++j) {
            const double v = io::parse_double(row[static_cast<std::size_t>(j) + 1], expression, static_cast<std::size_t>(i) + 1);
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw DataError(expression.string() + ": negative or non-finite count at row " + std::to_string(i + 1));
            }
            slice.counts(i, j) = v;
        }
    }

    auto pos = io::read_table(coords);
    if (pos.header.size() < 3) {
        throw DataError(coords.string() + ": expected columns spot_barcode,x,y");
    }
    if (static_cast<Index>(pos.rows.size()) != n) {
        throw DataError("row mismatch in slice '" + slice_id + "': " + std::to_string(n) + " expression rows vs " +
                        std::to_string(pos.rows.size()) + " coordinate rows");
    }
    slice.coords.resize(n, 2);
    for (Index i = 0; i < n; ++i) {
        const auto& row = pos.rows[static_cast<std::size_t>(i)];
        if (row[0] != slice.barcodes[static_cast<std::size_t>(i)]) {
            throw DataError("barcode order mismatch in slice '" + slice_id + "' at row " + std::to_string(i + 1));
        }
        for (Index c = 0; c < 2; ++c) {
            const double v = io::parse_double(row[static_cast<std::size_t>(c) + 1], coords, static_cast<std::size_t>(i) + 1);
            if (!std::isfinite(v)) {
                throw DataError(coords.string() + ": non-finite coordinate at row " + std::to_string(i + 1));
            }
            slice.coords(i, c) = v;
        }
    }
    return slice;
}

std::vector<SliceRaw> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("missing file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) {
        throw DataError(path.string() + ": manifest must be a JSON array");
    }
    if (doc.empty()) {
        throw DataError("empty manifest: " + path.string());
    }

    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    std::vector<SliceRaw> slices;
    std::set<std::string> ids;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("slice_id") || !entry.contains("expression") || !entry.contains("coords")) {
            throw DataError(path.string() + ": each entry needs slice_id, expression and coords");
        }
        auto id = entry["slice_id"].get<std::string>();
        if (!ids.insert(id).second) {
            throw DataError("duplicate slice_id '" + id + "' in " + path.string());
        }
        slices.push_back(load_slice(id, resolve(entry["expression"].get<std::string>()),
                                    resolve(entry["coords"].get<std::string>())));
    }
    return slices;
}

std::vector<SliceRaw> intersect_genes(const std::vector<SliceRaw>& slices) {
    if (slices.empty()) {
        throw DataError("intersect_genes: no slices");
    }
    std::set<std::string> common(slices[0].gene_names.begin(), slices[0].gene_names.end());
    for (std::size_t s = 1; s < slices.size(); ++s) {
        std::set<std::string> here(slices[s].gene_names.begin(), slices[s].gene_names.end());
        std::set<std::string> next;
        std::set_intersection(common.begin(), common.end(), here.begin(), here.end(), std::inserter(next, next.end()));
        common = std::move(next);
    }
    if (common.empty()) {
        throw DataError("empty gene intersection");
    }

    std::vector<std::string> genes(common.begin(), common.end());
    std::vector<SliceRaw> out;
    out.reserve(slices.size());
    for (const auto& slice : slices) {
        std::map<std::string, Index> column;
        for (std::size_t j = 0; j < slice.gene_names.size(); ++j) {
            column[slice.gene_names[j]] = static_cast<Index>(j);
        }
        SliceRaw r = slice;
        r.gene_names = genes;
        r.counts.resize(slice.counts.rows(), static_cast<Index>(genes.size()));
        for (std::size_t j = 0; j < genes.size(); ++j) {
            r.counts.col(static_cast<Index>(j)) = slice.counts.col(column.at(genes[j]));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SliceRaw> normalize(const std::vector<SliceRaw>& slices) {
    std::vector<double> totals;
    for (const auto& slice : slices) {
        for (Index i = 0; i < slice.counts.rows(); ++i) {
            const double t = slice.counts.row(i).sum();
            if (!(t > 0.0)) {
                throw DataError("zero-count spot: slice '" + slice.slice_id + "' row " + std::to_string(i));
            }
            totals.push_back(t);
        }
    }
    if (totals.empty()) {
        throw DataError("normalize: no spots");
    }

    std::sort(totals.begin(), totals.end());
    const std::size_t m = totals.size();
    const double target = m % 2 ? totals[m / 2] : 0.5 * (totals[m / 2 - 1] + totals[m / 2]);

    std::vector<SliceRaw> out = slices;
    for (auto& slice : out) {
        for (Index i = 0; i < slice.counts.rows(); ++i) {
            const double t = slice.counts.row(i).sum();
            slice.counts.row(i) *= target / t;
        }
        slice.counts = slice.counts.array().log1p().matrix();
    }
    return out;
}

MultiSliceMatrix select_hvg(const std::vector<SliceRaw>& slices, Index n_top) {
    if (slices.empty()) {
        throw DataError("select_hvg: no slices");
    }
    if (n_top < 1) {
        throw ConfigError("select_hvg: number of genes must be >= 1");
    }
    const auto& genes = slices[0].gene_names;
    const auto g = static_cast<Index>(genes.size());
    Index n = 0;
    for (const auto& slice : slices) {
        if (slice.gene_names != genes) {
            throw DataError("select_hvg: slices are not gene-harmonized");
        }
        n += slice.counts.rows();
    }

    Matrix pooled(n, g);
    Index offset = 0;
    for (const auto& slice : slices) {
        pooled.middleRows(offset, slice.counts.rows()) = slice.counts;
        offset += slice.counts.rows();
    }

    RowVector mu = pooled.colwise().mean();
    RowVector var = (pooled.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(n);

    std::vector<Index> order(static_cast<std::size_t>(g));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return var(a) > var(b); });
    order.resize(static_cast<std::size_t>(std::min(n_top, g)));

    MultiSliceMatrix out;
    out.X.resize(n, static_cast<Index>(order.size()));
    for (std::size_t j = 0; j < order.size(); ++j) {
        out.X.col(static_cast<Index>(j)) = pooled.col(order[j]);
        out.gene_names.push_back(genes[static_cast<std::size_t>(order[j])]);
    }
    out.coords.resize(n, 2);
    offset = 0;
    for (std::size_t s = 0; s < slices.size(); ++s) {
        const auto& slice = slices[s];
        out.coords.middleRows(offset, slice.counts.rows()) = slice.coords;
        for (Index i = 0; i < slice.counts.rows(); ++i) {
            out.slice_of.push_back(static_cast<int>(s));
            out.barcodes.push_back(i < static_cast<Index>(slice.barcodes.size())
                                       ? slice.barcodes[static_cast<std::size_t>(i)]
                                       : slice.slice_id + "_" + std::to_string(i));
        }
        out.slice_ids.push_back(slice.slice_id);
        offset += slice.counts.rows();
    }
    if (!out.X.allFinite()) {
        throw NumericError("select_hvg: non-finite expression values");
    }
    return out;
}

MultiSliceMatrix preprocess(const std::vector<SliceRaw>& slices, Index n_top) {
    return select_hvg(normalize(intersect_genes(slices)), n_top);
}

}
