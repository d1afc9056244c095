#include "stg3net/graph.hpp"
#include "stg3net/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stg3net {

std::vector<std::vector<Index>> nearest_neighbors(const Matrix& points, Index k) {
    const Index n = points.rows();
    const Index kk = std::min<Index>(k, n - 1);
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
    std::vector<std::pair<double, Index>> cand;
    cand.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        cand.clear();
        for (Index j = 0; j < n; ++j) {
            if (j != i) {
                cand.emplace_back((points.row(i) - points.row(j)).squaredNorm(), j);
            }
        }
        std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
        auto& nn = out[static_cast<std::size_t>(i)];
        nn.reserve(static_cast<std::size_t>(kk));
        for (Index m = 0; m < kk; ++m) {
            nn.push_back(cand[static_cast<std::size_t>(m)].second);
        }
    }
    return out;
}

SparseMatrix knn_adjacency(const Matrix& coords, int k) {
    const Index n = coords.rows();
    if (n < 2) {
        throw DataError("knn_adjacency: need at least 2 spots, got " + std::to_string(n));
    }
    if (k < 1) {
        throw ConfigError("knn_adjacency: k must be >= 1");
    }
    if (!coords.allFinite()) {
        throw DataError("knn_adjacency: non-finite coordinates");
    }
    auto nn = nearest_neighbors(coords, k);
    std::vector<Eigen::Triplet<double>> entries;
    for (Index i = 0; i < n; ++i) {
        for (Index j : nn[static_cast<std::size_t>(i)]) {
            entries.emplace_back(i, j, 1.0);
            entries.emplace_back(j, i, 1.0);
        }
    }
    SparseMatrix a(n, n);
    // Duplicates from mutual selection collapse to 1.
    a.setFromTriplets(entries.begin(), entries.end(), [](double, double) { return 1.0; });
    a.makeCompressed();
    return a;
}

SparseMatrix block_diag(const std::vector<SparseMatrix>& blocks) {
    if (blocks.empty()) {
        throw std::invalid_argument("block_diag: no blocks");
    }
    Index n = 0;
    for (const auto& b : blocks) {
        if (b.rows() != b.cols()) {
            throw std::invalid_argument("block_diag: blocks must be square");
        }
        n += b.rows();
    }
    std::vector<Eigen::Triplet<double>> entries;
    Index offset = 0;
    for (const auto& b : blocks) {
        for (Index r = 0; r < b.outerSize(); ++r) {
            for (SparseMatrix::InnerIterator it(b, r); it; ++it) {
                entries.emplace_back(offset + it.row(), offset + it.col(), it.value());
            }
        }
        offset += b.rows();
    }
    SparseMatrix out(n, n);
    out.setFromTriplets(entries.begin(), entries.end());
    out.makeCompressed();
    return out;
}

NormalizedAdjacency sym_normalize(const SparseMatrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("sym_normalize: matrix must be square");
    }
    const Index n = a.rows();
    SparseMatrix eye(n, n);
    eye.setIdentity();
    SparseMatrix looped = a + eye;

    NormalizedAdjacency out;
    out.degrees = Vector::Zero(n);
    for (Index r = 0; r < looped.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(looped, r); it; ++it) {
            if (it.value() < 0.0) {
                throw std::invalid_argument("sym_normalize: negative weight");
            }
            out.degrees(r) += it.value();
        }
    }
    Vector inv_sqrt = out.degrees.array().rsqrt();
    out.a_norm = looped;
    for (Index r = 0; r < out.a_norm.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(out.a_norm, r); it; ++it) {
            // Multiply in a fixed order so (i, j) and (j, i) round identically.
            const Index lo = std::min(it.row(), it.col()), hi = std::max(it.row(), it.col());
            it.valueRef() = it.value() * inv_sqrt(lo) * inv_sqrt(hi);
        }
    }
    out.a_norm.makeCompressed();
    return out;
}

SpatialGraph build_spatial_graph(const MultiSliceMatrix& data, int k) {
    std::vector<SparseMatrix> blocks;
    for (int s = 0; s < data.n_slices(); ++s) {
        auto rows = data.rows_of(s);
        Matrix coords(static_cast<Index>(rows.size()), 2);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            coords.row(static_cast<Index>(i)) = data.coords.row(rows[i]);
        }
        if (!rows.empty() && rows.front() + static_cast<Index>(rows.size()) - 1 != rows.back()) {
            throw DataError("build_spatial_graph: spots of slice " + std::to_string(s) + " are not contiguous");
        }
        blocks.push_back(knn_adjacency(coords, k));
    }
    SpatialGraph g;
    g.k = k;
    g.adjacency = block_diag(blocks);
    auto norm = sym_normalize(g.adjacency);
    g.a_norm = std::move(norm.a_norm);
    g.degrees = std::move(norm.degrees);
    return g;
}

SparseMatrix row_normalize(const SparseMatrix& a) {
    SparseMatrix out = a;
    for (Index r = 0; r < out.outerSize(); ++r) {
        double total = 0.0;
        for (SparseMatrix::InnerIterator it(out, r); it; ++it) {
            total += it.value();
        }
        if (total > 0.0) {
            for (SparseMatrix::InnerIterator it(out, r); it; ++it) {
                it.valueRef() /= total;
            }
        }
    }
    return out;
}

std::string to_coordinate_list(const SparseMatrix& a) {
    std::string out = "row,col,value\n";
    for (Index r = 0; r < a.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
            out += std::to_string(it.row()) + "," + std::to_string(it.col()) + "," + io::format_double(it.value()) + "\n";
        }
    }
    return out;
}

}
