#ifndef STG3NET_GRAPH_HPP
#define STG3NET_GRAPH_HPP

#include "stg3net/ingest.hpp"
#include "stg3net/types.hpp"

#include <string>
#include <vector>

namespace stg3net {

/**
 * Spot adjacency over all slices. `adjacency` is binary, symmetric and block
 * diagonal by slice with an empty diagonal. `a_norm` is the self-looped,
 * symmetrically normalized operator used by the graph convolutions and
 * `degrees` holds the self-looped degrees.
 */
struct SpatialGraph {
    SparseMatrix adjacency;
    SparseMatrix a_norm;
    Vector degrees;
    int k = 0;
};

/**
 * Brute-force Euclidean k nearest neighbours of every row of `points`,
 * excluding the row itself. Neighbours are sorted by distance, ties by index.
 */
std::vector<std::vector<Index>> nearest_neighbors(const Matrix& points, Index k);

/** Directed KNN symmetrized by union. Requires at least 2 points. */
SparseMatrix knn_adjacency(const Matrix& coords, int k);

SparseMatrix block_diag(const std::vector<SparseMatrix>& blocks);

struct NormalizedAdjacency {
    SparseMatrix a_norm;
    Vector degrees;
};

/** D^{-1/2} (A + I) D^{-1/2}, with D the degrees of A + I. */
NormalizedAdjacency sym_normalize(const SparseMatrix& a);

/** Per-slice KNN graphs joined block-diagonally in slice order. */
SpatialGraph build_spatial_graph(const MultiSliceMatrix& data, int k = 6);

/** Divide each row by its sum; empty rows stay empty. */
SparseMatrix row_normalize(const SparseMatrix& a);

/** "row,col,value" lines, one per stored entry, with a header. */
std::string to_coordinate_list(const SparseMatrix& a);

}

#endif
