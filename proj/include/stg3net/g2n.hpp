#ifndef STG3NET_G2N_HPP
#define STG3NET_G2N_HPP

#include "stg3net/types.hpp"

#include <array>
#include <utility>
#include <vector>

namespace stg3net {

/**
 * Anchor / positive / negative spot indices. Positives sit on another slice
 * in the anchor's cluster, negatives on the anchor's slice in another cluster.
 */
struct TripletSet {
    std::vector<std::array<Index, 3>> triples;
    double tau = 1.0;

    std::size_t size() const { return triples.size(); }
    bool empty() const { return triples.empty(); }
};

struct G2NConfig {
    int kg = 20;
    int kc = 4;
    int n_pos = 10;
    std::uint64_t seed = 0;
    double tau = 1.0;

    /** Throws ConfigError unless kg >= 1, kc >= 2 and n_pos is even and >= 2. */
    void validate() const;
};

/**
 * Counts candidate-retrieval passes: one per anchor slice for G2N, one per
 * unordered slice pair for MNN.
 */
struct PassCounter {
    std::size_t g2n_passes = 0;
    std::size_t mnn_passes = 0;
};

struct KMeansOptions {
    int max_iterations = 100;
    int restarts = 10;
};

/**
 * Lloyd's algorithm from k-means++ seeds; the restart with the lowest inertia
 * wins. Empty clusters take the point farthest from its centroid. Labels are
 * renumbered by first appearance.
 */
Labels kmeans(const Matrix& points, int k, std::uint64_t seed, KMeansOptions options = {});

/** Sum of squared distances from each point to its cluster mean. */
double kmeans_inertia(const Matrix& points, const Labels& labels);

/** Rows scaled to unit length; zero rows stay zero. */
Matrix unit_rows(const Matrix& m);

/**
 * Global-nearest-neighbour anchor pairs. For each anchor, candidates are the
 * top-kg cross-slice spots by cosine similarity, kept only if they share the
 * anchor's k-means cluster; up to n_pos/2 are sampled and each is matched
 * with a same-slice spot from a different cluster.
 *
 * `cluster_labels`, when non-null, receives the k-means labels used.
 */
TripletSet select_g2n_pairs(const Matrix& h, const Labels& slice_of, const G2NConfig& config,
                            PassCounter* counter = nullptr, Labels* cluster_labels = nullptr);

/** Mutual top-k cosine neighbours for every unordered slice pair. */
std::vector<std::pair<Index, Index>> select_mnn_pairs(const Matrix& h, const Labels& slice_of, int k,
                                                      PassCounter* counter = nullptr);

}

#endif
