#ifndef STG3NET_METRICS_HPP
#define STG3NET_METRICS_HPP

#include "stg3net/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace stg3net::metrics {

/** Pair-counting adjusted Rand index. */
double ari(const Labels& a, const Labels& b);

/** Mutual information normalized by the arithmetic mean of the two entropies. */
double nmi(const Labels& a, const Labels& b);

/** 1 - H(truth | pred) / H(truth); 1 when H(truth) = 0. */
double homogeneity(const Labels& truth, const Labels& pred);

/** 1 - H(pred | truth) / H(pred); 1 when H(pred) = 0. */
double completeness(const Labels& truth, const Labels& pred);

/** Mean of NMI, homogeneity and completeness. */
double accuracy(double nmi, double hom, double com);

/**
 * Spatial chaos: with each coordinate axis z-scored, the spot-weighted mean
 * over clusters of the mean within-cluster 1-NN distance. Singleton clusters
 * are skipped. Lower means more spatially continuous domains.
 */
double chaos(const Matrix& coords, const Labels& labels);

/**
 * Fraction of spots whose label disagrees with more than half of their k
 * spatial nearest neighbours (>= 6 of 10 by default).
 */
double pas(const Matrix& coords, const Labels& labels, Index k = 10);

/** Mean of CHAOS and PAS. */
double consistency(double chaos, double pas);

/** Inverse Simpson index of the label mix among each spot's k nearest neighbours. */
Vector lisi(const Matrix& embedding, const Labels& labels, Index k = 30);

double median(std::vector<double> values);
double median(const Vector& values);

/**
 * F1 of batch mixing against domain separation:
 * batch_norm = (median(lisi_batch) - 1) / (n_batches - 1),
 * domain_norm = (median(lisi_domain) - 1) / (n_domains - 1), both clamped to [0, 1].
 */
double f1_lisi(const Vector& lisi_batch, const Vector& lisi_domain, int n_batches, int n_domains);

/** The F1 combination of already normalized scores; 0 when both terms vanish. */
double f1_from_norms(double domain_norm, double batch_norm);

double morans_i(const Vector& x, const SparseMatrix& weights);
double gearys_c(const Vector& x, const SparseMatrix& weights);

/** Seeded k-means on the latent embedding. */
Labels cluster_latent(const Matrix& h, int n_domains, std::uint64_t seed);

/** Projection onto the top principal components of the centered rows. */
Matrix pca(const Matrix& x, Index n_components);

int n_distinct(const Labels& labels);

/**
 * Every reported scalar. Unavailable values are NaN and serialize as null.
 */
struct MetricsReport {
    double ari = std::nan("");
    double nmi = std::nan("");
    double hom = std::nan("");
    double com = std::nan("");
    double accuracy = std::nan("");
    double chaos = std::nan("");
    double pas = std::nan("");
    double consistency = std::nan("");
    double lisi_batch_median = std::nan("");
    double lisi_domain_median = std::nan("");
    double f1_lisi = std::nan("");
    std::vector<double> morans_i;
    std::vector<double> gearys_c;

    /** Fixed key order; identical inputs give byte-identical output. */
    std::string to_json() const;
};

struct EvaluationInput {
    Labels predicted;
    std::optional<Labels> truth;
    Matrix coords;
    Labels slice_of;
    Matrix embedding;
    /** Denoised expression and spatial weights for Moran's I / Geary's C; optional. */
    std::optional<Matrix> denoised;
    std::optional<SparseMatrix> spatial_weights;
    Index lisi_k = 30;
    Index pas_k = 10;
};

/**
 * Clustering scores against `truth` (when given), CHAOS and PAS per slice
 * averaged over slices, LISI on the embedding with slice labels and with
 * domain labels (truth if present, else the predicted clusters).
 */
MetricsReport evaluate(const EvaluationInput& input);

}

#endif
