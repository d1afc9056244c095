#ifndef STG3NET_LOSSES_HPP
#define STG3NET_LOSSES_HPP

#include "stg3net/autodiff.hpp"
#include "stg3net/g2n.hpp"

#include <vector>

namespace stg3net {

struct LossWeights {
    double lambda = 0.5;
    double gamma = 2.0;
    double tau = 1.0;

    void validate() const;
};

inline constexpr double kCosineEps = 1e-12;
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kContrastiveTemperature = 0.5;

/** Row-wise cosine similarity as an N x 1 column; norms are floored at `eps`. */
ad::Var row_cosine(ad::Var a, ad::Var b, double eps = kCosineEps);

/** Mean over masked rows of (1 - cos(x_i, z_i))^gamma. */
ad::Var sce_loss(ad::Var x, ad::Var z, const std::vector<Index>& masked, double gamma = 2.0);

/** Mean squared error over the entries of the masked rows. */
ad::Var mse_loss(ad::Var x, ad::Var z, const std::vector<Index>& masked);

/** -mean over masked rows of log P[i, slice_of[i]], probabilities floored at 1e-12. */
ad::Var dis_loss(ad::Var p, const Labels& slice_of, const std::vector<Index>& masked);

/**
 * Mean hinge max(|h_a - h_p| - |h_a - h_n| + tau, 0). An empty set yields a
 * constant zero and a warning.
 */
ad::Var triplet_loss(ad::Var h, const TripletSet& triplets, double tau);

/**
 * InfoNCE over each (anchor, positive, negative) with cosine logits at the
 * given temperature. An empty set yields a constant zero.
 */
ad::Var contrastive_loss(ad::Var h, const TripletSet& triplets, double temperature = kContrastiveTemperature);

/** sce - lambda * dis + (1 - lambda) * tri. */
double total_loss(double sce, double dis, double tri, double lambda);
ad::Var total_loss(ad::Var sce, ad::Var dis, ad::Var tri, double lambda);

}

#endif
