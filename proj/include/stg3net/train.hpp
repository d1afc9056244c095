#ifndef STG3NET_TRAIN_HPP
#define STG3NET_TRAIN_HPP

#include "stg3net/g2n.hpp"
#include "stg3net/graph.hpp"
#include "stg3net/ingest.hpp"
#include "stg3net/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace stg3net {

/**
 * Which objective terms are active:
 *  - full:      sce - lambda * dis + (1 - lambda) * pair
 *  - only_mask: sce
 *  - mask_gan:  sce - lambda * dis
 *  - mask_g2n:  sce + (1 - lambda) * pair
 */
enum class Variant { full, only_mask, mask_gan, mask_g2n };
enum class ReconLoss { sce, mse };
enum class PairLoss { triplet, contrastive };

struct Ablation {
    Variant variant = Variant::full;
    ReconLoss recon = ReconLoss::sce;
    PairLoss pair = PairLoss::triplet;

    bool uses_discriminator() const { return variant == Variant::full || variant == Variant::mask_gan; }
    bool uses_pairs() const { return variant == Variant::full || variant == Variant::mask_g2n; }
};

Variant parse_variant(std::string_view name);
std::string to_string(Variant v);
ReconLoss parse_recon_loss(std::string_view name);
std::string to_string(ReconLoss r);
PairLoss parse_pair_loss(std::string_view name);
std::string to_string(PairLoss p);

struct TrainConfig {
    int epochs = 600;
    int warmup_epochs = 100;
    int g2n_refresh_every = 10;
    int disc_steps_per_epoch = 20;
    double lambda = 0.5;
    double rho = 0.5;
    double lr = 1e-3;
    double weight_decay = 2e-4;
    double gamma = 2.0;
    /** Share of spots never used to fit the discriminator; its accuracy is measured there. */
    double holdout_fraction = 0.1;
    std::uint64_t seed = 0;
    /** kg, kc, n_pos and tau; the seed is derived per refresh. */
    G2NConfig g2n;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    /** Terms as they entered the generator objective; inactive terms are 0. */
    double sce = 0.0;
    double dis = 0.0;
    double tri = 0.0;
    double total = 0.0;
    /** Discriminator's own loss and held-out accuracy; NaN when it is not trained. */
    double disc_loss = 0.0;
    double disc_accuracy = 0.0;
    std::size_t n_triplets = 0;
};

struct TrainCounters {
    std::size_t triplet_builds = 0;
    std::size_t disc_updates = 0;
};

struct TrainResult {
    ModelParams params;
    /** Latent and reconstruction from the unmasked input. */
    Matrix H;
    Matrix Z;
    std::vector<EpochRecord> history;
    TrainCounters counters;
    TripletSet last_triplets;
    int last_triplet_epoch = 0;
};

struct Inference {
    Matrix h;
    Matrix z;
};

/** One forward pass on the unmasked expression. */
Inference infer(const MultiSliceMatrix& data, const SpatialGraph& graph, ModelParams& params);

/**
 * Full-batch alternating training. Each epoch draws a fresh mask, takes a
 * discriminator step on the detached latent (when the variant uses one),
 * then a generator step on the active objective. Adversarial and pair terms
 * switch on after `warmup_epochs`; pairs are reselected from the inference
 * latent every `g2n_refresh_every` epochs.
 */
TrainResult train(const MultiSliceMatrix& data, const SpatialGraph& graph, const TrainConfig& config,
                  const Ablation& ablation = {});

std::string history_to_csv(const std::vector<EpochRecord>& history);

/** anchor,positive,negative,epoch */
std::string triplets_to_csv(const TripletSet& triplets, int epoch);

}

#endif
