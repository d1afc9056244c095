#include "stg3net/train.hpp"
#include "stg3net/io.hpp"
#include "stg3net/log.hpp"
#include "stg3net/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace stg3net {

Variant parse_variant(std::string_view name) {
    if (name == "full") return Variant::full;
    if (name == "only-mask") return Variant::only_mask;
    if (name == "mask-gan") return Variant::mask_gan;
    if (name == "mask-g2n") return Variant::mask_g2n;
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, only-mask, mask-gan, mask-g2n)");
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::full: return "full";
    case Variant::only_mask: return "only-mask";
    case Variant::mask_gan: return "mask-gan";
    case Variant::mask_g2n: return "mask-g2n";
    }
    return "full";
}

ReconLoss parse_recon_loss(std::string_view name) {
    if (name == "sce") return ReconLoss::sce;
    if (name == "mse") return ReconLoss::mse;
    throw ConfigError("unknown reconstruction loss '" + std::string(name) + "' (expected sce, mse)");
}

std::string to_string(ReconLoss r) { return r == ReconLoss::sce ? "sce" : "mse"; }

PairLoss parse_pair_loss(std::string_view name) {
    if (name == "triplet") return PairLoss::triplet;
    if (name == "contrastive") return PairLoss::contrastive;
    throw ConfigError("unknown pair loss '" + std::string(name) + "' (expected triplet, contrastive)");
}

std::string to_string(PairLoss p) { return p == PairLoss::triplet ? "triplet" : "contrastive"; }

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (warmup_epochs < 0 || warmup_epochs > epochs) throw ConfigError("warmup_epochs must lie in [0, epochs]");
    if (g2n_refresh_every < 1) throw ConfigError("g2n_refresh_every must be >= 1");
    if (disc_steps_per_epoch < 1) throw ConfigError("disc_steps_per_epoch must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout_fraction must lie in [0, 1)");
    LossWeights{lambda, gamma, g2n.tau}.validate();
    g2n.validate();
}

Inference infer(const MultiSliceMatrix& data, const SpatialGraph& graph, ModelParams& params) {
    ad::Tape tape;
    auto g = bind_generator(tape, params, false);
    auto h = encode(tape.constant(data.X), graph.a_norm, g);
    auto z = decode(h, graph.a_norm, g);
    return {h.value(), z.value()};
}

namespace {

enum : std::uint64_t { kInitTag = 1, kMaskTag = 2, kHoldoutTag = 3, kPairTag = 4 };

std::vector<Index> without(const std::vector<Index>& rows, const std::vector<char>& excluded) {
    std::vector<Index> out;
    for (Index i : rows) {
        if (!excluded[static_cast<std::size_t>(i)]) {
            out.push_back(i);
        }
    }
    return out;
}

}

TrainResult train(const MultiSliceMatrix& data, const SpatialGraph& graph, const TrainConfig& cfg, const Ablation& ablation) {
    cfg.validate();
    const Index n = data.n_spots();
    if (graph.a_norm.rows() != n) {
        throw DataError("train: graph size does not match the number of spots");
    }
    const int n_slices = std::max(data.n_slices(), 1);
    if ((ablation.uses_discriminator() || ablation.uses_pairs()) && n_slices < 2) {
        throw DataError("variant " + to_string(ablation.variant) + " needs at least 2 slices");
    }

    TrainResult result;
    result.params = ModelParams::init(data.n_genes(), std::max(n_slices, 2), derive_seed(cfg.seed, {kInitTag}));
    auto& params = result.params;

    ad::AdamOptions opt{cfg.lr, cfg.weight_decay};
    ad::Adam gen_opt(params.generator(), opt);
    ad::Adam disc_opt(params.discriminator(), opt);

    std::vector<char> held_out(static_cast<std::size_t>(n), 0);
    std::vector<Index> holdout_rows;
    {
        auto plan = sample_mask(n, cfg.holdout_fraction, derive_seed(cfg.seed, {kHoldoutTag}));
        holdout_rows = plan.masked;
        for (Index i : holdout_rows) {
            held_out[static_cast<std::size_t>(i)] = 1;
        }
    }

    TripletSet triplets;
    triplets.tau = cfg.g2n.tau;
    const double nan = std::nan("");

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const bool adversarial_phase = epoch > cfg.warmup_epochs;
        EpochRecord rec;
        rec.epoch = epoch;
        rec.disc_loss = nan;
        rec.disc_accuracy = nan;

        try {
            if (ablation.uses_pairs() && adversarial_phase && (epoch - cfg.warmup_epochs - 1) % cfg.g2n_refresh_every == 0) {
                auto inf = infer(data, graph, params);
                G2NConfig g2n = cfg.g2n;
                g2n.seed = derive_seed(cfg.seed, {kPairTag, static_cast<std::uint64_t>(epoch)});
                triplets = select_g2n_pairs(inf.h, data.slice_of, g2n);
                result.last_triplets = triplets;
                result.last_triplet_epoch = epoch;
                ++result.counters.triplet_builds;
            }

            const auto plan = sample_mask(n, cfg.rho, derive_seed(cfg.seed, {kMaskTag, static_cast<std::uint64_t>(epoch)}));
            if (plan.masked.empty()) {
                throw ConfigError("mask rate too small: no spot is masked");
            }

            ad::Tape tape;
            auto g = bind_generator(tape, params, true);
            auto x = tape.constant(data.X);
            auto x_tilde = apply_mask(tape, data.X, plan, g.mask_token);
            auto h = encode(x_tilde, graph.a_norm, g);
            auto z = decode(h, graph.a_norm, g);

            if (ablation.uses_discriminator()) {
                const auto support = without(plan.masked, held_out);
                for (int step = 0; step < cfg.disc_steps_per_epoch && !support.empty(); ++step) {
                    ad::Tape dtape;
                    auto d = bind_discriminator(dtape, params, true);
                    auto p = discriminate(dtape.constant(h.value()), d);
                    auto loss = dis_loss(p, data.slice_of, support);
                    dtape.backward(loss);
                    disc_opt.step();
                    disc_opt.zero_grad();
                    ++result.counters.disc_updates;
                    rec.disc_loss = loss.item();
                }
                if (!holdout_rows.empty()) {
                    ad::Tape etape;
                    auto d = bind_discriminator(etape, params, false);
                    const Matrix p = discriminate(etape.constant(h.value()), d).value();
                    Index correct = 0;
                    for (Index i : holdout_rows) {
                        Index arg = 0;
                        p.row(i).maxCoeff(&arg);
                        correct += arg == data.slice_of[static_cast<std::size_t>(i)];
                    }
                    rec.disc_accuracy = static_cast<double>(correct) / static_cast<double>(holdout_rows.size());
                }
            }

            auto recon = ablation.recon == ReconLoss::sce ? sce_loss(x, z, plan.masked, cfg.gamma)
                                                          : mse_loss(x, z, plan.masked);
            auto zero = tape.constant(Matrix::Zero(1, 1));
            auto dis = zero;
            auto tri = zero;
            if (ablation.uses_discriminator() && adversarial_phase) {
                auto d = bind_discriminator(tape, params, false);
                dis = dis_loss(discriminate(h, d), data.slice_of, plan.masked);
            }
            if (ablation.uses_pairs() && adversarial_phase && !triplets.empty()) {
                tri = ablation.pair == PairLoss::triplet ? triplet_loss(h, triplets, cfg.g2n.tau)
                                                         : contrastive_loss(h, triplets);
            }
            auto total = total_loss(recon, dis, tri, cfg.lambda);
            tape.backward(total);
            gen_opt.step();
            gen_opt.zero_grad();

            rec.sce = recon.item();
            rec.dis = dis.item();
            rec.tri = tri.item();
            rec.total = total.item();
            rec.n_triplets = triplets.size();
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(rec.total)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": non-finite loss");
        }
        result.history.push_back(rec);
        if (epoch % 100 == 0) {
            logging::info("epoch " + std::to_string(epoch) + " loss " + io::format_double(rec.total));
        }
    }

    auto inf = infer(data, graph, params);
    result.H = std::move(inf.h);
    result.Z = std::move(inf.z);
    return result;
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,sce,dis,tri,total,disc_loss,disc_accuracy,n_triplets\n";
    auto cell = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string("nan"); };
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + cell(r.sce) + "," + cell(r.dis) + "," + cell(r.tri) + "," + cell(r.total) +
               "," + cell(r.disc_loss) + "," + cell(r.disc_accuracy) + "," + std::to_string(r.n_triplets) + "\n";
    }
    return out;
}

std::string triplets_to_csv(const TripletSet& triplets, int epoch) {
    std::string out = "anchor,positive,negative,epoch\n";
    for (const auto& t : triplets.triples) {
        out += std::to_string(t[0]) + "," + std::to_string(t[1]) + "," + std::to_string(t[2]) + "," + std::to_string(epoch) + "\n";
    }
    return out;
}

}
