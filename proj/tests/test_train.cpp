#include "doctest.h"

#include "stg3net/metrics.hpp"
#include "stg3net/synth.hpp"
#include "stg3net/train.hpp"

#include <cmath>
#include <limits>

using namespace stg3net;

namespace {

struct Fixture {
    MultiSliceMatrix data;
    SpatialGraph graph;
};

Fixture small_fixture() {
    synth::SynthConfig sc;
    sc.n_slices = 2;
    sc.grid_side = 6;
    sc.n_domains = 2;
    sc.n_genes = 30;
    sc.seed = 4;
    Fixture f;
    f.data = preprocess(synth::generate(sc).slices, 3000);
    f.graph = build_spatial_graph(f.data, 6);
    return f;
}

TrainConfig short_config() {
    TrainConfig c;
    c.epochs = 30;
    c.warmup_epochs = 10;
    c.g2n_refresh_every = 7;
    c.g2n.kc = 2;
    c.g2n.kg = 10;
    c.disc_steps_per_epoch = 1;
    c.seed = 3;
    return c;
}

bool same_values(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}

TEST_CASE("zero epochs returns the initialized parameters") {
    const auto f = small_fixture();
    TrainConfig c = short_config();
    c.epochs = 0;
    c.warmup_epochs = 0;
    auto r = train(f.data, f.graph, c);
    CHECK(r.history.empty());
    auto init = ModelParams::init(f.data.n_genes(), 2, derive_seed(c.seed, {1}));
    const auto expected = infer(f.data, f.graph, init);
    CHECK(same_values(r.H, expected.h));
    CHECK(same_values(r.Z, expected.z));
}

TEST_CASE("training is deterministic for a seed") {
    const auto f = small_fixture();
    const auto a = train(f.data, f.graph, short_config());
    const auto b = train(f.data, f.graph, short_config());
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].total == b.history[i].total);
        CHECK(a.history[i].tri == b.history[i].tri);
    }
    CHECK(same_values(a.H, b.H));
    CHECK(a.last_triplets.triples == b.last_triplets.triples);

    TrainConfig other = short_config();
    other.seed = 4;
    CHECK(!same_values(a.H, train(f.data, f.graph, other).H));
}

TEST_CASE("recorded total is the recombination of the recorded terms") {
    const auto f = small_fixture();
    for (double lambda : {0.5, 0.2}) {
        TrainConfig c = short_config();
        c.lambda = lambda;
        const auto r = train(f.data, f.graph, c);
        bool saw_pairs = false, saw_dis = false;
        for (const auto& rec : r.history) {
            CHECK(std::abs(rec.total - (rec.sce - lambda * rec.dis + (1.0 - lambda) * rec.tri)) <= 1e-12);
            if (rec.epoch <= c.warmup_epochs) {
                CHECK(rec.dis == 0.0);
                CHECK(rec.tri == 0.0);
            }
            saw_pairs = saw_pairs || rec.n_triplets > 0;
            saw_dis = saw_dis || rec.dis > 0.0;
        }
        CHECK(saw_pairs);
        CHECK(saw_dis);
    }
}

TEST_CASE("result shapes and the inference latent") {
    const auto f = small_fixture();
    auto r = train(f.data, f.graph, short_config());
    CHECK(r.history.size() == 30);
    CHECK(r.history.back().epoch == 30);
    CHECK(r.H.rows() == f.data.n_spots());
    CHECK(r.H.cols() == 16);
    CHECK(r.Z.rows() == f.data.X.rows());
    CHECK(r.Z.cols() == f.data.X.cols());
    const auto again = infer(f.data, f.graph, r.params);
    CHECK(same_values(r.H, again.h));
    CHECK(same_values(r.Z, again.z));
}

TEST_CASE("g2n pairs refresh on the stated schedule") {
    const auto f = small_fixture();
    const auto r = train(f.data, f.graph, short_config());
    // Refreshes at epochs 11, 18 and 25.
    CHECK(r.counters.triplet_builds == 3);
    CHECK(r.last_triplet_epoch == 25);
}

TEST_CASE("each variant activates only its own terms") {
    const auto f = small_fixture();
    const TrainConfig c = short_config();

    Ablation only{Variant::only_mask};
    const auto init = ModelParams::init(f.data.n_genes(), 2, derive_seed(c.seed, {1}));
    auto r = train(f.data, f.graph, c, only);
    CHECK(r.counters.triplet_builds == 0);
    CHECK(r.counters.disc_updates == 0);
    CHECK(r.last_triplets.empty());
    CHECK(same_values(r.params.disc_w1.value, init.disc_w1.value));
    CHECK(same_values(r.params.disc_b3.value, init.disc_b3.value));
    for (const auto& rec : r.history) {
        CHECK(rec.dis == 0.0);
        CHECK(rec.tri == 0.0);
        CHECK(std::isnan(rec.disc_accuracy));
    }

    r = train(f.data, f.graph, c, Ablation{Variant::mask_gan});
    CHECK(r.counters.triplet_builds == 0);
    CHECK(r.counters.disc_updates == 30);
    for (const auto& rec : r.history) CHECK(rec.tri == 0.0);

    r = train(f.data, f.graph, c, Ablation{Variant::mask_g2n});
    CHECK(r.counters.disc_updates == 0);
    CHECK(r.counters.triplet_builds == 3);
    for (const auto& rec : r.history) CHECK(rec.dis == 0.0);

    TrainConfig steps = c;
    steps.disc_steps_per_epoch = 3;
    r = train(f.data, f.graph, steps, Ablation{Variant::full});
    CHECK(r.counters.disc_updates == 90);
}

TEST_CASE("alternative reconstruction and pair losses train") {
    const auto f = small_fixture();
    auto r = train(f.data, f.graph, short_config(), Ablation{Variant::full, ReconLoss::mse, PairLoss::contrastive});
    CHECK(r.H.allFinite());
    CHECK(r.history.back().tri > 0.0);
}

TEST_CASE("training errors") {
    auto f = small_fixture();
    TrainConfig c = short_config();
    c.warmup_epochs = 40;
    CHECK_THROWS_AS(train(f.data, f.graph, c), ConfigError);

    MultiSliceMatrix one = f.data;
    std::fill(one.slice_of.begin(), one.slice_of.end(), 0);
    one.slice_ids = {"only"};
    CHECK_THROWS_AS(train(one, f.graph, short_config()), DataError);
    CHECK_NOTHROW(train(one, f.graph, short_config(), Ablation{Variant::only_mask}));

    MultiSliceMatrix bad = f.data;
    bad.X(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(train(bad, f.graph, short_config()), doctest::Contains("epoch 1"), NumericError);

    CHECK(parse_variant("mask-g2n") == Variant::mask_g2n);
    CHECK_THROWS_AS(parse_variant("gan"), ConfigError);
    CHECK(to_string(parse_pair_loss("contrastive")) == "contrastive");
}

TEST_CASE("on the default benchmark the encoder learns to reconstruct and to fool the discriminator") {
    const auto ds = synth::generate(synth::SynthConfig{});
    const auto data = preprocess(ds.slices, 3000);
    const auto graph = build_spatial_graph(data, 6);
    const TrainConfig c;
    const auto r = train(data, graph, c);
    REQUIRE(r.history.size() == 600);

    const double first = r.history[0].sce;
    const double at_200 = r.history[199].sce;
    MESSAGE("sce epoch 1 " << first << ", epoch 200 " << at_200);
    CHECK(at_200 < 0.5 * first);

    const auto warmup_end = static_cast<std::size_t>(c.warmup_epochs);
    const double warmup_accuracy = r.history[warmup_end - 1].disc_accuracy;
    std::vector<double> later;
    for (std::size_t i = warmup_end; i < r.history.size(); ++i) {
        later.push_back(r.history[i].disc_accuracy);
    }
    const double later_median = metrics::median(later);
    MESSAGE("held-out discriminator accuracy at warm-up end " << warmup_accuracy << ", median after " << later_median);
    CHECK(later_median < warmup_accuracy);
}
