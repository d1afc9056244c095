#include "doctest.h"

#include "stg3net/losses.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace stg3net;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < c; ++j) {
            m(i, j) = u(rng);
        }
    }
    return m;
}

std::vector<Index> all_rows(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

/** Row-by-row re-evaluation of the triplet hinge. */
double triplet_oracle(const Matrix& h, const TripletSet& t) {
    double total = 0.0;
    for (const auto& tr : t.triples) {
        const double dp = (h.row(tr[0]) - h.row(tr[1])).norm();
        const double dn = (h.row(tr[0]) - h.row(tr[2])).norm();
        total += std::max(dp - dn + t.tau, 0.0);
    }
    return total / static_cast<double>(t.triples.size());
}

}

TEST_CASE("sce endpoints") {
    const Matrix x = random_matrix(4, 5, 1, 0.1, 1.0);
    const auto rows = all_rows(4);
    ad::Tape t;
    auto xv = t.constant(x);
    CHECK(sce_loss(xv, t.constant(x), rows, 2.0).item() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(sce_loss(xv, t.constant(-x), rows, 2.0).item() == doctest::Approx(4.0).epsilon(1e-12));

    Matrix a(1, 2), b(1, 2);
    a << 1.0, 0.0;
    b << 0.0, 3.0;
    CHECK(sce_loss(t.constant(a), t.constant(b), {0}, 2.0).item() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sce averages over the masked rows only") {
    Matrix x(3, 2), z(3, 2);
    x << 1, 0, 1, 0, 1, 0;
    z << 1, 0, -1, 0, 0, 1;
    ad::Tape t;
    CHECK(sce_loss(t.constant(x), t.constant(z), {0}, 2.0).item() == doctest::Approx(0.0));
    CHECK(sce_loss(t.constant(x), t.constant(z), {1, 2}, 2.0).item() == doctest::Approx(2.5));
    CHECK_THROWS(sce_loss(t.constant(x), t.constant(z), {}, 2.0));
}

TEST_CASE("sce lies in [0, 2^gamma] for random inputs") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        ad::Tape t;
        const double v = sce_loss(t.constant(random_matrix(6, 4, seed)), t.constant(random_matrix(6, 4, seed + 100)),
                                  all_rows(6), 2.0)
                             .item();
        CHECK(v >= 0.0);
        CHECK(v <= 4.0);
    }
}

TEST_CASE("sce tolerates zero rows through the norm guard") {
    ad::Tape t;
    auto v = sce_loss(t.constant(Matrix::Ones(2, 3)), t.constant(Matrix::Zero(2, 3)), {0, 1}, 2.0);
    CHECK(std::isfinite(v.item()));
    CHECK(v.item() == doctest::Approx(1.0));
}

TEST_CASE("mse is the mean squared row error over masked rows") {
    Matrix x(2, 2), z(2, 2);
    x << 1, 2, 3, 4;
    z << 1, 0, 0, 4;
    ad::Tape t;
    CHECK(mse_loss(t.constant(x), t.constant(z), {0, 1}).item() == doctest::Approx((4.0 + 9.0) / 4.0));
}

TEST_CASE("dis loss examples") {
    Labels slice_of{0, 1, 2};
    ad::Tape t;
    Matrix perfect = Matrix::Identity(3, 3);
    CHECK(dis_loss(t.constant(perfect), slice_of, {0, 1, 2}).item() == doctest::Approx(0.0));
    Matrix uniform = Matrix::Constant(3, 3, 1.0 / 3.0);
    CHECK(dis_loss(t.constant(uniform), slice_of, {0, 1, 2}).item() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    Matrix wrong(1, 2);
    wrong << 0.0, 1.0;
    const double clamped = dis_loss(t.constant(wrong), Labels{0}, {0}).item();
    CHECK(std::isfinite(clamped));
    CHECK(clamped == doctest::Approx(-std::log(kProbFloor)));
}

TEST_CASE("dis loss is equivariant under a slice relabeling") {
    Matrix p = random_matrix(6, 3, 7, 0.1, 1.0);
    for (Index i = 0; i < p.rows(); ++i) {
        p.row(i) /= p.row(i).sum();
    }
    const Labels slice_of{0, 1, 2, 2, 1, 0};
    const std::vector<int> perm{2, 0, 1};
    Matrix q(6, 3);
    Labels relabeled(6);
    for (Index i = 0; i < 6; ++i) {
        for (int s = 0; s < 3; ++s) {
            q(i, perm[static_cast<std::size_t>(s)]) = p(i, s);
        }
        relabeled[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(slice_of[static_cast<std::size_t>(i)])];
    }
    ad::Tape t;
    const std::vector<Index> rows{0, 2, 3, 5};
    CHECK(dis_loss(t.constant(p), slice_of, rows).item() == doctest::Approx(dis_loss(t.constant(q), relabeled, rows).item()).epsilon(1e-15));
}

TEST_CASE("triplet loss examples") {
    ad::Tape t;
    TripletSet set;
    set.tau = 1.0;
    set.triples = {{0, 1, 2}};

    Matrix satisfied(3, 2);
    satisfied << 0, 0, 0, 0, 2, 0;
    CHECK(triplet_loss(t.constant(satisfied), set, 1.0).item() == doctest::Approx(0.0));

    Matrix violated(3, 2);
    violated << 0, 0, 0.5, 0, 0, 0;
    CHECK(triplet_loss(t.constant(violated), set, 1.0).item() == doctest::Approx(1.5));

    Matrix collapsed = Matrix::Ones(3, 2);
    CHECK(triplet_loss(t.constant(collapsed), set, 1.0).item() == doctest::Approx(1.0));
}

TEST_CASE("empty triplet set contributes zero") {
    ad::Tape t;
    CHECK(triplet_loss(t.constant(Matrix::Ones(3, 2)), TripletSet{}, 1.0).item() == 0.0);
}

TEST_CASE("triplet loss matches the row-wise oracle and respects its bounds") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Matrix h = random_matrix(8, 4, seed, -3.0, 3.0);
        TripletSet set;
        set.tau = 1.0;
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<Index> pick(0, 7);
        for (int k = 0; k < 6; ++k) {
            set.triples.push_back({pick(rng), pick(rng), pick(rng)});
        }
        ad::Tape t;
        const double v = triplet_loss(t.constant(h), set, 1.0).item();
        CHECK(v == doctest::Approx(triplet_oracle(h, set)).epsilon(1e-12));
        double max_dist = 0.0;
        for (Index i = 0; i < 8; ++i) {
            for (Index j = 0; j < 8; ++j) {
                max_dist = std::max(max_dist, (h.row(i) - h.row(j)).norm());
            }
        }
        CHECK(v >= 0.0);
        CHECK(v <= max_dist + 1.0);
    }
}

TEST_CASE("contrastive loss is lowest when positives are closest") {
    TripletSet set;
    set.triples = {{0, 1, 2}, {3, 4, 5}};
    Matrix aligned(6, 2), swapped(6, 2);
    aligned << 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 1, 0;
    swapped << 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1;
    ad::Tape t;
    const double good = contrastive_loss(t.constant(aligned), set).item();
    const double bad = contrastive_loss(t.constant(swapped), set).item();
    CHECK(good < bad);
    // Two candidates per anchor with cosine 1 and 0 at temperature 0.5.
    CHECK(good == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("total loss examples") {
    CHECK(total_loss(4.0, 1.0986, 1.5, 0.5) == doctest::Approx(4.2007).epsilon(1e-12));
    CHECK(total_loss(2.0, 3.0, 5.0, 0.0) == doctest::Approx(7.0));
    CHECK(total_loss(2.0, 3.0, 5.0, 1.0) == doctest::Approx(-1.0));
    ad::Tape t;
    auto c = [&](double v) { return t.constant(Matrix::Constant(1, 1, v)); };
    CHECK(total_loss(c(4.0), c(1.0986), c(1.5), 0.5).item() == doctest::Approx(4.2007).epsilon(1e-12));
}

TEST_CASE("loss weights validation") {
    CHECK_NOTHROW(LossWeights{}.validate());
    CHECK_THROWS_AS((LossWeights{1.5, 2.0, 1.0}.validate()), ConfigError);
    CHECK_THROWS_AS((LossWeights{0.5, 0.5, 1.0}.validate()), ConfigError);
    CHECK_THROWS_AS((LossWeights{0.5, 2.0, 0.0}.validate()), ConfigError);
}

TEST_CASE("every loss passes grad_check off its kinks") {
    const Matrix x = random_matrix(6, 5, 41, 0.1, 1.0);
    const auto rows = std::vector<Index>{0, 2, 3, 5};
    const Labels slice_of{0, 1, 0, 1, 0, 1};
    TripletSet set;
    set.tau = 1.0;
    set.triples = {{0, 1, 2}, {3, 4, 5}, {2, 5, 0}};

    auto sce = [&](ad::Tape& t, ad::Var z) { return sce_loss(t.constant(x), z, rows, 2.0); };
    CHECK(ad::grad_check(sce, random_matrix(6, 5, 42)) < 1e-6);
    auto sce3 = [&](ad::Tape& t, ad::Var z) { return sce_loss(t.constant(x), z, rows, 3.0); };
    CHECK(ad::grad_check(sce3, random_matrix(6, 5, 43)) < 1e-6);
    auto mse = [&](ad::Tape& t, ad::Var z) { return mse_loss(t.constant(x), z, rows); };
    CHECK(ad::grad_check(mse, random_matrix(6, 5, 44)) < 1e-6);
    auto dis = [&](ad::Tape&, ad::Var logits) { return dis_loss(ad::row_softmax(logits), slice_of, rows); };
    CHECK(ad::grad_check(dis, random_matrix(6, 2, 45)) < 1e-6);
    auto tri = [&](ad::Tape&, ad::Var h) { return triplet_loss(h, set, 1.0); };
    CHECK(ad::grad_check(tri, random_matrix(6, 4, 46, -2.0, 2.0)) < 1e-4);
    auto con = [&](ad::Tape&, ad::Var h) { return contrastive_loss(h, set); };
    CHECK(ad::grad_check(con, random_matrix(6, 4, 47)) < 1e-6);
}
