#include "stg3net/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace stg3net {

MaskPlan sample_mask(Index n_spots, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
        throw ConfigError("mask rate must lie in [0, 1]");
    }
    MaskPlan plan;
    plan.rho = rho;
    plan.seed = seed;
    const auto count = static_cast<Index>(std::llround(rho * static_cast<double>(n_spots)));
    std::vector<Index> all(static_cast<std::size_t>(n_spots));
    std::iota(all.begin(), all.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    plan.masked.assign(all.begin(), all.begin() + count);
    std::sort(plan.masked.begin(), plan.masked.end());
    return plan;
}

namespace {

ad::Parameter glorot(std::string name, Index fan_in, Index fan_out, std::mt19937_64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Matrix w(fan_in, fan_out);
    for (Index j = 0; j < fan_out; ++j) {
        for (Index i = 0; i < fan_in; ++i) {
            w(i, j) = dist(rng);
        }
    }
    return ad::Parameter(std::move(name), std::move(w));
}

ad::Parameter zeros(std::string name, Index cols) { return ad::Parameter(std::move(name), Matrix::Zero(1, cols)); }

}

ModelParams ModelParams::init(Index n_genes, int n_slices, std::uint64_t seed) {
    if (n_genes < 1) {
        throw ConfigError("model needs at least one gene");
    }
    if (n_slices < 1) {
        throw ConfigError("model needs at least one slice");
    }
    std::mt19937_64 rng(seed);
    ModelParams p;
    p.mask_token = zeros("mask_token", n_genes);
    p.enc_w1 = glorot("enc_w1", n_genes, dims::fc1, rng);
    p.enc_b1 = zeros("enc_b1", dims::fc1);
    p.enc_w2 = glorot("enc_w2", dims::fc1, dims::fc2, rng);
    p.enc_b2 = zeros("enc_b2", dims::fc2);
    p.gcn_w0 = glorot("gcn_w0", dims::fc2, dims::gcn_hidden, rng);
    p.gcn_w1 = glorot("gcn_w1", dims::gcn_hidden, dims::latent, rng);
    p.dec_w0 = glorot("dec_w0", dims::latent, dims::dec_hidden, rng);
    p.dec_w1 = glorot("dec_w1", dims::dec_hidden, n_genes, rng);
    p.disc_w1 = glorot("disc_w1", dims::latent, dims::disc1, rng);
    p.disc_b1 = zeros("disc_b1", dims::disc1);
    p.disc_w2 = glorot("disc_w2", dims::disc1, dims::disc2, rng);
    p.disc_b2 = zeros("disc_b2", dims::disc2);
    p.disc_w3 = glorot("disc_w3", dims::disc2, n_slices, rng);
    p.disc_b3 = zeros("disc_b3", n_slices);
    return p;
}

std::vector<ad::Parameter*> ModelParams::generator() {
    return {&mask_token, &enc_w1, &enc_b1, &enc_w2, &enc_b2, &gcn_w0, &gcn_w1, &dec_w0, &dec_w1};
}

std::vector<ad::Parameter*> ModelParams::discriminator() {
    return {&disc_w1, &disc_b1, &disc_w2, &disc_b2, &disc_w3, &disc_b3};
}

std::vector<const ad::Parameter*> ModelParams::generator() const {
    return {&mask_token, &enc_w1, &enc_b1, &enc_w2, &enc_b2, &gcn_w0, &gcn_w1, &dec_w0, &dec_w1};
}

std::vector<const ad::Parameter*> ModelParams::discriminator() const {
    return {&disc_w1, &disc_b1, &disc_w2, &disc_b2, &disc_w3, &disc_b3};
}

std::vector<ad::Parameter*> ModelParams::all() {
    auto out = generator();
    for (auto* p : discriminator()) {
        out.push_back(p);
    }
    return out;
}

void ModelParams::zero_grad() {
    for (auto* p : all()) {
        p->zero_grad();
    }
}

ad::Var& GeneratorVars::at(std::string_view name) {
    if (name == "mask_token") return mask_token;
    if (name == "enc_w1") return enc_w1;
    if (name == "enc_b1") return enc_b1;
    if (name == "enc_w2") return enc_w2;
    if (name == "enc_b2") return enc_b2;
    if (name == "gcn_w0") return gcn_w0;
    if (name == "gcn_w1") return gcn_w1;
    if (name == "dec_w0") return dec_w0;
    if (name == "dec_w1") return dec_w1;
    throw std::invalid_argument("unknown generator parameter: " + std::string(name));
}

GeneratorVars bind_generator(ad::Tape& tape, ModelParams& p, bool trainable) {
    GeneratorVars g;
    g.mask_token = tape.param(p.mask_token, trainable);
    g.enc_w1 = tape.param(p.enc_w1, trainable);
    g.enc_b1 = tape.param(p.enc_b1, trainable);
    g.enc_w2 = tape.param(p.enc_w2, trainable);
    g.enc_b2 = tape.param(p.enc_b2, trainable);
    g.gcn_w0 = tape.param(p.gcn_w0, trainable);
    g.gcn_w1 = tape.param(p.gcn_w1, trainable);
    g.dec_w0 = tape.param(p.dec_w0, trainable);
    g.dec_w1 = tape.param(p.dec_w1, trainable);
    return g;
}

DiscriminatorVars bind_discriminator(ad::Tape& tape, ModelParams& p, bool trainable) {
    DiscriminatorVars d;
    d.w1 = tape.param(p.disc_w1, trainable);
    d.b1 = tape.param(p.disc_b1, trainable);
    d.w2 = tape.param(p.disc_w2, trainable);
    d.b2 = tape.param(p.disc_b2, trainable);
    d.w3 = tape.param(p.disc_w3, trainable);
    d.b3 = tape.param(p.disc_b3, trainable);
    return d;
}

ad::Var apply_mask(ad::Tape& tape, const Matrix& x, const MaskPlan& plan, ad::Var token) {
    if (token.rows() != 1 || token.cols() != x.cols()) {
        throw std::invalid_argument("apply_mask: token must be 1 x n_genes");
    }
    if (plan.masked.empty()) {
        return tape.constant(x);
    }
    Matrix kept = x;
    Matrix indicator = Matrix::Zero(x.rows(), 1);
    for (Index i : plan.masked) {
        if (i < 0 || i >= x.rows()) {
            throw std::out_of_range("apply_mask: masked index out of range");
        }
        kept.row(i).setZero();
        indicator(i, 0) = 1.0;
    }
    return ad::add(tape.constant(std::move(kept)), ad::matmul(tape.constant(std::move(indicator)), token));
}

ad::Var encode(ad::Var x_tilde, const SparseMatrix& a_norm, const GeneratorVars& g) {
    using namespace ad;
    Var h1 = relu(add_row(matmul(x_tilde, g.enc_w1), g.enc_b1));
    Var hf = relu(add_row(matmul(h1, g.enc_w2), g.enc_b2));
    Var hidden = relu(matmul(spmm(a_norm, hf), g.gcn_w0));
    return spmm(a_norm, matmul(hidden, g.gcn_w1));
}

ad::Var decode(ad::Var h, const SparseMatrix& a_norm, const GeneratorVars& g) {
    using namespace ad;
    Var hidden = leaky_relu(matmul(h, g.dec_w0), dims::leaky_slope);
    return spmm(a_norm, matmul(hidden, g.dec_w1));
}

ad::Var discriminate(ad::Var h, const DiscriminatorVars& d) {
    using namespace ad;
    if (d.w3.cols() < 2) {
        throw ConfigError("discriminator needs at least 2 slices");
    }
    Var a = relu(add_row(matmul(h, d.w1), d.b1));
    Var b = relu(add_row(matmul(a, d.w2), d.b2));
    return row_softmax(add_row(matmul(b, d.w3), d.b3));
}

}
