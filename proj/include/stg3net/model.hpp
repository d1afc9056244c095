#ifndef STG3NET_MODEL_HPP
#define STG3NET_MODEL_HPP

#include "stg3net/autodiff.hpp"
#include "stg3net/types.hpp"

#include <filesystem>
#include <string_view>
#include <vector>

namespace stg3net {

/// Layer widths of the network.
namespace dims {
inline constexpr Index fc1 = 64;
inline constexpr Index fc2 = 32;  // d_f
inline constexpr Index gcn_hidden = 64;
inline constexpr Index latent = 16;  // d
inline constexpr Index dec_hidden = 64;
inline constexpr Index disc1 = 64;
inline constexpr Index disc2 = 32;
inline constexpr double leaky_slope = 0.01;
}

/**
 * Spots whose expression is replaced by the mask token for one forward pass.
 * `masked` is sorted ascending and has round(rho * N) unique entries.
 */
struct MaskPlan {
    double rho = 0.0;
    std::vector<Index> masked;
    std::uint64_t seed = 0;
};

MaskPlan sample_mask(Index n_spots, double rho, std::uint64_t seed);

/**
 * All trainable arrays. Weight matrices are (fan_in x fan_out) and act on
 * row-major spot features, biases are 1 x fan_out rows.
 */
struct ModelParams {
    ad::Parameter mask_token;  // 1 x n_genes
    ad::Parameter enc_w1, enc_b1, enc_w2, enc_b2;
    ad::Parameter gcn_w0, gcn_w1;
    ad::Parameter dec_w0, dec_w1;
    ad::Parameter disc_w1, disc_b1, disc_w2, disc_b2, disc_w3, disc_b3;

    /**
     * Glorot-uniform weights, zero biases and a zero mask token, drawn in a
     * fixed order from `seed`.
     */
    static ModelParams init(Index n_genes, int n_slices, std::uint64_t seed);

    Index n_genes() const { return mask_token.value.cols(); }
    int n_slices() const { return static_cast<int>(disc_w3.value.cols()); }

    /** Encoder, decoder and mask token. */
    std::vector<ad::Parameter*> generator();
    std::vector<ad::Parameter*> discriminator();
    std::vector<ad::Parameter*> all();
    std::vector<const ad::Parameter*> generator() const;
    std::vector<const ad::Parameter*> discriminator() const;

    void zero_grad();
};

struct GeneratorVars {
    ad::Var mask_token, enc_w1, enc_b1, enc_w2, enc_b2, gcn_w0, gcn_w1, dec_w0, dec_w1;

    /** Look up a var by its parameter name, e.g. "gcn_w0". */
    ad::Var& at(std::string_view name);
};

struct DiscriminatorVars {
    ad::Var w1, b1, w2, b2, w3, b3;
};

GeneratorVars bind_generator(ad::Tape& tape, ModelParams& params, bool trainable);
DiscriminatorVars bind_discriminator(ad::Tape& tape, ModelParams& params, bool trainable);

/** Rows listed in `plan` take the token; gradient reaches the token from those rows only. */
ad::Var apply_mask(ad::Tape& tape, const Matrix& x, const MaskPlan& plan, ad::Var token);

/**
 * Two ReLU fully connected layers to H_f, then
 * H = A ReLU(A H_f W0) W1.
 */
ad::Var encode(ad::Var x_tilde, const SparseMatrix& a_norm, const GeneratorVars& g);

/** Z = A LeakyReLU(H W0') W1'. */
ad::Var decode(ad::Var h, const SparseMatrix& a_norm, const GeneratorVars& g);

/** Three fully connected layers (ReLU, ReLU, linear) and a row softmax. */
ad::Var discriminate(ad::Var h, const DiscriminatorVars& d);

/**
 * Checkpoint text format: a "# stg3net checkpoint v1" line, then per array a
 * "name rows cols" line followed by `rows` lines of `cols` space-separated
 * values. Discriminator arrays are written only when requested.
 */
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, bool include_discriminator);
ModelParams load_checkpoint(const std::filesystem::path& path);
bool checkpoint_has_discriminator(const std::filesystem::path& path);

}

#endif
