#ifndef STG3NET_SYNTH_HPP
#define STG3NET_SYNTH_HPP

#include "stg3net/ingest.hpp"

#include <filesystem>
#include <vector>

namespace stg3net::synth {

/**
 * Lattice slices with vertical-band domains shared across slices.
 * log-expression = signature + per-(slice, gene) batch shift + noise,
 * counts = round(exp(.)) followed by dropout.
 */
struct SynthConfig {
    int n_slices = 3;
    int grid_side = 10;
    int n_domains = 4;
    int n_genes = 200;
    double signature_strength = 2.0;
    double batch_shift_sd = 1.0;
    double noise_sd = 0.5;
    double dropout_rate = 0.3;
    std::uint64_t seed = 0;
    /** Remove the last domain's band from the last slice. */
    bool drop_domain_on_slice = false;

    void validate() const;
};

struct SynthDataset {
    std::vector<SliceRaw> slices;
    /** Domain of every spot, per slice, in row order. */
    std::vector<Labels> truth;

    /** Truth labels stacked slice by slice. */
    Labels stacked_truth() const;
};

SynthDataset generate(const SynthConfig& config);

/** Domain of a lattice column. */
int band_of(int column, int grid_side, int n_domains);

/**
 * Write `<slice>_expression.csv`, `<slice>_coords.csv`, `manifest.json` and
 * `truth.csv` (spot,slice_id,domain) under `dir`.
 */
void write_dataset(const std::filesystem::path& dir, const SynthDataset& data);

/** Domain column of a truth file, in file order. */
Labels read_truth(const std::filesystem::path& path);

}

#endif
