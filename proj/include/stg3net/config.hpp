#ifndef STG3NET_CONFIG_HPP
#define STG3NET_CONFIG_HPP

#include "stg3net/synth.hpp"
#include "stg3net/train.hpp"

#include <filesystem>
#include <string>

namespace stg3net {

/**
 * Every tunable of the pipeline. Loaded from a sectioned `key = value` file
 * and overridable per key; unknown keys are rejected.
 */
struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path truth;
    std::filesystem::path out = "out";
    std::uint64_t seed = 0;

    Index n_top_genes = 3000;
    int k_spatial = 6;
    TrainConfig train;
    Ablation ablation;

    /** Number of target domains; k-means on the latent uses it, and so does G2N unless g2n.kc is set. */
    int domains = 4;
    Index lisi_k = 30;
    Index pas_k = 10;

    synth::SynthConfig synth;

    int ablate_seeds = 5;
    bool objective_sweep = false;

    /** Set one key, given as "section.key" or a top-level key. Throws ConfigError. */
    void set(const std::string& key, const std::string& value);

    /** Apply a config file on top of the current values. */
    void load(const std::filesystem::path& path);

    /** Propagate shared values (seed, domains) into sub-configs and validate. */
    void finalize();

    /** Human-readable list of every key with its default and meaning. */
    static std::string reference();

    /** Set once g2n.kc is given explicitly; otherwise kc follows `domains`. */
    bool kc_explicit = false;
};

}

#endif
