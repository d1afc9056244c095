#ifndef STG3NET_INGEST_HPP
#define STG3NET_INGEST_HPP

#include "stg3net/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stg3net {

/**
 * One tissue section as read from disk: a spot x gene count matrix plus 2-D
 * spot coordinates.
 */
struct SliceRaw {
    std::string slice_id;
    Matrix counts;
    std::vector<std::string> gene_names;
    std::vector<std::string> barcodes;
    Matrix coords;
};

/**
 * Spots of all slices stacked slice by slice over a shared gene axis.
 */
struct MultiSliceMatrix {
    Matrix X;
    Labels slice_of;
    std::vector<std::string> gene_names;
    std::vector<std::string> barcodes;
    std::vector<std::string> slice_ids;
    Matrix coords;

    Index n_spots() const { return X.rows(); }
    Index n_genes() const { return X.cols(); }
    int n_slices() const { return static_cast<int>(slice_ids.size()); }

    /** Row indices belonging to slice `s`, ascending. */
    std::vector<Index> rows_of(int s) const;
};

/**
 * Read a JSON manifest: an array of {"slice_id", "expression", "coords"}.
 * Relative paths resolve against the manifest's directory.
 */
std::vector<SliceRaw> load_manifest(const std::filesystem::path& path);

/** Read one expression table and its coordinate table. */
SliceRaw load_slice(const std::string& slice_id, const std::filesystem::path& expression,
                    const std::filesystem::path& coords);

/** Restrict every slice to the sorted intersection of gene names. */
std::vector<SliceRaw> intersect_genes(const std::vector<SliceRaw>& slices);

/**
 * Scale each spot to the global median of per-spot totals, then log1p.
 */
std::vector<SliceRaw> normalize(const std::vector<SliceRaw>& slices);

/**
 * Keep the `n_top` genes with the largest variance pooled over all spots,
 * ordered by descending variance and then by column index, and stack the
 * slices into one matrix.
 */
MultiSliceMatrix select_hvg(const std::vector<SliceRaw>& slices, Index n_top);

/** intersect_genes -> normalize -> select_hvg. */
MultiSliceMatrix preprocess(const std::vector<SliceRaw>& slices, Index n_top = 3000);

}

#endif
