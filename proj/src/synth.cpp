#include "stg3net/synth.hpp"
#include "stg3net/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace stg3net::synth {

void SynthConfig::validate() const {
    if (n_slices < 2) {
        throw ConfigError("n_slices must be >= 2");
    }
    if (n_domains < 2) {
        throw ConfigError("n_domains must be >= 2");
    }
    if (grid_side < n_domains) {
        throw ConfigError("grid_side must be >= n_domains so every band is non-empty");
    }
    if (n_genes < 1) {
        throw ConfigError("n_genes must be >= 1");
    }
    if (!(batch_shift_sd >= 0.0) || !(noise_sd >= 0.0) || !(signature_strength >= 0.0)) {
        throw ConfigError("standard deviations and signature strength must be >= 0");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout_rate must lie in [0, 1)");
    }
}

int band_of(int column, int grid_side, int n_domains) { return column * n_domains / grid_side; }

Labels SynthDataset::stacked_truth() const {
    Labels out;
    for (const auto& t : truth) {
        out.insert(out.end(), t.begin(), t.end());
    }
    return out;
}

namespace {

std::string gene_name(int g, int n_genes) {
    const int width = static_cast<int>(std::to_string(std::max(1, n_genes - 1)).size());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "gene%0*d", width, g);
    return buf;
}

}

SynthDataset generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::bernoulli_distribution drop(cfg.dropout_rate);

    const int n_sig = std::max(1, static_cast<int>(std::lround(0.1 * cfg.n_genes)));
    std::vector<std::vector<int>> signature(static_cast<std::size_t>(cfg.n_domains));
    std::vector<int> genes(static_cast<std::size_t>(cfg.n_genes));
    std::iota(genes.begin(), genes.end(), 0);
    if (n_sig * cfg.n_domains <= cfg.n_genes) {
        std::shuffle(genes.begin(), genes.end(), rng);
        for (int d = 0; d < cfg.n_domains; ++d) {
            signature[static_cast<std::size_t>(d)].assign(genes.begin() + d * n_sig, genes.begin() + (d + 1) * n_sig);
        }
    } else {
        for (int d = 0; d < cfg.n_domains; ++d) {
            std::shuffle(genes.begin(), genes.end(), rng);
            signature[static_cast<std::size_t>(d)].assign(genes.begin(), genes.begin() + n_sig);
        }
    }
    Matrix mean_by_domain = Matrix::Zero(cfg.n_domains, cfg.n_genes);
    for (int d = 0; d < cfg.n_domains; ++d) {
        for (int g : signature[static_cast<std::size_t>(d)]) {
            mean_by_domain(d, g) = cfg.signature_strength;
        }
    }

    std::vector<std::string> names;
    for (int g = 0; g < cfg.n_genes; ++g) {
        names.push_back(gene_name(g, cfg.n_genes));
    }

    SynthDataset out;
    for (int s = 0; s < cfg.n_slices; ++s) {
        RowVector shift(cfg.n_genes);
        for (int g = 0; g < cfg.n_genes; ++g) {
            shift(g) = std_normal(rng) * cfg.batch_shift_sd;
        }

        const bool drops = cfg.drop_domain_on_slice && s == cfg.n_slices - 1;
        std::vector<std::pair<int, int>> spots;
        for (int r = 0; r < cfg.grid_side; ++r) {
            for (int c = 0; c < cfg.grid_side; ++c) {
                if (drops && band_of(c, cfg.grid_side, cfg.n_domains) == cfg.n_domains - 1) {
                    continue;
                }
                spots.emplace_back(r, c);
            }
        }

        SliceRaw slice;
        slice.slice_id = "slice" + std::to_string(s);
        slice.gene_names = names;
        slice.counts.resize(static_cast<Index>(spots.size()), cfg.n_genes);
        slice.coords.resize(static_cast<Index>(spots.size()), 2);
        Labels truth;
        for (std::size_t i = 0; i < spots.size(); ++i) {
            const auto [r, c] = spots[i];
            const int d = band_of(c, cfg.grid_side, cfg.n_domains);
            truth.push_back(d);
            slice.coords(static_cast<Index>(i), 0) = c;
            slice.coords(static_cast<Index>(i), 1) = r;
            slice.barcodes.push_back(slice.slice_id + "_x" + std::to_string(c) + "_y" + std::to_string(r));

            Index best = 0;
            for (int g = 0; g < cfg.n_genes; ++g) {
                const double log_expr = mean_by_domain(d, g) + shift(g) + std_normal(rng) * cfg.noise_sd;
                double count = std::round(std::exp(log_expr));
                if (drop(rng)) {
                    count = 0.0;
                }
                slice.counts(static_cast<Index>(i), g) = count;
                if (mean_by_domain(d, g) + shift(g) > mean_by_domain(d, best) + shift(best)) {
                    best = g;
                }
            }
            // Every spot keeps a positive total so it survives normalization.
            if (slice.counts.row(static_cast<Index>(i)).sum() == 0.0) {
                slice.counts(static_cast<Index>(i), best) = 1.0;
            }
        }
        out.slices.push_back(std::move(slice));
        out.truth.push_back(std::move(truth));
    }
    return out;
}

void write_dataset(const std::filesystem::path& dir, const SynthDataset& data) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    std::string truth = "spot,slice_id,domain\n";
    for (std::size_t s = 0; s < data.slices.size(); ++s) {
        const auto& slice = data.slices[s];
        const std::string expr_name = slice.slice_id + "_expression.csv";
        const std::string coord_name = slice.slice_id + "_coords.csv";

        std::string expr = "spot";
        for (const auto& g : slice.gene_names) {
            expr += "," + g;
        }
        expr += "\n";
        std::string coords = "spot_barcode,x,y\n";
        for (Index i = 0; i < slice.counts.rows(); ++i) {
            const auto& bc = slice.barcodes[static_cast<std::size_t>(i)];
            expr += bc;
            for (Index g = 0; g < slice.counts.cols(); ++g) {
                expr += "," + io::format_double(slice.counts(i, g));
            }
            expr += "\n";
            coords += bc + "," + io::format_double(slice.coords(i, 0)) + "," + io::format_double(slice.coords(i, 1)) + "\n";
            truth += bc + "," + slice.slice_id + "," + std::to_string(data.truth[s][static_cast<std::size_t>(i)]) + "\n";
        }
        io::write_text(dir / expr_name, expr);
        io::write_text(dir / coord_name, coords);
        manifest.push_back({{"slice_id", slice.slice_id}, {"expression", expr_name}, {"coords", coord_name}});
    }
    io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    io::write_text(dir / "truth.csv", truth);
}

Labels read_truth(const std::filesystem::path& path) { return io::read_labels_csv(path); }

}
