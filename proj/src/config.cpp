#include "stg3net/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace stg3net {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T v{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("invalid value for " + key + ": '" + value + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("invalid boolean for " + key + ": '" + value + "'");
}

struct Entry {
    const char* key;
    const char* fallback;
    const char* help;
    std::function<void(RunConfig&, const std::string&, const std::string&)> apply;
};

#define NUM(field, type) [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_number<type>(k, v); }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        {"manifest", "", "input manifest (JSON array of slice_id/expression/coords)",
         [](RunConfig& c, const std::string&, const std::string& v) { c.manifest = v; }},
        {"truth", "", "optional truth CSV (spot,...,domain) matched by spot barcode",
         [](RunConfig& c, const std::string&, const std::string& v) { c.truth = v; }},
        {"out", "out", "output directory", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},
        {"seed", "0", "base seed for every random stream", NUM(seed, std::uint64_t)},
        {"domains", "4", "number of target domains (latent clustering, default g2n.kc)", NUM(domains, int)},

        {"ingest.n_top_genes", "3000", "highly variable genes kept", NUM(n_top_genes, Index)},
        {"graph.k_spatial", "6", "spatial neighbours per spot", NUM(k_spatial, int)},

        {"model.variant", "full", "full | only-mask | mask-gan | mask-g2n",
         [](RunConfig& c, const std::string&, const std::string& v) { c.ablation.variant = parse_variant(v); }},
        {"model.recon_loss", "sce", "sce | mse",
         [](RunConfig& c, const std::string&, const std::string& v) { c.ablation.recon = parse_recon_loss(v); }},
        {"model.pair_loss", "triplet", "triplet | contrastive",
         [](RunConfig& c, const std::string&, const std::string& v) { c.ablation.pair = parse_pair_loss(v); }},

        {"train.epochs", "600", "training epochs", NUM(train.epochs, int)},
        {"train.warmup_epochs", "100", "reconstruction-only epochs before adversarial and pair terms", NUM(train.warmup_epochs, int)},
        {"train.g2n_refresh_every", "10", "epochs between pair reselection", NUM(train.g2n_refresh_every, int)},
        {"train.disc_steps_per_epoch", "20", "discriminator updates per epoch", NUM(train.disc_steps_per_epoch, int)},
        {"train.lambda", "0.5", "weight of the adversarial term; pair term gets 1 - lambda", NUM(train.lambda, double)},
        {"train.rho", "0.5", "mask rate", NUM(train.rho, double)},
        {"train.lr", "0.001", "Adam learning rate", NUM(train.lr, double)},
        {"train.weight_decay", "0.0002", "L2 weight decay", NUM(train.weight_decay, double)},
        {"train.gamma", "2", "scaled cosine exponent", NUM(train.gamma, double)},
        {"train.holdout_fraction", "0.1", "spots held out of discriminator fitting", NUM(train.holdout_fraction, double)},

        {"g2n.kg", "20", "cross-slice candidates per anchor", NUM(train.g2n.kg, int)},
        {"g2n.kc", "domains", "clusters for the semantic filter",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train.g2n.kc = parse_number<int>(k, v);
             c.kc_explicit = true;
         }},
        {"g2n.n_pos", "10", "positive budget per anchor (n_pos / 2 sampled)", NUM(train.g2n.n_pos, int)},
        {"g2n.tau", "1", "triplet margin", NUM(train.g2n.tau, double)},

        {"metrics.lisi_k", "30", "neighbours for LISI", NUM(lisi_k, Index)},
        {"metrics.pas_k", "10", "spatial neighbours for PAS", NUM(pas_k, Index)},

        {"synth.n_slices", "3", "synthetic slices", NUM(synth.n_slices, int)},
        {"synth.grid_side", "10", "lattice side length", NUM(synth.grid_side, int)},
        {"synth.n_domains", "4", "vertical-band domains", NUM(synth.n_domains, int)},
        {"synth.n_genes", "200", "genes", NUM(synth.n_genes, int)},
        {"synth.signature_strength", "2", "log-scale domain signature", NUM(synth.signature_strength, double)},
        {"synth.batch_shift_sd", "1", "per-(slice, gene) batch shift sd", NUM(synth.batch_shift_sd, double)},
        {"synth.noise_sd", "0.5", "per-entry noise sd", NUM(synth.noise_sd, double)},
        {"synth.dropout_rate", "0.3", "probability a count is zeroed", NUM(synth.dropout_rate, double)},
        {"synth.drop_domain_on_slice", "false", "remove the last domain from the last slice",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.drop_domain_on_slice = parse_bool(k, v); }},

        {"ablate.seeds", "5", "seeds per variant", NUM(ablate_seeds, int)},
        {"ablate.objective_sweep", "false", "also run full with mse and with contrastive",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.objective_sweep = parse_bool(k, v); }},
    };
    return table;
}

#undef NUM

}

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& e : entries()) {
        if (key == e.key) {
            e.apply(*this, key, trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        set(section.empty() ? key : section + "." + key, value);
    }
}

void RunConfig::finalize() {
    train.seed = seed;
    synth.seed = seed;
    if (!kc_explicit) {
        train.g2n.kc = domains;
    }
    if (domains < 2) {
        throw ConfigError("domains must be >= 2");
    }
    if (n_top_genes < 1) {
        throw ConfigError("ingest.n_top_genes must be >= 1");
    }
    if (k_spatial < 1) {
        throw ConfigError("graph.k_spatial must be >= 1");
    }
    if (lisi_k < 1 || pas_k < 1) {
        throw ConfigError("metrics neighbour counts must be >= 1");
    }
    if (ablate_seeds < 1) {
        throw ConfigError("ablate.seeds must be >= 1");
    }
    train.validate();
    synth.validate();
}

std::string RunConfig::reference() {
    std::ostringstream out;
    out << "Config file: sections in [brackets], one 'key = value' per line, '#' comments.\n"
        << "Keys without a dot are top-level. Every key can also be set with --set key=value.\n\n";
    for (const auto& e : entries()) {
        out << "  " << e.key << " (default: " << (*e.fallback ? e.fallback : "unset") << ")\n      " << e.help << "\n";
    }
    return out.str();
}

}
